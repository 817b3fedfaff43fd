#pragma once

// sRGB <-> Oklab <-> OKHSL conversions and the cluster palette built on them.
//
// The OKHSL mapping follows Björn Ottosson's reference construction: hue and
// chroma live in Oklab, lightness passes through a toe curve, and saturation
// is piecewise-interpolated between C_0, C_mid and the sRGB gamut boundary
// C_max for the given hue and lightness.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "spothull/clustering.hpp"
#include "spothull/core_model.hpp"

namespace spothull::color {

struct Rgb {
  double r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Oklab {
  double L = 0, a = 0, b = 0;
};

/// Hue in degrees [0, 360), saturation and lightness in [0, 1]. Colors on the
/// sRGB gamut boundary may map to s slightly above 1 (up to ~1.006) because the
/// maximum-chroma estimate is approximate; s is left unclamped so the mapping inverts.
struct OkhslColor {
  double h = 0, s = 0, l = 0;
  friend bool operator==(const OkhslColor&, const OkhslColor&) = default;
};

struct Rgb8 {
  int r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

struct ColorAssignment {
  int cluster = 0;
  OkhslColor okhsl;
  Rgb srgb;
  std::string hex;
};

enum class Transfer { linear, gamma };

// -----------------------------------------------------------------------------
// Transfer functions and Oklab
// -----------------------------------------------------------------------------

inline double srgb_encode(double x) {
  return x >= 0.0031308 ? 1.055 * std::pow(x, 1.0 / 2.4) - 0.055 : 12.92 * x;
}

inline double srgb_decode(double x) {
  return x >= 0.04045 ? std::pow((x + 0.055) / 1.055, 2.4) : x / 12.92;
}

inline Oklab oklab_from_linear_srgb(const Rgb& c) {
  const double l = 0.4122214708 * c.r + 0.5363325363 * c.g + 0.0514459929 * c.b;
  const double m = 0.2119034982 * c.r + 0.6806995451 * c.g + 0.1073969566 * c.b;
  const double s = 0.0883024619 * c.r + 0.2817188376 * c.g + 0.6299787005 * c.b;
  const double l_ = std::cbrt(l), m_ = std::cbrt(m), s_ = std::cbrt(s);
  return {0.2104542553 * l_ + 0.7936177850 * m_ - 0.0040720468 * s_,
          1.9779984951 * l_ - 2.4285922050 * m_ + 0.4505937099 * s_,
          0.0259040371 * l_ + 0.7827717662 * m_ - 0.8086757660 * s_};
}

inline Rgb linear_srgb_from_oklab(const Oklab& c) {
  const double l_ = c.L + 0.3963377774 * c.a + 0.2158037573 * c.b;
  const double m_ = c.L - 0.1055613458 * c.a - 0.0638541728 * c.b;
  const double s_ = c.L - 0.0894841775 * c.a - 1.2914855480 * c.b;
  const double l = l_ * l_ * l_, m = m_ * m_ * m_, s = s_ * s_ * s_;
  return {+4.0767416621 * l - 3.3077115913 * m + 0.2309699292 * s,
          -1.2684380046 * l + 2.6097574011 * m - 0.3413193965 * s,
          -0.0041960863 * l - 0.7034186147 * m + 1.7076147010 * s};
}

/// Oklab from an sRGB triple in [0, 1]; gamma-encoded input is linearized first.
inline Oklab oklab_from_srgb(const Rgb& rgb, Transfer transfer = Transfer::gamma) {
  for (double v : {rgb.r, rgb.g, rgb.b}) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error("oklab_from_srgb: component out of [0, 1]");
  }
  if (transfer == Transfer::linear) return oklab_from_linear_srgb(rgb);
  return oklab_from_linear_srgb({srgb_decode(rgb.r), srgb_decode(rgb.g), srgb_decode(rgb.b)});
}

namespace detail {

struct LC {
  double L, C;
};
struct ST {
  double S, T;
};
struct Cs {
  double C_0, C_mid, C_max;
};

// Maximum saturation S = C/L representable in sRGB for the normalized hue (a, b).
inline double compute_max_saturation(double a, double b) {
  double k0, k1, k2, k3, k4, wl, wm, ws;
  if (-1.88170328 * a - 0.80936493 * b > 1) {
    k0 = +1.19086277; k1 = +1.76576728; k2 = +0.59662641; k3 = +0.75515197; k4 = +0.56771245;
    wl = +4.0767416621; wm = -3.3077115913; ws = +0.2309699292;
  } else if (1.81444104 * a - 1.19445276 * b > 1) {
    k0 = +0.73956515; k1 = -0.45954404; k2 = +0.08285427; k3 = +0.12541070; k4 = +0.14503204;
    wl = -1.2684380046; wm = +2.6097574011; ws = -0.3413193965;
  } else {
    k0 = +1.35733652; k1 = -0.00915799; k2 = -1.15130210; k3 = -0.50559606; k4 = +0.00692167;
    wl = -0.0041960863; wm = -0.7034186147; ws = +1.7076147010;
  }

  double S = k0 + k1 * a + k2 * b + k3 * a * a + k4 * a * b;

  const double k_l = +0.3963377774 * a + 0.2158037573 * b;
  const double k_m = -0.1055613458 * a - 0.0638541728 * b;
  const double k_s = -0.0894841775 * a - 1.2914855480 * b;

  // One Halley step refines the polynomial guess.
  const double l_ = 1.0 + S * k_l, m_ = 1.0 + S * k_m, s_ = 1.0 + S * k_s;
  const double l = l_ * l_ * l_, m = m_ * m_ * m_, s = s_ * s_ * s_;
  const double l_dS = 3.0 * k_l * l_ * l_, m_dS = 3.0 * k_m * m_ * m_, s_dS = 3.0 * k_s * s_ * s_;
  const double l_dS2 = 6.0 * k_l * k_l * l_, m_dS2 = 6.0 * k_m * k_m * m_, s_dS2 = 6.0 * k_s * k_s * s_;
  const double f = wl * l + wm * m + ws * s;
  const double f1 = wl * l_dS + wm * m_dS + ws * s_dS;
  const double f2 = wl * l_dS2 + wm * m_dS2 + ws * s_dS2;
  return S - f * f1 / (f1 * f1 - 0.5 * f * f2);
}

inline LC find_cusp(double a, double b) {
  const double S_cusp = compute_max_saturation(a, b);
  const Rgb rgb = linear_srgb_from_oklab({1.0, S_cusp * a, S_cusp * b});
  const double L_cusp = std::cbrt(1.0 / std::max({rgb.r, rgb.g, rgb.b}));
  return {L_cusp, L_cusp * S_cusp};
}

// Intersection of the line L = L0 (1 - t) + t L1, C = t C1 with the gamut boundary.
inline double find_gamut_intersection(double a, double b, double L1, double C1, double L0, LC cusp) {
  double t;
  if (((L1 - L0) * cusp.C - (cusp.L - L0) * C1) <= 0.0) {
    t = cusp.C * L0 / (C1 * cusp.L + cusp.C * (L0 - L1));
  } else {
    t = cusp.C * (L0 - 1.0) / (C1 * (cusp.L - 1.0) + cusp.C * (L0 - L1));

    const double dL = L1 - L0, dC = C1;
    const double k_l = +0.3963377774 * a + 0.2158037573 * b;
    const double k_m = -0.1055613458 * a - 0.0638541728 * b;
    const double k_s = -0.0894841775 * a - 1.2914855480 * b;
    const double l_dt = dL + dC * k_l, m_dt = dL + dC * k_m, s_dt = dL + dC * k_s;

    const double L = L0 * (1.0 - t) + t * L1;
    const double C = t * C1;
    const double l_ = L + C * k_l, m_ = L + C * k_m, s_ = L + C * k_s;
    const double l = l_ * l_ * l_, m = m_ * m_ * m_, s = s_ * s_ * s_;
    const double ldt = 3 * l_dt * l_ * l_, mdt = 3 * m_dt * m_ * m_, sdt = 3 * s_dt * s_ * s_;
    const double ldt2 = 6 * l_dt * l_dt * l_, mdt2 = 6 * m_dt * m_dt * m_, sdt2 = 6 * s_dt * s_dt * s_;

    auto halley = [&](double wl, double wm, double ws) {
      const double f = wl * l + wm * m + ws * s - 1.0;
      const double f1 = wl * ldt + wm * mdt + ws * sdt;
      const double f2 = wl * ldt2 + wm * mdt2 + ws * sdt2;
      const double u = f1 / (f1 * f1 - 0.5 * f * f2);
      return u >= 0.0 ? -f * u : std::numeric_limits<double>::max();
    };
    const double t_r = halley(4.0767416621, -3.3077115913, 0.2309699292);
    const double t_g = halley(-1.2684380046, 2.6097574011, -0.3413193965);
    const double t_b = halley(-0.0041960863, -0.7034186147, 1.7076147010);
    t += std::min({t_r, t_g, t_b});
  }
  return t;
}

inline constexpr double kToeK1 = 0.206;
inline constexpr double kToeK2 = 0.03;
inline constexpr double kToeK3 = (1.0 + kToeK1) / (1.0 + kToeK2);

inline double toe(double x) {
  const double u = kToeK3 * x - kToeK1;
  return 0.5 * (u + std::sqrt(u * u + 4.0 * kToeK2 * kToeK3 * x));
}

inline double toe_inv(double x) { return (x * x + kToeK1 * x) / (kToeK3 * (x + kToeK2)); }

inline ST to_st(LC cusp) { return {cusp.C / cusp.L, cusp.C / (1.0 - cusp.L)}; }

// Smooth approximation of the cusp location.
inline ST get_st_mid(double a_, double b_) {
  const double S = 0.11516993 + 1.0 / (+7.44778970 + 4.15901240 * b_ +
                                       a_ * (-2.19557347 + 1.75198401 * b_ +
                                             a_ * (-2.13704948 - 10.02301043 * b_ +
                                                   a_ * (-4.24894561 + 5.38770819 * b_ + 4.69891013 * a_))));
  const double T = 0.11239642 + 1.0 / (+1.61320320 - 0.68124379 * b_ +
                                       a_ * (+0.40370612 + 0.90148123 * b_ +
                                             a_ * (-0.27087943 + 0.61223990 * b_ +
                                                   a_ * (+0.00299215 - 0.45399568 * b_ - 0.14661872 * a_))));
  return {S, T};
}

inline Cs get_cs(double L, double a_, double b_) {
  const LC cusp = find_cusp(a_, b_);
  const double C_max = find_gamut_intersection(a_, b_, L, 1.0, L, cusp);
  const ST st_max = to_st(cusp);
  const double k = C_max / std::min(L * st_max.S, (1.0 - L) * st_max.T);

  const ST st_mid = get_st_mid(a_, b_);
  double C_a = L * st_mid.S;
  double C_b = (1.0 - L) * st_mid.T;
  const double C_mid =
      0.9 * k * std::sqrt(std::sqrt(1.0 / (1.0 / (C_a * C_a * C_a * C_a) + 1.0 / (C_b * C_b * C_b * C_b))));

  C_a = L * 0.4;
  C_b = (1.0 - L) * 0.8;
  const double C_0 = std::sqrt(1.0 / (1.0 / (C_a * C_a) + 1.0 / (C_b * C_b)));
  return {C_0, C_mid, C_max};
}

inline constexpr double kMid = 0.8;
inline constexpr double kMidInv = 1.25;

/// Residual excursions past [0, 1] come from rounding only.
inline double clamp_unit(double v) {
  constexpr double bound = 1e-5;
  if (v < -bound || v > 1.0 + bound) throw Error("okhsl conversion left the sRGB gamut");
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace detail

inline double normalize_hue(double degrees) {
  double h = std::fmod(degrees, 360.0);
  if (h < 0) h += 360.0;
  if (h >= 360.0) h = 0.0;
  return h;
}

/// Gamma-encoded sRGB in [0, 1].
inline Rgb srgb_from_okhsl(const OkhslColor& c) {
  const double l = c.l, s = c.s;
  if (l >= 1.0) return {1.0, 1.0, 1.0};
  if (l <= 0.0) return {0.0, 0.0, 0.0};

  const double turns = normalize_hue(c.h) / 360.0;
  const double a_ = std::cos(2.0 * std::numbers::pi * turns);
  const double b_ = std::sin(2.0 * std::numbers::pi * turns);
  const double L = detail::toe_inv(l);

  double C = 0.0;
  if (s > 0.0) {
    const detail::Cs cs = detail::get_cs(L, a_, b_);
    if (s < detail::kMid) {
      const double t = detail::kMidInv * s;
      const double k_1 = detail::kMid * cs.C_0;
      const double k_2 = 1.0 - k_1 / cs.C_mid;
      C = t * k_1 / (1.0 - k_2 * t);
    } else {
      const double t = (s - detail::kMid) / (1.0 - detail::kMid);
      const double k_0 = cs.C_mid;
      const double k_1 = (1.0 - detail::kMid) * cs.C_mid * cs.C_mid * detail::kMidInv * detail::kMidInv / cs.C_0;
      const double k_2 = 1.0 - k_1 / (cs.C_max - cs.C_mid);
      C = k_0 + t * k_1 / (1.0 - k_2 * t);
    }
  }

  const Rgb lin = linear_srgb_from_oklab({L, C * a_, C * b_});
  return {detail::clamp_unit(srgb_encode(lin.r)), detail::clamp_unit(srgb_encode(lin.g)),
          detail::clamp_unit(srgb_encode(lin.b))};
}

inline OkhslColor okhsl_from_srgb(const Rgb& rgb) {
  const Oklab lab = oklab_from_srgb(rgb, Transfer::gamma);
  const double C = std::hypot(lab.a, lab.b);
  const double l = std::clamp(detail::toe(lab.L), 0.0, 1.0);
  // Achromatic, black or white: hue is undefined and saturation zero. The
  // published matrices leave grays at C ~ 1e-7.
  if (C < 1e-6 || lab.L <= 0.0 || lab.L >= 1.0) return {0.0, 0.0, l};

  const double a_ = lab.a / C;
  const double b_ = lab.b / C;
  const double h = normalize_hue(180.0 + 180.0 * std::atan2(-lab.b, -lab.a) / std::numbers::pi);

  const detail::Cs cs = detail::get_cs(lab.L, a_, b_);
  double s;
  if (C < cs.C_mid) {
    const double k_1 = detail::kMid * cs.C_0;
    const double k_2 = 1.0 - k_1 / cs.C_mid;
    const double t = C / (k_1 + k_2 * C);
    s = t * detail::kMid;
  } else {
    const double k_0 = cs.C_mid;
    const double k_1 = (1.0 - detail::kMid) * cs.C_mid * cs.C_mid * detail::kMidInv * detail::kMidInv / cs.C_0;
    const double k_2 = 1.0 - k_1 / (cs.C_max - cs.C_mid);
    const double t = (C - k_0) / (k_1 + k_2 * (C - k_0));
    s = detail::kMid + (1.0 - detail::kMid) * t;
  }
  return {h, s, l};
}

// -----------------------------------------------------------------------------
// Hex encoding
// -----------------------------------------------------------------------------

/// 8-bit quantization, round half up.
inline Rgb8 quantize(const Rgb& c) {
  auto q = [](double v) { return static_cast<int>(std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5)); };
  return {q(c.r), q(c.g), q(c.b)};
}

inline std::string to_hex(const Rgb8& c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

inline std::string to_hex(const Rgb& c) { return to_hex(quantize(c)); }

inline Rgb8 parse_hex(const std::string& hex) {
  auto nibble = [&](char ch) -> int {
    if (ch >= '0' && ch <= '9') return ch - '0';
    if (ch >= 'a' && ch <= 'f') return ch - 'a' + 10;
    if (ch >= 'A' && ch <= 'F') return ch - 'A' + 10;
    throw Error("invalid hex color '" + hex + "'");
  };
  if (hex.size() != 7 || hex[0] != '#') throw Error("invalid hex color '" + hex + "'");
  auto byte = [&](std::size_t i) { return nibble(hex[i]) * 16 + nibble(hex[i + 1]); };
  return {byte(1), byte(3), byte(5)};
}

// -----------------------------------------------------------------------------
// Palette from the centroid embedding
// -----------------------------------------------------------------------------

struct PaletteOptions {
  double s_fixed = 0.9;
  double l_fixed = 0.75;
  double s_min = 0.35;
};

inline ColorAssignment make_assignment(int cluster, const OkhslColor& c) {
  ColorAssignment out;
  out.cluster = cluster;
  out.okhsl = c;
  out.srgb = srgb_from_okhsl(c);
  out.hex = to_hex(out.srgb);
  return out;
}

/// Angle around the embedding centroid becomes hue (0 deg on +x,
/// counterclockwise); relative radius becomes saturation.
inline std::vector<ColorAssignment> colors_from_embedding(const std::vector<clustering::Embedding2>& embedding,
                                                          const PaletteOptions& opt = {}) {
  if (embedding.empty()) throw Error("colors_from_embedding: empty embedding");
  double cx = 0.0, cy = 0.0;
  for (const auto& e : embedding) {
    cx += e[0];
    cy += e[1];
  }
  cx /= static_cast<double>(embedding.size());
  cy /= static_cast<double>(embedding.size());

  std::vector<double> radius(embedding.size());
  double max_radius = 0.0;
  for (std::size_t i = 0; i < embedding.size(); ++i) {
    radius[i] = std::hypot(embedding[i][0] - cx, embedding[i][1] - cy);
    max_radius = std::max(max_radius, radius[i]);
  }

  std::vector<ColorAssignment> out;
  out.reserve(embedding.size());
  for (std::size_t i = 0; i < embedding.size(); ++i) {
    OkhslColor c{0.0, opt.s_min, opt.l_fixed};
    if (max_radius > 0.0 && radius[i] > 0.0) {
      c.h = normalize_hue(std::atan2(embedding[i][1] - cy, embedding[i][0] - cx) * 180.0 / std::numbers::pi);
      c.s = std::max(opt.s_min, opt.s_fixed * radius[i] / max_radius);
    }
    out.push_back(make_assignment(static_cast<int>(i), c));
  }
  return out;
}

}  // namespace spothull::color
