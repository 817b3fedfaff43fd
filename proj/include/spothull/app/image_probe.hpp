#pragma once

// Reads pixel dimensions from PNG and JPEG headers without decoding pixels.

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "spothull/core_model.hpp"

namespace spothull::app {

inline std::optional<ImageSize> probe_image_size(const std::vector<unsigned char>& bytes) {
  auto be16 = [&](std::size_t i) { return (static_cast<int>(bytes[i]) << 8) | bytes[i + 1]; };
  auto be32 = [&](std::size_t i) {
    return static_cast<std::int64_t>((std::uint32_t{bytes[i]} << 24) | (std::uint32_t{bytes[i + 1]} << 16) |
                                     (std::uint32_t{bytes[i + 2]} << 8) | std::uint32_t{bytes[i + 3]});
  };

  static constexpr std::array<unsigned char, 8> png_sig{0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  if (bytes.size() >= 24 && std::equal(png_sig.begin(), png_sig.end(), bytes.begin()) && bytes[12] == 'I' &&
      bytes[13] == 'H' && bytes[14] == 'D' && bytes[15] == 'R') {
    return ImageSize{static_cast<int>(be32(16)), static_cast<int>(be32(20))};
  }

  if (bytes.size() >= 4 && bytes[0] == 0xff && bytes[1] == 0xd8) {
    std::size_t i = 2;
    while (i + 4 <= bytes.size()) {
      if (bytes[i] != 0xff) return std::nullopt;
      const unsigned char marker = bytes[i + 1];
      if (marker == 0xff) {
        ++i;
        continue;
      }
      if (marker == 0xd8 || marker == 0x01 || (marker >= 0xd0 && marker <= 0xd7)) {
        i += 2;
        continue;
      }
      const std::size_t len = static_cast<std::size_t>(be16(i + 2));
      const bool sof = marker >= 0xc0 && marker <= 0xcf && marker != 0xc4 && marker != 0xc8 && marker != 0xcc;
      if (sof) {
        if (i + 9 > bytes.size()) return std::nullopt;
        return ImageSize{be16(i + 7), be16(i + 5)};
      }
      i += 2 + len;
    }
  }
  return std::nullopt;
}

inline std::optional<std::vector<unsigned char>> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace spothull::app
