// Library usage without the CLI: parse a dataset, run the pipeline in memory,
// print the regions and write the SVG.
//
//   spothull_demo demo/data/tiny.csv out.svg

#include <fstream>
#include <iostream>

#include "spothull/app/pipeline.hpp"

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: spothull_demo <spots.csv|spots.json> <out.svg>\n";
    return 2;
  }
  try {
    std::ifstream in(argv[1], std::ios::binary);
    if (!in) throw spothull::Error(std::string("cannot open ") + argv[1]);
    const auto format = spothull::format_from_extension(argv[1]).value_or(spothull::InputFormat::csv);
    const auto dataset = spothull::parse_dataset(in, format);

    spothull::app::PipelineConfig cfg;
    cfg.k = 3;
    cfg.seed = 1;
    const auto result = spothull::app::run_pipeline(dataset, cfg);

    for (const auto& r : result.document.regions) {
      std::cout << r.id << "  cluster " << r.cluster << "  " << result.document.colors[static_cast<std::size_t>(r.cluster)].hex
                << "  spots " << r.member_count << "  area " << spothull::geometry::area(r.polygon) << "\n";
    }
    std::cout << "retained points: " << result.document.retained_points.size() << "\n";
    std::ofstream(argv[2], std::ios::binary) << result.svg;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
