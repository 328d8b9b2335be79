#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace risnet::cli {

struct SeriesPoint {
  std::string method;
  double rho = 0.0;
  double mean_wsr = 0.0;
  std::size_t samples = 0;
};

// Reads eval CSVs (`sample_id,method,rho,wsr`) and averages the per-sample
// rows for every (method, rho); "mean" rows are skipped. Methods keep their
// order of first appearance, rho ascends within a method. Throws FormatError
// with the line number on a malformed row or a repeated sample.
std::vector<SeriesPoint> build_series(const std::vector<std::filesystem::path>& inputs);

// Header `method,rho,mean_wsr,samples`, then one line per point.
void write_series(const std::vector<SeriesPoint>& points, const std::filesystem::path& out);

}  // namespace risnet::cli
