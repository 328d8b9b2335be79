#include "report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "risnet/errors.hpp"

namespace risnet::cli {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
bool parse(const std::string& s, T& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

struct Accumulator {
  double sum = 0.0;
  std::size_t count = 0;
};

}  // namespace

std::vector<SeriesPoint> build_series(const std::vector<fs::path>& inputs) {
  std::vector<std::string> methods;
  std::map<std::pair<std::string, double>, Accumulator> acc;
  std::set<std::tuple<std::string, double, std::size_t>> seen;

  for (const fs::path& path : inputs) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line_no == 1) {
        if (line != "sample_id,method,rho,wsr") {
          throw FormatError(path.string() + ": expected header sample_id,method,rho,wsr", line_no);
        }
        continue;
      }
      if (line.empty()) continue;
      const auto f = split(line);
      if (f.size() != 4) {
        throw FormatError(path.string() + ": expected 4 fields, got " + std::to_string(f.size()),
                          line_no);
      }
      if (f[1].empty()) throw FormatError(path.string() + ": empty method", line_no);
      double rho = 0.0, wsr = 0.0;
      if (!parse(f[2], rho)) throw FormatError(path.string() + ": bad rho '" + f[2] + "'", line_no);
      if (!parse(f[3], wsr)) throw FormatError(path.string() + ": bad wsr '" + f[3] + "'", line_no);
      if (f[0] == "mean") continue;
      std::size_t sample = 0;
      if (!parse(f[0], sample)) {
        throw FormatError(path.string() + ": bad sample_id '" + f[0] + "'", line_no);
      }
      if (!seen.emplace(f[1], rho, sample).second) {
        throw FormatError(path.string() + ": repeated sample " + f[0] + " for " + f[1], line_no);
      }
      if (std::find(methods.begin(), methods.end(), f[1]) == methods.end()) {
        methods.push_back(f[1]);
      }
      Accumulator& a = acc[{f[1], rho}];
      a.sum += wsr;
      ++a.count;
    }
  }

  std::vector<SeriesPoint> out;
  for (const std::string& m : methods) {
    for (auto it = acc.lower_bound({m, -std::numeric_limits<double>::infinity()}); it != acc.end() && it->first.first == m; ++it) {
      out.push_back({m, it->first.second, it->second.sum / static_cast<double>(it->second.count),
                     it->second.count});
    }
  }
  return out;
}

void write_series(const std::vector<SeriesPoint>& points, const fs::path& out_path) {
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + out_path.string() + " for writing");
  out << "method,rho,mean_wsr,samples\n";
  char line[160];
  for (const SeriesPoint& p : points) {
    std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%zu\n", p.method.c_str(), p.rho, p.mean_wsr,
                  p.samples);
    out << line;
  }
  if (!out) throw IoError("write failed: " + out_path.string());
}

}  // namespace risnet::cli
