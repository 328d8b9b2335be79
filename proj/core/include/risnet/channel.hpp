#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "risnet/tensor.hpp"

namespace risnet {

// M, N and U of the downlink scenario.
struct Dimensions {
  std::uint32_t bs_antennas = 0;   // M
  std::uint32_t ris_antennas = 0;  // N
  std::uint32_t users = 0;         // U

  bool operator==(const Dimensions&) const = default;
};

struct ScenarioConfig {
  Dimensions dims{9, 1024, 4};
  // Transmit SNR (linear). Noise power is 1 / rho.
  double rho = 1e12;
  double e_tr = 1.0;
  // Per-user weights; empty means uniform 1 / U.
  std::vector<double> alpha;
  std::uint64_t seed = 0;
  std::size_t n_train = 10240;
  std::size_t n_test = 1024;

  // Throws ConfigError naming the offending field.
  void validate() const;
  // alpha, or the uniform weights when alpha is empty.
  std::vector<double> weights() const;
};

// One channel realization with its derived features.
struct ChannelSample {
  std::shared_ptr<const ComplexMat> h;  // N x M, shared by the dataset
  ComplexMat g;                         // U x N
  ComplexMat d;                         // U x M
  ComplexMat j;                         // U x N, D H^+
  RealMat gamma;                        // 4U x N
};

// A shared BS-RIS channel and per-sample (G, D) pairs. The pseudo-inverse
// of H is computed once on construction.
class Dataset {
 public:
  Dataset(Dimensions dims, ComplexMat h, std::vector<ComplexMat> g,
          std::vector<ComplexMat> d);

  const Dimensions& dims() const { return dims_; }
  std::size_t size() const { return g_.size(); }
  const ComplexMat& h() const { return *h_; }
  const std::shared_ptr<const ComplexMat>& shared_h() const { return h_; }
  const ComplexMat& h_pinv() const { return *h_pinv_; }
  const ComplexMat& g(std::size_t i) const { return g_.at(i); }
  const ComplexMat& d(std::size_t i) const { return d_.at(i); }

  // Sample i with J and Gamma derived from the stored channels.
  ChannelSample sample(std::size_t i) const;

  // Bitwise equality of dimensions and stored channels.
  bool identical(const Dataset& other) const;

 private:
  Dimensions dims_;
  std::shared_ptr<const ComplexMat> h_;
  std::shared_ptr<const ComplexMat> h_pinv_;
  std::vector<ComplexMat> g_;
  std::vector<ComplexMat> d_;
};

enum class Split { kTrain, kTest };

// Rayleigh ensemble: every entry i.i.d. CN(0, 1). H comes from the seed
// alone, so the train and test splits of one config share it; each sample
// (G, D) comes from its own (seed, split, index) stream.
Dataset sample_dataset(const ScenarioConfig& cfg, Split split);

// Moore-Penrose pseudo-inverse by SVD; singular values below
// tau * sigma_max are treated as zero.
ComplexMat pseudo_inverse(const ComplexMat& m, double tau = 1e-12);

// J = D H^+.
ComplexMat compute_equivalent_direct(const ComplexMat& d, const ComplexMat& h);

// 4U x N features. Column n is
// (|g_1n|, arg g_1n, ..., |g_Un|, arg g_Un, |j_1n|, arg j_1n, ..., |j_Un|, arg j_Un).
// Arguments lie in (-pi, pi]; arg(0) is 0.
RealMat extract_features(const ComplexMat& g, const ComplexMat& j);

// Rows [|g_un|, arg g_un, |j_un|, arg j_un] of a full feature matrix.
RealMat user_features(const RealMat& gamma, std::uint32_t user,
                      std::uint32_t users);

// Binary dataset file, little-endian:
//   "RISD" | u8 version | u32 M | u32 N | u32 U | u32 S
//   H (N*M complex) | S x { G (U*N complex), D (U*M complex) }
// with each complex entry written as f64 real then f64 imag, row-major.
inline constexpr std::size_t kDatasetHeaderBytes = 21;
inline constexpr std::uint8_t kDatasetVersion = 1;

std::size_t dataset_file_size(const Dimensions& dims, std::size_t samples);
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);
// Only the header; for validating a file against a config before loading it.
Dimensions read_dataset_dims(const std::filesystem::path& path,
                             std::size_t* samples = nullptr);

}  // namespace risnet
