#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace risnet {

// Named sub-streams so that independent consumers of one seed never share
// random numbers.
enum class Stream : std::uint64_t {
  kRisChannel = 1,
  kTrainSamples = 2,
  kTestSamples = 3,
  kInit = 4,
  kBatch = 5,
  kRandomPhase = 6,
};

// Counter-keyed generator: the state is a pure function of
// (seed, stream, index), so per-sample streams can be drawn in any order or
// on any thread and still give the same numbers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, Stream stream = Stream::kRisChannel,
               std::uint64_t index = 0);

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer on [0, n), unbiased.
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();
  // Circularly-symmetric CN(0, 1): real and imaginary parts have variance 1/2.
  std::complex<double> complex_normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace risnet
