#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "risnet/channel.hpp"
#include "risnet/network.hpp"
#include "risnet/precoder.hpp"

namespace risnet {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  std::uint32_t iterations = 500;
  std::uint32_t batch_size = 512;
  double learning_rate = 8e-4;
  AdamConfig adam;
  // Evaluate on the test set every this many iterations (0 disables).
  std::uint32_t eval_every = 0;
  // Invoke the checkpoint callback every this many iterations (0 disables).
  std::uint32_t checkpoint_every = 0;
  std::uint64_t seed = 0;
  // Rescale the gradient to this L2 norm when it is larger (0 disables).
  double clip_norm = 0.0;
  unsigned threads = 1;
  WmmseOptions wmmse;

  void validate() const;
};

// First and second moments per parameter block.
struct AdamState {
  std::vector<RealMat> m;
  std::vector<RealMat> v;
  std::uint64_t t = 0;

  static AdamState zeros_like(const RisnetParams& params);
  bool identical(const AdamState& other) const;
};

// One bias-corrected Adam step in the ascent direction (+gradient).
void adam_step(RisnetParams& params, const std::vector<RealMat>& grads,
               AdamState& state, double lr, const AdamConfig& cfg = {});

struct TrainRecord {
  std::uint32_t iteration = 0;  // 1-based
  double mean_wsr = 0.0;
  double grad_norm = 0.0;
  double wall_ms = 0.0;
};

struct EvalRecord {
  std::uint32_t iteration = 0;
  double mean_wsr = 0.0;
};

struct TrainLog {
  std::vector<TrainRecord> records;
  std::vector<EvalRecord> evals;

  // Header: iteration,mean_wsr,grad_norm,wall_ms
  void write_csv(const std::filesystem::path& path) const;
  static TrainLog read_csv(const std::filesystem::path& path);
};

// WSR of one sample and its gradient w.r.t. every parameter block. Phi comes
// from the network, V from WMMSE for that Phi; V is then held constant while
// differentiating.
struct SampleGradient {
  double wsr = 0.0;
  std::vector<RealMat> grads;
};

SampleGradient sample_gradient(const RisnetParams& params,
                               const ChannelSample& sample,
                               const ScenarioConfig& scenario,
                               const WmmseOptions& wmmse = {});

// Mean WSR over `indices` with V fixed at the given precoders (one per
// index). Used for finite-difference checks of the batch gradient.
double batch_objective(const RisnetParams& params, const Dataset& data,
                       std::span<const std::size_t> indices,
                       std::span<const ComplexMat> precoders,
                       const ScenarioConfig& scenario);

// Per-sample precoders for the current parameters.
std::vector<ComplexMat> batch_precoders(const RisnetParams& params,
                                        const Dataset& data,
                                        std::span<const std::size_t> indices,
                                        const ScenarioConfig& scenario,
                                        const WmmseOptions& wmmse = {});

// Gradient of batch_objective at fixed precoders.
std::vector<RealMat> batch_gradient(const RisnetParams& params,
                                    const Dataset& data,
                                    std::span<const std::size_t> indices,
                                    std::span<const ComplexMat> precoders,
                                    const ScenarioConfig& scenario);

// Batch indices drawn uniformly with replacement for a 0-based iteration.
std::vector<std::size_t> batch_indices(std::uint64_t seed,
                                       std::uint32_t iteration,
                                       std::size_t dataset_size,
                                       std::uint32_t batch_size);

struct EvalResult {
  double mean_wsr = 0.0;
  std::vector<double> wsr;  // per sample, dataset order
};

// Forward, WMMSE and WSR for every sample. Parameters are not modified.
EvalResult evaluate(const RisnetParams& params, const Dataset& data,
                    const ScenarioConfig& scenario,
                    const WmmseOptions& wmmse = {}, unsigned threads = 1);

struct TrainState {
  RisnetParams params;
  AdamState adam;
};

struct TrainHooks {
  // Called after iteration `it` (1-based) when it is a multiple of
  // checkpoint_every, and once more at the end.
  std::function<void(std::uint32_t it, const TrainState&)> checkpoint;
  std::function<void(const TrainRecord&)> progress;
  const Dataset* test_set = nullptr;
};

// Algorithm: repeat `iterations` times -- draw a batch, run the network,
// compute WMMSE precoders, differentiate the mean batch WSR with V fixed and
// take an Adam ascent step. Starts at iteration state.adam.t, so a state
// restored from a checkpoint resumes where it stopped.
//
// Throws NumericError naming the iteration and sample on a non-finite WSR or
// gradient.
TrainLog train(const Dataset& data, TrainState& state, const TrainConfig& cfg,
               const ScenarioConfig& scenario, const TrainHooks& hooks = {});

// Adam moments for resuming ("RISA" | u8 version | u64 t | u32 blocks |
// moments as f64 little-endian, m blocks then v blocks).
void save_adam_state(const AdamState& state, const std::filesystem::path& path);
AdamState load_adam_state(const std::filesystem::path& path,
                          const RisnetParams& shape);

}  // namespace risnet
