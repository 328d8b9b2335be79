#pragma once

#include <cstdint>
#include <vector>

#include "risnet/channel.hpp"
#include "risnet/precoder.hpp"
#include "risnet/rng.hpp"

namespace risnet {

// WMMSE precoding for the RIS configuration e^{j psi} and the resulting WSR.
PrecodeResult phase_eval(const ChannelSample& sample, const RealMat& psi,
                         const ScenarioConfig& scenario,
                         const WmmseOptions& wmmse = {});

// Phases i.i.d. uniform on [0, 2 pi), then WMMSE and WSR.
double random_phase_eval(const ChannelSample& sample,
                         const ScenarioConfig& scenario, Rng& rng,
                         const WmmseOptions& wmmse = {});

struct BcdConfig {
  // Candidate phases 2 pi k / K for k < K.
  std::uint32_t grid_size = 32;
  std::uint32_t max_outer_sweeps = 20;
  // Stop after a sweep that improves the WSR by less than this.
  double tol = 1e-4;
  // Recompute the WMMSE precoder (warm-started) after every sweep.
  bool rewmmse_every_sweep = true;

  void validate() const;
};

struct BcdResult {
  RealMat psi;  // 1 x N
  ComplexMat v;
  double wsr = 0.0;
  // WSR at the start and after each sweep; non-decreasing.
  std::vector<double> trace;
  std::uint32_t sweeps = 0;
};

// Cyclic per-antenna phase search alternating with WMMSE. Starts from
// psi = 0 with the WMMSE precoder for Phi = I. Within a sweep, V is fixed and
// each antenna in turn takes the best of the K grid phases and its current
// phase (ties keep the current phase).
BcdResult bcd_optimize(const ChannelSample& sample,
                       const ScenarioConfig& scenario, const BcdConfig& cfg,
                       const WmmseOptions& wmmse = {});

}  // namespace risnet
