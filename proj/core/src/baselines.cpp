#include "risnet/baselines.hpp"

#include <cmath>
#include <numbers>

#include "risnet/errors.hpp"
#include "risnet/network.hpp"

namespace risnet {

PrecodeResult phase_eval(const ChannelSample& sample, const RealMat& psi,
                         const ScenarioConfig& scenario,
                         const WmmseOptions& wmmse) {
  const ComplexMat a =
      composite_channel(sample.g, phases_to_phi(psi), *sample.h, sample.d);
  const std::vector<double> alpha = scenario.weights();
  return wmmse_precode(a, alpha, scenario.rho, scenario.e_tr, wmmse);
}

double random_phase_eval(const ChannelSample& sample,
                         const ScenarioConfig& scenario, Rng& rng,
                         const WmmseOptions& wmmse) {
  RealMat psi(1, sample.g.cols());
  for (Eigen::Index n = 0; n < psi.cols(); ++n) {
    psi(0, n) = 2.0 * std::numbers::pi * rng.uniform();
  }
  return phase_eval(sample, psi, scenario, wmmse).wsr;
}

void BcdConfig::validate() const {
  if (grid_size < 2) throw ConfigError("bcd.grid_size must be >= 2");
  if (max_outer_sweeps < 1) throw ConfigError("bcd.max_sweeps must be >= 1");
  if (!(tol >= 0.0)) throw ConfigError("bcd.tol must be >= 0");
}

BcdResult bcd_optimize(const ChannelSample& sample,
                       const ScenarioConfig& scenario, const BcdConfig& cfg,
                       const WmmseOptions& wmmse) {
  cfg.validate();
  const std::vector<double> alpha = scenario.weights();
  const ComplexMat& g = sample.g;
  const ComplexMat& h = *sample.h;
  const Eigen::Index n_ris = g.cols();

  BcdResult out;
  out.psi = RealMat::Zero(1, n_ris);
  ComplexMat phi = ComplexMat::Ones(1, n_ris);
  ComplexMat a = composite_channel(g, phi, h, sample.d);
  PrecodeResult pre = wmmse_precode(a, alpha, scenario.rho, scenario.e_tr, wmmse);
  ComplexMat v = pre.v;
  double wsr = pre.wsr;
  out.trace.push_back(wsr);

  std::vector<Complex> grid(cfg.grid_size);
  for (std::uint32_t k = 0; k < cfg.grid_size; ++k) {
    grid[k] = std::polar(1.0, 2.0 * std::numbers::pi * k / cfg.grid_size);
  }

  // With V fixed, only the product A V matters: C = sum_n phi_n g_n (h_n V) + D V,
  // so each antenna contributes a rank-one U x U term.
  for (std::uint32_t sweep = 0; sweep < cfg.max_outer_sweeps; ++sweep) {
    const double sweep_start = wsr;
    const ComplexMat hv = h * v;
    ComplexMat c = a * v;
    for (Eigen::Index n = 0; n < n_ris; ++n) {
      const ComplexMat term = g.col(n) * hv.row(n);
      const ComplexMat base = c - phi(0, n) * term;
      double best = weighted_sum_rate(base + phi(0, n) * term, alpha, scenario.rho);
      std::int64_t best_k = -1;
      for (std::uint32_t k = 0; k < cfg.grid_size; ++k) {
        const double w =
            weighted_sum_rate(base + grid[k] * term, alpha, scenario.rho);
        if (w > best) {
          best = w;
          best_k = k;
        }
      }
      if (best_k >= 0) {
        phi(0, n) = grid[static_cast<std::size_t>(best_k)];
        out.psi(0, n) = 2.0 * std::numbers::pi * best_k / cfg.grid_size;
      }
      c = base + phi(0, n) * term;
      wsr = best;
    }
    a = composite_channel(g, phi, h, sample.d);
    if (cfg.rewmmse_every_sweep) {
      pre = wmmse_precode(a, alpha, scenario.rho, scenario.e_tr, wmmse, v);
      // Warm-started WMMSE never decreases the WSR beyond round-off; keep the
      // incumbent precoder if it did.
      if (pre.wsr >= wsr) {
        v = pre.v;
        wsr = pre.wsr;
      }
    }
    out.trace.push_back(wsr);
    ++out.sweeps;
    if (wsr - sweep_start < cfg.tol) break;
  }
  out.v = std::move(v);
  out.wsr = wsr;
  return out;
}

}  // namespace risnet
