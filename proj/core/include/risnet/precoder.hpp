#pragma once

#include <optional>
#include <span>
#include <vector>

#include "risnet/tensor.hpp"

namespace risnet {

struct WmmseOptions {
  int max_iters = 50;
  // Stop when one iteration improves the WSR by less than this (bit/Hz/s).
  double tol = 1e-6;
};

struct PrecodeResult {
  ComplexMat v;  // M x U precoder
  ComplexMat c;  // U x U composite A V
  double wsr = 0.0;
  int iterations_used = 0;
  // WSR of the initial precoder followed by one entry per iteration.
  std::vector<double> trace;
  // Set when A is identically zero; V is then zero.
  bool degenerate = false;
};

// A = G diag(phi) H + D, without materializing diag(phi). Every phi entry
// must have unit modulus within 1e-12.
ComplexMat composite_channel(const ComplexMat& g, const ComplexMat& phi,
                             const ComplexMat& h, const ComplexMat& d);

// sum_u alpha_u log2(1 + |c_uu|^2 / (sum_{v != u} |c_uv|^2 + 1/rho))
double weighted_sum_rate(const ComplexMat& c, std::span<const double> alpha,
                         double rho);

// Iteratively weighted MMSE precoding for the MISO broadcast channel with
// effective channel A (U x M) and noise power 1 / rho. Each iteration updates
// the MMSE receive scalars, the alpha-scaled MSE weights and the precoder,
// whose Lagrange multiplier is found by bisection so that tr(V V^H) = e_tr.
// Starts from whichever of the matched filter A^H and the equal-power
// zero-forcing precoder pinv(A) gives the higher WSR, unless `init` is given.
PrecodeResult wmmse_precode(const ComplexMat& a, std::span<const double> alpha,
                            double rho, double e_tr,
                            const WmmseOptions& options = {},
                            const std::optional<ComplexMat>& init = std::nullopt);

namespace ad {
class Tape;
struct Var;
// Weighted sum-rate of a complex U x U node as a real 1x1 node.
Var weighted_sum_rate(Tape& t, Var c, std::span<const double> alpha, double rho);
}  // namespace ad

}  // namespace risnet
