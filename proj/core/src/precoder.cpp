#include "risnet/precoder.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "risnet/channel.hpp"
#include "risnet/errors.hpp"

namespace risnet {

ComplexMat composite_channel(const ComplexMat& g, const ComplexMat& phi,
                             const ComplexMat& h, const ComplexMat& d) {
  if (phi.rows() != 1 || phi.cols() != g.cols()) {
    throw DimensionError("composite channel: phi is " +
                         shape_string(phi.rows(), phi.cols()) + ", expected " +
                         shape_string(1, g.cols()));
  }
  if (h.rows() != g.cols()) {
    throw DimensionError("composite channel: G is " +
                         shape_string(g.rows(), g.cols()) + " but H is " +
                         shape_string(h.rows(), h.cols()));
  }
  if (d.rows() != g.rows() || d.cols() != h.cols()) {
    throw DimensionError("composite channel: D is " +
                         shape_string(d.rows(), d.cols()) + ", expected " +
                         shape_string(g.rows(), h.cols()));
  }
  for (Eigen::Index n = 0; n < phi.cols(); ++n) {
    if (std::abs(std::abs(phi(0, n)) - 1.0) > 1e-12) {
      throw ContractError("composite channel: phi entry " + std::to_string(n) +
                          " is not unit-modulus");
    }
  }
  ComplexMat scaled = g.array().rowwise() * phi.row(0).array();
  return scaled * h + d;
}

namespace {

void check_wsr_args(const ComplexMat& c, std::span<const double> alpha,
                    double rho) {
  if (c.rows() != c.cols()) {
    throw DimensionError("wsr: C is " + shape_string(c.rows(), c.cols()) +
                         ", expected square");
  }
  if (static_cast<Eigen::Index>(alpha.size()) != c.rows()) {
    throw DimensionError("wsr: alpha has " + std::to_string(alpha.size()) +
                         " entries for " + std::to_string(c.rows()) + " users");
  }
  if (!(rho > 0.0)) throw ContractError("wsr: rho must be > 0");
}

}  // namespace

double weighted_sum_rate(const ComplexMat& c, std::span<const double> alpha,
                         double rho) {
  check_wsr_args(c, alpha, rho);
  const double noise = 1.0 / rho;
  double total = 0.0;
  for (Eigen::Index u = 0; u < c.rows(); ++u) {
    double interference = 0.0;
    for (Eigen::Index v = 0; v < c.cols(); ++v) {
      if (v != u) interference += std::norm(c(u, v));
    }
    total += alpha[u] * std::log2(1.0 + std::norm(c(u, u)) / (interference + noise));
  }
  return total;
}

namespace {

double power(const ComplexMat& v) { return v.squaredNorm(); }

void scale_to_power(ComplexMat& v, double e_tr) {
  const double p = power(v);
  if (p > 0.0) v *= std::sqrt(e_tr / p);
}

// Minimizes the weighted MSE for fixed receivers and weights subject to
// tr(V V^H) <= e_tr, then scales to full power (which can only raise every
// SINR). Q = A^H diag(beta) A is diagonalized once so that the transmit power
// is an explicit decreasing function of the multiplier mu.
ComplexMat precoder_update(const ComplexMat& a, const Eigen::VectorXd& beta,
                           const Eigen::VectorXcd& coeff, double e_tr) {
  const Eigen::Index m = a.cols();
  Eigen::MatrixXcd q = a.adjoint() * beta.asDiagonal() * a;
  Eigen::MatrixXcd rhs = a.adjoint() * coeff.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(q);
  if (eig.info() != Eigen::Success) {
    throw NumericError("wmmse: eigendecomposition failed");
  }
  const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXcd t = eig.eigenvectors().adjoint() * rhs;
  Eigen::VectorXd weight(m);
  const double lambda_max = lambda.maxCoeff();
  const double floor = 1e-12 * std::max(lambda_max, 1e-300);
  for (Eigen::Index i = 0; i < m; ++i) weight(i) = t.row(i).squaredNorm();

  // Directions outside the range of Q carry no right-hand side (up to
  // round-off) and are dropped at mu = 0.
  auto power_at = [&](double mu) {
    double p = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double den = lambda(i) + mu;
      if (mu == 0.0 && lambda(i) <= floor) continue;
      p += weight(i) / (den * den);
    }
    return p;
  };
  auto solve = [&](double mu) {
    Eigen::VectorXd inv(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double den = lambda(i) + mu;
      inv(i) = (mu == 0.0 && lambda(i) <= floor) ? 0.0 : 1.0 / den;
    }
    return ComplexMat(eig.eigenvectors() * inv.asDiagonal() * t);
  };

  double mu = 0.0;
  if (power_at(0.0) > e_tr) {
    double hi = std::max(lambda_max, 1e-12);
    int grow = 0;
    while (power_at(hi) > e_tr) {
      hi *= 2.0;
      if (++grow > 2000) throw NumericError("wmmse: cannot bracket multiplier");
    }
    double lo = 0.0;
    bool converged = false;
    for (int step = 0; step < 200; ++step) {
      mu = 0.5 * (lo + hi);
      const double p = power_at(mu);
      if (std::abs(p - e_tr) <= 1e-13 * e_tr || hi - lo <= 1e-15 * hi) {
        converged = true;
        break;
      }
      (p > e_tr ? lo : hi) = mu;
    }
    if (!converged) {
      throw NumericError("wmmse: power bisection did not converge in 200 steps");
    }
  }
  ComplexMat v = solve(mu);
  scale_to_power(v, e_tr);
  return v;
}

}  // namespace

PrecodeResult wmmse_precode(const ComplexMat& a, std::span<const double> alpha,
                            double rho, double e_tr,
                            const WmmseOptions& options,
                            const std::optional<ComplexMat>& init) {
  const Eigen::Index users = a.rows();
  const Eigen::Index m = a.cols();
  if (static_cast<Eigen::Index>(alpha.size()) != users) {
    throw DimensionError("wmmse: alpha has " + std::to_string(alpha.size()) +
                         " entries for " + std::to_string(users) + " users");
  }
  if (options.max_iters < 1) throw ContractError("wmmse: max_iters must be >= 1");
  if (!(rho > 0.0) || !(e_tr > 0.0)) {
    throw ContractError("wmmse: rho and e_tr must be > 0");
  }
  if (!a.allFinite()) throw NumericError("wmmse: channel is not finite");

  PrecodeResult result;
  if (a.cwiseAbs2().sum() == 0.0) {
    result.v = ComplexMat::Zero(m, users);
    result.c = ComplexMat::Zero(users, users);
    result.degenerate = true;
    result.trace.push_back(0.0);
    return result;
  }

  ComplexMat v;
  if (init) {
    if (init->rows() != m || init->cols() != users) {
      throw DimensionError("wmmse: initial V is " +
                           shape_string(init->rows(), init->cols()) +
                           ", expected " + shape_string(m, users));
    }
    v = *init;
    if (power(v) > e_tr * (1.0 + 1e-12) || power(v) == 0.0) scale_to_power(v, e_tr);
  } else {
    v = a.adjoint();
    scale_to_power(v, e_tr);
    // Zero-forcing start with equal column powers. From the matched filter
    // alone the iteration can settle where a user is switched off.
    ComplexMat zf = pseudo_inverse(a);
    Eigen::Index active = 0;
    for (Eigen::Index u = 0; u < users; ++u) {
      const double norm = zf.col(u).norm();
      if (norm > 0.0) {
        zf.col(u) /= norm;
        ++active;
      }
    }
    if (active > 0) {
      zf *= std::sqrt(e_tr / static_cast<double>(active));
      if (weighted_sum_rate(a * zf, alpha, rho) >
          weighted_sum_rate(a * v, alpha, rho)) {
        v = std::move(zf);
      }
    }
  }

  const double noise = 1.0 / rho;
  ComplexMat c = a * v;
  double wsr = weighted_sum_rate(c, alpha, rho);
  result.trace.push_back(wsr);

  Eigen::VectorXd beta(users);
  Eigen::VectorXcd coeff(users);
  for (int iter = 0; iter < options.max_iters; ++iter) {
    for (Eigen::Index u = 0; u < users; ++u) {
      const Complex signal = c(u, u);
      double rest = noise;
      for (Eigen::Index k = 0; k < users; ++k) {
        if (k != u) rest += std::norm(c(u, k));
      }
      const double total = rest + std::norm(signal);
      // Receive scalar r_u = conj(a_u v_u) / T_u; MSE e_u = (T_u - |a_u v_u|^2) / T_u.
      const Complex r = std::conj(signal) / total;
      const double mse = rest / total;
      const double w = 1.0 / mse;
      beta(u) = alpha[u] * w * std::norm(r);
      coeff(u) = alpha[u] * w * std::conj(r);
    }
    ComplexMat next = precoder_update(a, beta, coeff, e_tr);
    ComplexMat next_c = a * next;
    const double next_wsr = weighted_sum_rate(next_c, alpha, rho);
    ++result.iterations_used;
    const double gain = next_wsr - wsr;
    v = std::move(next);
    c = std::move(next_c);
    wsr = next_wsr;
    result.trace.push_back(wsr);
    if (gain < options.tol) break;
  }
  result.v = std::move(v);
  result.c = std::move(c);
  result.wsr = wsr;
  return result;
}

namespace ad {

Var weighted_sum_rate(Tape& t, Var c, std::span<const double> alpha,
                      double rho) {
  const ComplexMat& cv = t.complex(c);
  check_wsr_args(cv, alpha, rho);
  RealMat out(1, 1);
  out(0, 0) = risnet::weighted_sum_rate(cv, alpha, rho);
  std::vector<double> weights(alpha.begin(), alpha.end());
  const std::size_t ops[] = {c.id};
  return t.record(
      std::move(out), ops, [c, weights, rho](Tape& tp, std::size_t self) {
        // r_u = alpha_u / ln2 * (ln S_u - ln(I_u + 1/rho)), S_u = sum_v |c_uv|^2 + 1/rho
        // d r_u / d c_uv = alpha_u / ln2 * (2 c_uv / S_u - [v != u] 2 c_uv / (I_u + 1/rho))
        const ComplexMat& cm = tp.complex(c);
        const double g = tp.real_adjoint(Var{self})(0, 0);
        const double noise = 1.0 / rho;
        ComplexMat& slot = tp.complex_adjoint_slot(c.id);
        for (Eigen::Index u = 0; u < cm.rows(); ++u) {
          double rest = noise;
          for (Eigen::Index v = 0; v < cm.cols(); ++v) {
            if (v != u) rest += std::norm(cm(u, v));
          }
          const double total = rest + std::norm(cm(u, u));
          const double k = g * weights[u] / std::numbers::ln2;
          for (Eigen::Index v = 0; v < cm.cols(); ++v) {
            double factor = 2.0 / total;
            if (v != u) factor -= 2.0 / rest;
            slot(u, v) += k * factor * cm(u, v);
          }
        }
      });
}

}  // namespace ad
}  // namespace risnet
