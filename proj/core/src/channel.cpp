#include "risnet/channel.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SVD>

#include "risnet/errors.hpp"
#include "risnet/rng.hpp"

namespace risnet {

void ScenarioConfig::validate() const {
  if (dims.bs_antennas < 1) throw ConfigError("scenario.n_bs must be >= 1");
  if (dims.ris_antennas < 1) throw ConfigError("scenario.n_ris must be >= 1");
  if (dims.users < 1) throw ConfigError("scenario.n_users must be >= 1");
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw ConfigError("scenario.rho must be finite and > 0");
  }
  if (!(e_tr > 0.0) || !std::isfinite(e_tr)) {
    throw ConfigError("scenario.e_tr must be finite and > 0");
  }
  if (!alpha.empty()) {
    if (alpha.size() != dims.users) {
      throw ConfigError("scenario.alpha has " + std::to_string(alpha.size()) +
                        " entries, expected " + std::to_string(dims.users));
    }
    double sum = 0.0;
    for (double a : alpha) {
      if (!(a >= 0.0)) throw ConfigError("scenario.alpha entries must be >= 0");
      sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw ConfigError("scenario.alpha must sum to 1");
    }
  }
}

std::vector<double> ScenarioConfig::weights() const {
  if (!alpha.empty()) return alpha;
  return std::vector<double>(dims.users, 1.0 / dims.users);
}

Dataset::Dataset(Dimensions dims, ComplexMat h, std::vector<ComplexMat> g,
                 std::vector<ComplexMat> d)
    : dims_(dims), g_(std::move(g)), d_(std::move(d)) {
  const Eigen::Index m = dims.bs_antennas;
  const Eigen::Index n = dims.ris_antennas;
  const Eigen::Index u = dims.users;
  if (h.rows() != n || h.cols() != m) {
    throw DimensionError("dataset: H is " + shape_string(h.rows(), h.cols()) +
                         ", expected " + shape_string(n, m));
  }
  if (g_.size() != d_.size()) {
    throw DimensionError("dataset: G and D sample counts differ");
  }
  for (std::size_t i = 0; i < g_.size(); ++i) {
    if (g_[i].rows() != u || g_[i].cols() != n) {
      throw DimensionError("dataset: sample " + std::to_string(i) + " G is " +
                           shape_string(g_[i].rows(), g_[i].cols()));
    }
    if (d_[i].rows() != u || d_[i].cols() != m) {
      throw DimensionError("dataset: sample " + std::to_string(i) + " D is " +
                           shape_string(d_[i].rows(), d_[i].cols()));
    }
  }
  h_pinv_ = std::make_shared<const ComplexMat>(pseudo_inverse(h));
  h_ = std::make_shared<const ComplexMat>(std::move(h));
}

ChannelSample Dataset::sample(std::size_t i) const {
  ChannelSample s;
  s.h = h_;
  s.g = g_.at(i);
  s.d = d_.at(i);
  s.j = s.d * *h_pinv_;
  s.gamma = extract_features(s.g, s.j);
  return s;
}

bool Dataset::identical(const Dataset& other) const {
  if (!(dims_ == other.dims_) || size() != other.size()) return false;
  if (!bitwise_equal(*h_, *other.h_)) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (!bitwise_equal(g_[i], other.g_[i]) || !bitwise_equal(d_[i], other.d_[i]))
      return false;
  }
  return true;
}

namespace {

ComplexMat draw(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  ComplexMat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.complex_normal();
  return m;
}

double feature_arg(Complex z) {
  if (z == Complex(0.0, 0.0)) return 0.0;
  const double a = std::arg(z);
  // atan2 returns -pi for a negative real with a -0.0 imaginary part.
  return a <= -std::numbers::pi ? std::numbers::pi : a;
}

}  // namespace

Dataset sample_dataset(const ScenarioConfig& cfg, Split split) {
  cfg.validate();
  const Dimensions dims = cfg.dims;
  Rng h_rng(cfg.seed, Stream::kRisChannel, 0);
  ComplexMat h = draw(h_rng, dims.ris_antennas, dims.bs_antennas);

  const std::size_t count = split == Split::kTrain ? cfg.n_train : cfg.n_test;
  const Stream stream =
      split == Split::kTrain ? Stream::kTrainSamples : Stream::kTestSamples;
  std::vector<ComplexMat> g(count);
  std::vector<ComplexMat> d(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(cfg.seed, stream, i);
    g[i] = draw(rng, dims.users, dims.ris_antennas);
    d[i] = draw(rng, dims.users, dims.bs_antennas);
  }
  return Dataset(dims, std::move(h), std::move(g), std::move(d));
}

ComplexMat pseudo_inverse(const ComplexMat& m, double tau) {
  if (m.size() == 0) return ComplexMat(m.cols(), m.rows());
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU |
                                                Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = tau * sv(0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

ComplexMat compute_equivalent_direct(const ComplexMat& d, const ComplexMat& h) {
  if (d.cols() != h.cols()) {
    throw DimensionError("equivalent direct: D is " +
                         shape_string(d.rows(), d.cols()) + " but H is " +
                         shape_string(h.rows(), h.cols()));
  }
  return d * pseudo_inverse(h);
}

RealMat extract_features(const ComplexMat& g, const ComplexMat& j) {
  if (g.rows() != j.rows() || g.cols() != j.cols()) {
    throw DimensionError("features: G is " + shape_string(g.rows(), g.cols()) +
                         " but J is " + shape_string(j.rows(), j.cols()));
  }
  const Eigen::Index users = g.rows();
  RealMat gamma(4 * users, g.cols());
  for (Eigen::Index u = 0; u < users; ++u) {
    for (Eigen::Index n = 0; n < g.cols(); ++n) {
      gamma(2 * u, n) = std::abs(g(u, n));
      gamma(2 * u + 1, n) = feature_arg(g(u, n));
      gamma(2 * users + 2 * u, n) = std::abs(j(u, n));
      gamma(2 * users + 2 * u + 1, n) = feature_arg(j(u, n));
    }
  }
  return gamma;
}

RealMat user_features(const RealMat& gamma, std::uint32_t user,
                      std::uint32_t users) {
  if (gamma.rows() != 4 * static_cast<Eigen::Index>(users)) {
    throw DimensionError("user features: gamma has " +
                         std::to_string(gamma.rows()) + " rows, expected " +
                         std::to_string(4 * users));
  }
  if (user >= users) throw ContractError("user features: user out of range");
  RealMat out(4, gamma.cols());
  out.row(0) = gamma.row(2 * user);
  out.row(1) = gamma.row(2 * user + 1);
  out.row(2) = gamma.row(2 * users + 2 * user);
  out.row(3) = gamma.row(2 * users + 2 * user + 1);
  return out;
}

}  // namespace risnet
