#include "risnet/network.hpp"

#include <cmath>

#include "risnet/channel.hpp"
#include "risnet/errors.hpp"
#include "risnet/rng.hpp"

namespace risnet {

const char* variant_name(Variant v) {
  return v == Variant::kPermutationVariant ? "pv" : "pi";
}

void RisnetConfig::validate() const {
  if (layers < 2) throw ConfigError("risnet.layers must be >= 2");
  if (branch_dim < 1) throw ConfigError("risnet.branch_dim must be >= 1");
  if (users < 1) throw ConfigError("risnet users must be >= 1");
  if (variant == Variant::kPermutationInvariant && users < 2) {
    throw ConfigError(
        "permutation-invariant RISNet needs at least 2 users (opposite "
        "branches average over the other users)");
  }
}

bool RisnetConfig::same_shape(const RisnetConfig& other) const {
  return variant == other.variant && layers == other.layers &&
         users == other.users && branch_dim == other.branch_dim;
}

Eigen::Index input_width(const RisnetConfig& cfg, std::uint32_t layer) {
  const Eigen::Index b = cfg.branch_dim;
  if (cfg.variant == Variant::kPermutationVariant) {
    const Eigen::Index channel = 4 * static_cast<Eigen::Index>(cfg.users);
    return layer == 0 ? channel : channel + 2 * b;
  }
  return layer == 0 ? 4 : 4 + 4 * b;
}

std::vector<BlockShape> parameter_layout(const RisnetConfig& cfg) {
  cfg.validate();
  static constexpr const char* kPvBranches[] = {"local", "global"};
  static constexpr const char* kPiBranches[] = {"ego_local", "ego_global",
                                                "opposite_local",
                                                "opposite_global"};
  const std::span<const char* const> branches =
      cfg.variant == Variant::kPermutationVariant
          ? std::span<const char* const>(kPvBranches)
          : std::span<const char* const>(kPiBranches);
  const Eigen::Index b = cfg.branch_dim;
  std::vector<BlockShape> out;
  for (std::uint32_t i = 0; i + 1 < cfg.layers; ++i) {
    const Eigen::Index in = input_width(cfg, i);
    for (const char* name : branches) {
      const std::string prefix = "layer" + std::to_string(i) + "." + name;
      out.push_back({prefix + ".weight", b, in});
      out.push_back({prefix + ".bias", b, 1});
    }
  }
  out.push_back({"final.weight", 1, input_width(cfg, cfg.layers - 1)});
  out.push_back({"final.bias", 1, 1});
  return out;
}

std::size_t parameter_count(const RisnetConfig& cfg) {
  cfg.validate();
  const std::size_t b = cfg.branch_dim;
  const std::size_t hidden = cfg.layers - 1;
  std::size_t branches;
  std::size_t first_in;
  std::size_t later_in;
  if (cfg.variant == Variant::kPermutationVariant) {
    branches = 2;
    first_in = 4 * static_cast<std::size_t>(cfg.users);
    later_in = first_in + 2 * b;
  } else {
    branches = 4;
    first_in = 4;
    later_in = 4 + 4 * b;
  }
  return branches * (b * first_in + b) +
         (hidden - 1) * branches * (b * later_in + b) + later_in + 1;
}

std::size_t RisnetParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += static_cast<std::size_t>(b.size());
  return n;
}

bool RisnetParams::identical(const RisnetParams& other) const {
  if (!config.same_shape(other.config) || blocks.size() != other.blocks.size())
    return false;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (!bitwise_equal(blocks[i], other.blocks[i])) return false;
  }
  return true;
}

RisnetParams init_params(const RisnetConfig& cfg) {
  RisnetParams params;
  params.config = cfg;
  Rng rng(cfg.init_seed, Stream::kInit, 0);
  for (const BlockShape& shape : parameter_layout(cfg)) {
    RealMat m = RealMat::Zero(shape.rows, shape.cols);
    const bool is_bias = shape.cols == 1 && shape.name.ends_with(".bias");
    if (!is_bias) {
      const double limit =
          std::sqrt(6.0 / static_cast<double>(shape.rows + shape.cols));
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = limit * (2.0 * rng.uniform() - 1.0);
      }
    }
    params.blocks.push_back(std::move(m));
  }
  return params;
}

std::vector<ad::Var> register_params(ad::Tape& t, const RisnetParams& params,
                                     bool trainable) {
  std::vector<ad::Var> vars;
  vars.reserve(params.blocks.size());
  for (const RealMat& b : params.blocks) vars.push_back(t.leaf(b, trainable));
  return vars;
}

namespace {

void check_param_count(const RisnetConfig& cfg, std::span<const ad::Var> params) {
  const std::size_t branches =
      cfg.variant == Variant::kPermutationVariant ? 2 : 4;
  const std::size_t expected = 2 * branches * (cfg.layers - 1) + 2;
  if (params.size() != expected) {
    throw DimensionError("risnet: got " + std::to_string(params.size()) +
                         " parameter blocks, expected " +
                         std::to_string(expected));
  }
}

void check_input(const ad::Tape& t, ad::Var x, Eigen::Index rows,
                 const char* what) {
  const RealMat& v = t.real(x);
  if (v.rows() != rows) {
    throw DimensionError(std::string("risnet: ") + what + " has " +
                         std::to_string(v.rows()) + " rows, expected " +
                         std::to_string(rows));
  }
  if (v.cols() < 1) throw DimensionError("risnet: feature map has no antennas");
}

ad::Var branch(ad::Tape& t, ad::Var w, ad::Var b, ad::Var x) {
  return ad::relu(t, ad::affine(t, w, x, b));
}

}  // namespace

ad::Var forward_pv(ad::Tape& t, const RisnetConfig& cfg,
                   std::span<const ad::Var> params, ad::Var gamma) {
  cfg.validate();
  check_param_count(cfg, params);
  check_input(t, gamma, 4 * static_cast<Eigen::Index>(cfg.users), "gamma");
  ad::Var features = gamma;
  std::size_t p = 0;
  for (std::uint32_t i = 0; i + 1 < cfg.layers; ++i) {
    const ad::Var local = branch(t, params[p], params[p + 1], features);
    const ad::Var global =
        ad::mean_cols(t, branch(t, params[p + 2], params[p + 3], features));
    p += 4;
    const ad::Var parts[] = {gamma, local, global};
    features = ad::concat_rows(t, parts);
  }
  return branch(t, params[p], params[p + 1], features);
}

ad::Var forward_pi(ad::Tape& t, const RisnetConfig& cfg,
                   std::span<const ad::Var> params,
                   std::span<const ad::Var> gamma_users) {
  cfg.validate();
  check_param_count(cfg, params);
  const std::size_t users = gamma_users.size();
  if (users < 2) {
    throw ConfigError("permutation-invariant RISNet needs at least 2 users");
  }
  for (ad::Var g : gamma_users) check_input(t, g, 4, "user feature slice");
  const double others = static_cast<double>(users - 1);

  std::vector<ad::Var> features(gamma_users.begin(), gamma_users.end());
  std::vector<ad::Var> ego_local(users), ego_global(users);
  std::vector<ad::Var> opp_local(users), opp_global(users);
  std::vector<ad::Var> rest;
  std::size_t p = 0;
  for (std::uint32_t i = 0; i + 1 < cfg.layers; ++i) {
    for (std::size_t u = 0; u < users; ++u) {
      ego_local[u] = branch(t, params[p], params[p + 1], features[u]);
      ego_global[u] =
          ad::mean_cols(t, branch(t, params[p + 2], params[p + 3], features[u]));
      opp_local[u] = branch(t, params[p + 4], params[p + 5], features[u]);
      opp_global[u] =
          ad::mean_cols(t, branch(t, params[p + 6], params[p + 7], features[u]));
    }
    p += 8;
    std::vector<ad::Var> next(users);
    for (std::size_t u = 0; u < users; ++u) {
      rest.clear();
      for (std::size_t v = 0; v < users; ++v) {
        if (v != u) rest.push_back(opp_local[v]);
      }
      const ad::Var ol = ad::scale(t, ad::sum_parts(t, rest), 1.0 / others);
      rest.clear();
      for (std::size_t v = 0; v < users; ++v) {
        if (v != u) rest.push_back(opp_global[v]);
      }
      const ad::Var og = ad::scale(t, ad::sum_parts(t, rest), 1.0 / others);
      const ad::Var parts[] = {gamma_users[u], ego_local[u], ol, ego_global[u],
                               og};
      next[u] = ad::concat_rows(t, parts);
    }
    features = std::move(next);
  }
  const ad::Var pooled = ad::sum_parts(t, features);
  return branch(t, params[p], params[p + 1], pooled);
}

ad::Var forward(ad::Tape& t, const RisnetConfig& cfg,
                std::span<const ad::Var> params, const RealMat& gamma) {
  if (cfg.variant == Variant::kPermutationVariant) {
    return forward_pv(t, cfg, params, t.leaf(gamma));
  }
  if (gamma.rows() % 4 != 0) {
    throw DimensionError("risnet: gamma rows not a multiple of 4");
  }
  const auto users = static_cast<std::uint32_t>(gamma.rows() / 4);
  std::vector<ad::Var> slices;
  for (std::uint32_t u = 0; u < users; ++u) {
    slices.push_back(t.leaf(user_features(gamma, u, users)));
  }
  return forward_pi(t, cfg, params, slices);
}

RealMat forward(const RisnetParams& params, const RealMat& gamma) {
  ad::Tape t;
  const auto vars = register_params(t, params, false);
  return t.real(forward(t, params.config, vars, gamma));
}

ComplexMat phases_to_phi(const RealMat& psi) {
  ad::Tape t;
  return t.complex(ad::unit_phase(t, t.leaf(psi)));
}

}  // namespace risnet
