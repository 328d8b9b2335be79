#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "risnet/tensor.hpp"

namespace risnet {

enum class Variant : std::uint8_t {
  kPermutationVariant = 0,
  kPermutationInvariant = 1,
};

const char* variant_name(Variant v);  // "pv" / "pi"

struct RisnetConfig {
  Variant variant = Variant::kPermutationVariant;
  // Layer count including the final layer, so there are layers - 1 hidden
  // layers.
  std::uint32_t layers = 8;
  std::uint32_t users = 4;
  // Width of each branch: local and global for PV; ego/opposite x
  // local/global for PI.
  std::uint32_t branch_dim = 16;
  std::uint64_t init_seed = 0;

  void validate() const;
  bool same_shape(const RisnetConfig& other) const;
};

struct BlockShape {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

// Parameter blocks in checkpoint order: per hidden layer the branches in
// definition order (PV: local, global; PI: ego-local, ego-global,
// opposite-local, opposite-global), each weight then bias; then the final
// weight row and bias.
std::vector<BlockShape> parameter_layout(const RisnetConfig& cfg);

// Closed form of the total scalar count; independent of N, and for PI also of U.
std::size_t parameter_count(const RisnetConfig& cfg);

// Feature width entering hidden layer `layer` (0-based) or, for layer ==
// layers - 1, the final layer.
Eigen::Index input_width(const RisnetConfig& cfg, std::uint32_t layer);

struct RisnetParams {
  RisnetConfig config;
  std::vector<RealMat> blocks;

  std::size_t scalar_count() const;
  bool identical(const RisnetParams& other) const;
};

// Weights uniform on +-sqrt(6 / (fan_in + fan_out)), biases zero.
RisnetParams init_params(const RisnetConfig& cfg);

// Puts every block on the tape as a leaf, in layout order.
std::vector<ad::Var> register_params(ad::Tape& t, const RisnetParams& params,
                                     bool trainable);

// Permutation-variant forward pass on a 4U x N feature node; returns the
// 1 x N phase node.
ad::Var forward_pv(ad::Tape& t, const RisnetConfig& cfg,
                   std::span<const ad::Var> params, ad::Var gamma);

// Permutation-invariant forward pass on U per-user 4 x N feature nodes.
ad::Var forward_pi(ad::Tape& t, const RisnetConfig& cfg,
                   std::span<const ad::Var> params,
                   std::span<const ad::Var> gamma_users);

// Dispatches on the variant. `gamma` is the full 4U x N feature matrix; the
// PI network splits it into per-user slices.
ad::Var forward(ad::Tape& t, const RisnetConfig& cfg,
                std::span<const ad::Var> params, const RealMat& gamma);

// Tape-free convenience wrapper around forward().
RealMat forward(const RisnetParams& params, const RealMat& gamma);

// e^{j psi}, the diagonal of Phi.
ComplexMat phases_to_phi(const RealMat& psi);

// Checkpoint file, little-endian:
//   "RISP" | u8 version | u8 variant | u32 L | u32 U | u32 branch_dim
//   followed by every parameter block as f64 in parameter_layout() order.
inline constexpr std::size_t kCheckpointHeaderBytes = 18;
inline constexpr std::uint8_t kCheckpointVersion = 1;

std::size_t checkpoint_file_size(const RisnetConfig& cfg);
void save_params(const RisnetParams& params, const std::filesystem::path& path);
// Throws FormatError if the header disagrees with `expected` (variant,
// layers, users, branch_dim).
RisnetParams load_params(const std::filesystem::path& path,
                         const std::optional<RisnetConfig>& expected = std::nullopt);
// Reads only the header.
RisnetConfig read_checkpoint_config(const std::filesystem::path& path);

}  // namespace risnet
