#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "risnet/baselines.hpp"
#include "risnet/channel.hpp"
#include "risnet/network.hpp"
#include "risnet/training.hpp"

namespace risnet::cli {

enum class Preset { kPaper, kDesk };

Preset parse_preset(const std::string& name);
Variant parse_variant(const std::string& name);

// Per-variant network width and iteration budget.
struct VariantSettings {
  std::uint32_t branch_dim = 16;
  std::uint32_t iterations = 500;
};

// Everything a subcommand needs, merged from preset, config file and
// overrides. Every field has a dotted key; see key_names().
struct RunConfig {
  ScenarioConfig scenario;   // scenario.rho is ignored, see rhos
  std::vector<double> rhos;  // scenario.rho
  Variant variant = Variant::kPermutationVariant;
  std::uint32_t layers = 8;
  std::uint64_t init_seed = 0;
  VariantSettings pv{16, 500};
  VariantSettings pi{8, 1000};
  TrainConfig train;
  BcdConfig bcd;
  std::uint64_t eval_seed = 0;
  unsigned threads = 1;

  const VariantSettings& settings(Variant v) const {
    return v == Variant::kPermutationInvariant ? pi : pv;
  }
  // Network shape expected for variant v.
  RisnetConfig network(Variant v) const;
  // Scenario with scenario.rho set to `rho`.
  ScenarioConfig scenario_at(double rho) const;
  // Training config for variant v.
  TrainConfig train_for(Variant v) const;

  // Throws ConfigError naming the key. Cross-module checks included.
  void validate() const;
};

RunConfig preset_config(Preset preset);

// Sets one key from its text value. Throws ConfigError for unknown keys and
// unparsable values.
void apply_key(RunConfig& cfg, const std::string& key, const std::string& value);

// Flat "key = value" file; '#' starts a comment, blank lines are skipped.
// Returns the pairs in file order. Throws IoError or FormatError (line).
std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::filesystem::path& path);

const std::vector<std::string>& key_names();

// Sets every seed (data, init, batch, random phases).
void apply_seed(RunConfig& cfg, std::uint64_t seed);

// Current value of every key, in key_names() order, as "key = value" lines.
std::string dump_config(const RunConfig& cfg);

}  // namespace risnet::cli
