#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace risnet::cli {

// File names inside a dataset directory.
inline constexpr const char* kTrainFile = "train.risd";
inline constexpr const char* kTestFile = "test.risd";

struct GenResult {
  std::filesystem::path train_path;
  std::filesystem::path test_path;
};

// Samples the train and test splits and writes them into `dir`.
GenResult cmd_gen(const RunConfig& cfg, const std::filesystem::path& dir);

struct TrainOptions {
  std::filesystem::path data_dir;
  // Output stem: <stem>.risp, <stem>.adam, <stem>_log.csv,
  // <stem>_it<k>.risp/.adam at checkpoints, <stem>_eval.csv with eval_every.
  std::filesystem::path out_stem;
  // Checkpoint to continue from; its .adam sidecar must exist.
  std::optional<std::filesystem::path> resume;
  std::function<void(const TrainRecord&)> progress;
};

struct TrainResult {
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  TrainLog train_log;
};

// Trains cfg.variant at the single value in cfg.rhos.
TrainResult cmd_train(const RunConfig& cfg, const TrainOptions& opts);

std::filesystem::path adam_sidecar(const std::filesystem::path& checkpoint);
std::filesystem::path iteration_checkpoint(const std::filesystem::path& stem,
                                           std::uint32_t iteration);

struct EvalOptions {
  std::filesystem::path data_dir;
  std::vector<std::filesystem::path> checkpoints;
  // Restricts checkpoints to cfg.variant.
  bool require_variant = false;
  bool with_bcd = false;
  bool with_random = true;
  std::filesystem::path out;
};

struct EvalRow {
  std::size_t sample = 0;
  std::string method;
  double rho = 0.0;
  double wsr = 0.0;
};

struct EvalSummary {
  std::string method;
  double rho = 0.0;
  double mean_wsr = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<EvalSummary> means;
  double risnet_seconds = 0.0;
  double random_seconds = 0.0;
  double bcd_seconds = 0.0;
};

// Per-sample WSR of every checkpoint, random phases and optionally BCD on the
// test split, for every rho. Writes `sample_id,method,rho,wsr` rows then one
// "mean" row per (method, rho).
EvalReport cmd_eval(const RunConfig& cfg, const EvalOptions& opts);

std::string eval_method_name(Variant v);  // "risnet_pv" / "risnet_pi"

}  // namespace risnet::cli
