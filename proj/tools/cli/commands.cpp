#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "risnet/errors.hpp"
#include "risnet/parallel.hpp"

namespace risnet::cli {

namespace fs = std::filesystem;

namespace {

std::string dims_text(const Dimensions& d) {
  return "M=" + std::to_string(d.bs_antennas) + ", N=" + std::to_string(d.ris_antennas) +
         ", U=" + std::to_string(d.users);
}

void check_dataset(const fs::path& path, const RunConfig& cfg) {
  if (!fs::exists(path)) throw IoError("dataset not found: " + path.string());
  const Dimensions dims = read_dataset_dims(path);
  if (!(dims == cfg.scenario.dims)) {
    throw ConfigError(path.string() + " has " + dims_text(dims) +
                      " but scenario.n_bs/n_ris/n_users give " +
                      dims_text(cfg.scenario.dims));
  }
}

void ensure_parent(const fs::path& p) {
  const fs::path parent = p.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw IoError("cannot create " + parent.string() + ": " + ec.message());
}

std::string shape_text(const RisnetConfig& c) {
  return std::string(variant_name(c.variant)) + " L=" + std::to_string(c.layers) +
         " U=" + std::to_string(c.users) + " B=" + std::to_string(c.branch_dim);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

GenResult cmd_gen(const RunConfig& cfg, const fs::path& dir) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  GenResult r{dir / kTrainFile, dir / kTestFile};
  const ScenarioConfig sc = cfg.scenario_at(cfg.rhos.front());
  write_dataset(sample_dataset(sc, Split::kTrain), r.train_path);
  write_dataset(sample_dataset(sc, Split::kTest), r.test_path);
  return r;
}

fs::path adam_sidecar(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p.replace_extension(".adam");
  return p;
}

fs::path iteration_checkpoint(const fs::path& stem, std::uint32_t iteration) {
  return fs::path(stem.string() + "_it" + std::to_string(iteration) + ".risp");
}

TrainResult cmd_train(const RunConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  if (cfg.rhos.size() != 1) {
    throw ConfigError("train needs exactly one scenario.rho value, got " +
                      std::to_string(cfg.rhos.size()) + " (use --rho)");
  }
  if (opts.out_stem.empty()) throw ConfigError("train: output stem is empty");
  const ScenarioConfig sc = cfg.scenario_at(cfg.rhos.front());
  const TrainConfig tc = cfg.train_for(cfg.variant);
  const RisnetConfig net = cfg.network(cfg.variant);

  const fs::path train_path = opts.data_dir / kTrainFile;
  const fs::path test_path = opts.data_dir / kTestFile;
  check_dataset(train_path, cfg);
  if (tc.eval_every > 0) check_dataset(test_path, cfg);

  TrainState state;
  if (opts.resume) {
    const fs::path& ck = *opts.resume;
    if (!fs::exists(ck)) throw IoError("checkpoint not found: " + ck.string());
    if (!fs::exists(adam_sidecar(ck))) {
      throw IoError("optimizer state not found: " + adam_sidecar(ck).string());
    }
    const RisnetConfig found = read_checkpoint_config(ck);
    if (!found.same_shape(net)) {
      throw ConfigError(ck.string() + " holds " + shape_text(found) + " but the config gives " +
                        shape_text(net));
    }
    state.params = load_params(ck, net);
    state.adam = load_adam_state(adam_sidecar(ck), state.params);
    if (state.adam.t > tc.iterations) {
      throw ConfigError(ck.string() + " is at iteration " + std::to_string(state.adam.t) +
                        ", beyond the configured " + std::to_string(tc.iterations));
    }
  } else {
    state.params = init_params(net);
    state.adam = AdamState::zeros_like(state.params);
  }

  const Dataset train_set = read_dataset(train_path);
  std::optional<Dataset> test_set;
  if (tc.eval_every > 0) test_set.emplace(read_dataset(test_path));

  ensure_parent(opts.out_stem);
  TrainResult result;
  result.checkpoint = fs::path(opts.out_stem.string() + ".risp");
  result.log = fs::path(opts.out_stem.string() + "_log.csv");

  TrainHooks hooks;
  hooks.progress = opts.progress;
  hooks.test_set = test_set ? &*test_set : nullptr;
  hooks.checkpoint = [&](std::uint32_t it, const TrainState& s) {
    const fs::path p =
        it == tc.iterations ? result.checkpoint : iteration_checkpoint(opts.out_stem, it);
    save_params(s.params, p);
    save_adam_state(s.adam, adam_sidecar(p));
  };

  result.train_log = train(train_set, state, tc, sc, hooks);
  result.train_log.write_csv(result.log);
  if (!result.train_log.evals.empty()) {
    const fs::path eval_log(opts.out_stem.string() + "_eval.csv");
    std::ofstream out(eval_log, std::ios::trunc);
    if (!out) throw IoError("cannot open " + eval_log.string() + " for writing");
    out << "iteration,mean_wsr\n";
    char line[64];
    for (const EvalRecord& e : result.train_log.evals) {
      std::snprintf(line, sizeof line, "%u,%.17g\n", e.iteration, e.mean_wsr);
      out << line;
    }
  }
  return result;
}

std::string eval_method_name(Variant v) {
  return std::string("risnet_") + variant_name(v);
}

EvalReport cmd_eval(const RunConfig& cfg, const EvalOptions& opts) {
  cfg.validate();
  if (opts.out.empty()) throw ConfigError("eval: output path is empty");
  const fs::path test_path = opts.data_dir / kTestFile;
  check_dataset(test_path, cfg);

  std::vector<RisnetConfig> shapes;
  for (const fs::path& ck : opts.checkpoints) {
    if (!fs::exists(ck)) throw IoError("checkpoint not found: " + ck.string());
    const RisnetConfig found = read_checkpoint_config(ck);
    if (opts.require_variant && found.variant != cfg.variant) {
      throw ConfigError(ck.string() + " is a " + variant_name(found.variant) +
                        " checkpoint but risnet.variant is " + variant_name(cfg.variant));
    }
    const RisnetConfig expected = cfg.network(found.variant);
    if (!found.same_shape(expected)) {
      throw ConfigError(ck.string() + " holds " + shape_text(found) +
                        " but the config gives " + shape_text(expected));
    }
    for (const RisnetConfig& s : shapes) {
      if (s.variant == found.variant) {
        throw ConfigError("two " + std::string(variant_name(found.variant)) +
                          " checkpoints given");
      }
    }
    shapes.push_back(found);
  }

  std::vector<RisnetParams> nets;
  for (std::size_t i = 0; i < opts.checkpoints.size(); ++i) {
    nets.push_back(load_params(opts.checkpoints[i], shapes[i]));
  }
  const Dataset test_set = read_dataset(test_path);
  const std::size_t n = test_set.size();
  const WmmseOptions& wo = cfg.train.wmmse;

  EvalReport report;
  auto add = [&](const std::string& method, double rho, const std::vector<double>& wsr) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      report.rows.push_back({i, method, rho, wsr[i]});
      sum += wsr[i];
    }
    report.means.push_back({method, rho, sum / static_cast<double>(n)});
  };

  for (double rho : cfg.rhos) {
    const ScenarioConfig sc = cfg.scenario_at(rho);
    for (const RisnetParams& p : nets) {
      const auto t0 = std::chrono::steady_clock::now();
      const EvalResult r = evaluate(p, test_set, sc, wo, cfg.threads);
      report.risnet_seconds += seconds_since(t0);
      add(eval_method_name(p.config.variant), rho, r.wsr);
    }
    if (opts.with_random) {
      const auto t0 = std::chrono::steady_clock::now();
      std::vector<double> wsr(n);
      parallel_for(n, cfg.threads, [&](std::size_t i) {
        Rng rng(cfg.eval_seed, Stream::kRandomPhase, i);
        wsr[i] = random_phase_eval(test_set.sample(i), sc, rng, wo);
      });
      report.random_seconds += seconds_since(t0);
      add("random", rho, wsr);
    }
    if (opts.with_bcd) {
      const auto t0 = std::chrono::steady_clock::now();
      std::vector<double> wsr(n);
      parallel_for(n, cfg.threads, [&](std::size_t i) {
        wsr[i] = bcd_optimize(test_set.sample(i), sc, cfg.bcd, wo).wsr;
      });
      report.bcd_seconds += seconds_since(t0);
      add("bcd", rho, wsr);
    }
  }

  ensure_parent(opts.out);
  std::ofstream out(opts.out, std::ios::trunc);
  if (!out) throw IoError("cannot open " + opts.out.string() + " for writing");
  out << "sample_id,method,rho,wsr\n";
  char line[160];
  for (const EvalRow& r : report.rows) {
    std::snprintf(line, sizeof line, "%zu,%s,%.17g,%.17g\n", r.sample, r.method.c_str(), r.rho,
                  r.wsr);
    out << line;
  }
  for (const EvalSummary& m : report.means) {
    std::snprintf(line, sizeof line, "mean,%s,%.17g,%.17g\n", m.method.c_str(), m.rho,
                  m.mean_wsr);
    out << line;
  }
  if (!out) throw IoError("write failed: " + opts.out.string());
  return report;
}

}  // namespace risnet::cli
