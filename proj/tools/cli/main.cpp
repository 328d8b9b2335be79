#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "commands.hpp"
#include "report.hpp"
#include "risnet/errors.hpp"
#include "risnet/parallel.hpp"

using namespace risnet;
using namespace risnet::cli;

namespace {

struct Common {
  std::string config;
  std::string preset = "paper";
  std::string variant;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::vector<double> rhos;
  std::vector<std::string> sets;
  bool dump = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "flat key = value config file");
  app->add_option("--preset", c.preset, "paper (default) or desk")
      ->check(CLI::IsMember({"paper", "desk"}));
  app->add_option("--variant", c.variant, "pv or pi")->check(CLI::IsMember({"pv", "pi"}));
  app->add_option("--seed", c.seed, "sets every seed");
  app->add_option("--threads", c.threads, "worker threads");
  app->add_option("--rho", c.rhos, "transmit SNR, repeatable")->take_all();
  app->add_option("--set", c.sets, "key=value override, repeatable");
  app->add_flag("--dump-config", c.dump, "print the merged config and exit");
  app->allow_extras();
  app->footer("Any config key may also be given as --<key>=<value>, e.g. --scenario.n_ris=64.");
}

void apply_pair(RunConfig& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + kv + "'");
  apply_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
}

// Preset, then config file, then key overrides, then the dedicated flags.
RunConfig build_config(const Common& c, const std::vector<std::string>& extras) {
  RunConfig cfg = preset_config(parse_preset(c.preset));
  if (!c.config.empty()) {
    for (const auto& [k, v] : read_config_file(c.config)) apply_key(cfg, k, v);
  }
  for (const std::string& s : c.sets) apply_pair(cfg, s);
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& tok = extras[i];
    if (tok.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + tok + "'");
    const std::string body = tok.substr(2);
    if (body.find('=') != std::string::npos) {
      apply_pair(cfg, body);
    } else if (i + 1 < extras.size()) {
      apply_key(cfg, body, extras[++i]);
    } else {
      throw ConfigError("missing value for --" + body);
    }
  }
  if (!c.variant.empty()) cfg.variant = parse_variant(c.variant);
  if (c.seed) apply_seed(cfg, *c.seed);
  if (c.threads) cfg.threads = *c.threads;
  if (!c.rhos.empty()) cfg.rhos = c.rhos;
  cfg.validate();
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"RIS phase-shift learning with RISNet, WMMSE and baselines"};
  app.require_subcommand(1);

  Common gen_c, train_c, eval_c;
  std::string gen_out = "data";
  auto* gen = app.add_subcommand("gen", "sample train and test datasets");
  add_common(gen, gen_c);
  gen->add_option("--out", gen_out, "output directory");

  std::string train_data = "data", train_out, resume;
  auto* tr = app.add_subcommand("train", "train one RISNet variant at one rho");
  add_common(tr, train_c);
  tr->add_option("--data", train_data, "dataset directory");
  tr->add_option("--out", train_out, "output stem (default runs/<variant>)");
  tr->add_option("--resume", resume, "checkpoint to continue from");

  std::string eval_data = "data", eval_out = "eval.csv";
  std::vector<std::string> checkpoints;
  bool with_bcd = false, no_random = false;
  auto* ev = app.add_subcommand("eval", "evaluate checkpoints and baselines on the test set");
  add_common(ev, eval_c);
  ev->add_option("--data", eval_data, "dataset directory");
  ev->add_option("--checkpoint", checkpoints, "RISNet checkpoint, repeatable");
  ev->add_flag("--with-bcd", with_bcd, "also run block coordinate descent");
  ev->add_flag("--no-random", no_random, "skip the random-phase baseline");
  ev->add_option("--out", eval_out, "per-sample CSV");

  std::vector<std::string> inputs;
  std::string report_out = "series.csv";
  auto* rep = app.add_subcommand("report", "per-method (rho, mean WSR) series from eval CSVs");
  rep->add_option("inputs", inputs, "eval CSV files");
  rep->add_option("--out", report_out, "series CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto dumped = [](const Common& c, const RunConfig& cfg) {
    if (c.dump) std::cout << dump_config(cfg);
    return c.dump;
  };

  if (*gen) {
    const RunConfig cfg = build_config(gen_c, gen->remaining());
    if (dumped(gen_c, cfg)) return 0;
    const GenResult r = cmd_gen(cfg, gen_out);
    std::cout << "wrote " << r.train_path.string() << " (" << cfg.scenario.n_train
              << " samples) and " << r.test_path.string() << " (" << cfg.scenario.n_test
              << " samples)\n";
  } else if (*tr) {
    const RunConfig cfg = build_config(train_c, tr->remaining());
    if (dumped(train_c, cfg)) return 0;
    TrainOptions opts;
    opts.data_dir = train_data;
    opts.out_stem = train_out.empty() ? "runs/" + std::string(variant_name(cfg.variant)) : train_out;
    if (!resume.empty()) opts.resume = resume;
    const std::uint32_t total = cfg.settings(cfg.variant).iterations;
    const std::uint32_t every = std::max<std::uint32_t>(1, total / 20);
    opts.progress = [&](const TrainRecord& r) {
      if (r.iteration % every == 0 || r.iteration == total) {
        std::fprintf(stderr, "iter %u/%u  mean WSR %.6g  |grad| %.3g\n", r.iteration, total,
                     r.mean_wsr, r.grad_norm);
      }
    };
    const TrainResult r = cmd_train(cfg, opts);
    std::cout << "wrote " << r.checkpoint.string() << " and " << r.log.string() << "\n";
  } else if (*ev) {
    const RunConfig cfg = build_config(eval_c, ev->remaining());
    if (dumped(eval_c, cfg)) return 0;
    EvalOptions opts;
    opts.data_dir = eval_data;
    for (const auto& c : checkpoints) opts.checkpoints.emplace_back(c);
    opts.require_variant = !eval_c.variant.empty();
    opts.with_bcd = with_bcd;
    opts.with_random = !no_random;
    opts.out = eval_out;
    const EvalReport r = cmd_eval(cfg, opts);
    for (const EvalSummary& m : r.means) {
      std::printf("%-10s rho=%-8g mean WSR %.6f\n", m.method.c_str(), m.rho, m.mean_wsr);
    }
    std::cout << "wrote " << eval_out << "\n";
  } else if (*rep) {
    std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
    const auto points = build_series(paths);
    write_series(points, report_out);
    std::cout << "wrote " << points.size() << " points to " << report_out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
