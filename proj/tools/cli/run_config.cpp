#include "run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <type_traits>

#include "risnet/errors.hpp"

namespace risnet::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_integer(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt(v[i]);
  }
  return out;
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define RISNET_INT_KEY(key, expr)                                                  \
  Key {                                                                            \
    key,                                                                           \
        [](RunConfig& c, const std::string& v) {                                   \
          expr = parse_integer<std::remove_reference_t<decltype(expr)>>(key, v);   \
        },                                                                         \
        [](const RunConfig& c) { return std::to_string(expr); }                    \
  }

#define RISNET_DOUBLE_KEY(key, expr)                                                 \
  Key {                                                                              \
    key, [](RunConfig& c, const std::string& v) { expr = parse_double(key, v); },    \
        [](const RunConfig& c) { return fmt(expr); }                                 \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      RISNET_INT_KEY("scenario.n_bs", c.scenario.dims.bs_antennas),
      RISNET_INT_KEY("scenario.n_ris", c.scenario.dims.ris_antennas),
      RISNET_INT_KEY("scenario.n_users", c.scenario.dims.users),
      Key{"scenario.rho",
          [](RunConfig& c, const std::string& v) { c.rhos = parse_list("scenario.rho", v); },
          [](const RunConfig& c) { return fmt_list(c.rhos); }},
      RISNET_DOUBLE_KEY("scenario.e_tr", c.scenario.e_tr),
      Key{"scenario.alpha",
          [](RunConfig& c, const std::string& v) {
            c.scenario.alpha = parse_list("scenario.alpha", v);
          },
          [](const RunConfig& c) { return fmt_list(c.scenario.alpha); }},
      RISNET_INT_KEY("scenario.seed", c.scenario.seed),
      RISNET_INT_KEY("scenario.n_train", c.scenario.n_train),
      RISNET_INT_KEY("scenario.n_test", c.scenario.n_test),
      Key{"risnet.variant",
          [](RunConfig& c, const std::string& v) { c.variant = parse_variant(trim(v)); },
          [](const RunConfig& c) { return std::string(variant_name(c.variant)); }},
      RISNET_INT_KEY("risnet.layers", c.layers),
      RISNET_INT_KEY("risnet.init_seed", c.init_seed),
      RISNET_INT_KEY("pv.branch_dim", c.pv.branch_dim),
      RISNET_INT_KEY("pv.iterations", c.pv.iterations),
      RISNET_INT_KEY("pi.branch_dim", c.pi.branch_dim),
      RISNET_INT_KEY("pi.iterations", c.pi.iterations),
      RISNET_INT_KEY("train.batch_size", c.train.batch_size),
      RISNET_DOUBLE_KEY("train.learning_rate", c.train.learning_rate),
      RISNET_DOUBLE_KEY("train.beta1", c.train.adam.beta1),
      RISNET_DOUBLE_KEY("train.beta2", c.train.adam.beta2),
      RISNET_DOUBLE_KEY("train.epsilon", c.train.adam.epsilon),
      RISNET_INT_KEY("train.eval_every", c.train.eval_every),
      RISNET_INT_KEY("train.checkpoint_every", c.train.checkpoint_every),
      RISNET_INT_KEY("train.seed", c.train.seed),
      RISNET_DOUBLE_KEY("train.clip_norm", c.train.clip_norm),
      RISNET_INT_KEY("wmmse.max_iters", c.train.wmmse.max_iters),
      RISNET_DOUBLE_KEY("wmmse.tol", c.train.wmmse.tol),
      RISNET_INT_KEY("bcd.grid_size", c.bcd.grid_size),
      RISNET_INT_KEY("bcd.max_sweeps", c.bcd.max_outer_sweeps),
      RISNET_DOUBLE_KEY("bcd.tol", c.bcd.tol),
      Key{"bcd.rewmmse_every_sweep",
          [](RunConfig& c, const std::string& v) {
            c.bcd.rewmmse_every_sweep = parse_bool("bcd.rewmmse_every_sweep", v);
          },
          [](const RunConfig& c) {
            return std::string(c.bcd.rewmmse_every_sweep ? "true" : "false");
          }},
      RISNET_INT_KEY("eval.seed", c.eval_seed),
      RISNET_INT_KEY("run.threads", c.threads),
  };
  return table;
}

#undef RISNET_INT_KEY
#undef RISNET_DOUBLE_KEY

}  // namespace

Preset parse_preset(const std::string& name) {
  if (name == "paper") return Preset::kPaper;
  if (name == "desk") return Preset::kDesk;
  throw ConfigError("preset: expected paper or desk, got '" + name + "'");
}

Variant parse_variant(const std::string& name) {
  if (name == "pv") return Variant::kPermutationVariant;
  if (name == "pi") return Variant::kPermutationInvariant;
  throw ConfigError("risnet.variant: expected pv or pi, got '" + name + "'");
}

RisnetConfig RunConfig::network(Variant v) const {
  RisnetConfig n;
  n.variant = v;
  n.layers = layers;
  n.users = scenario.dims.users;
  n.branch_dim = settings(v).branch_dim;
  n.init_seed = init_seed;
  return n;
}

ScenarioConfig RunConfig::scenario_at(double rho) const {
  ScenarioConfig s = scenario;
  s.rho = rho;
  return s;
}

TrainConfig RunConfig::train_for(Variant v) const {
  TrainConfig t = train;
  t.iterations = settings(v).iterations;
  t.threads = threads;
  return t;
}

void RunConfig::validate() const {
  if (rhos.empty()) throw ConfigError("scenario.rho needs at least one value");
  for (double r : rhos) scenario_at(r).validate();
  if (scenario.n_train < 1) throw ConfigError("scenario.n_train must be >= 1");
  if (scenario.n_test < 1) throw ConfigError("scenario.n_test must be >= 1");
  if (layers < 2) throw ConfigError("risnet.layers must be >= 2");
  if (pv.branch_dim < 1) throw ConfigError("pv.branch_dim must be >= 1");
  if (pi.branch_dim < 1) throw ConfigError("pi.branch_dim must be >= 1");
  if (variant == Variant::kPermutationInvariant && scenario.dims.users < 2) {
    throw ConfigError("risnet.variant = pi needs scenario.n_users >= 2");
  }
  if (threads < 1) throw ConfigError("run.threads must be >= 1");
  if (train.checkpoint_every > 0 && train.checkpoint_every > settings(variant).iterations) {
    throw ConfigError("train.checkpoint_every exceeds the iteration count");
  }
  train.validate();
  bcd.validate();
}

RunConfig preset_config(Preset preset) {
  RunConfig c;
  c.scenario.alpha.clear();
  if (preset == Preset::kPaper) {
    c.scenario.dims = {9, 1024, 4};
    c.rhos = {1e11, 5e11, 1e12};
    c.scenario.n_train = 10240;
    c.scenario.n_test = 1024;
    c.pv = {16, 500};
    c.pi = {8, 1000};
    c.train.batch_size = 512;
  } else {
    c.scenario.dims = {4, 64, 2};
    c.rhos = {10, 100, 1000};
    c.scenario.n_train = 1024;
    c.scenario.n_test = 256;
    c.pv = {16, 300};
    c.pi = {8, 300};
    c.train.batch_size = 64;
    c.bcd.grid_size = 16;
    c.bcd.max_outer_sweeps = 5;
  }
  c.layers = 8;
  c.train.learning_rate = 8e-4;
  return c;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const Key& k : keys()) {
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(path.string() + ": expected 'key = value'", line_no);
    }
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError(path.string() + ": empty key", line_no);
    out.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return out;
}

const std::vector<std::string>& key_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const Key& k : keys()) n.push_back(k.name);
    return n;
  }();
  return names;
}

void apply_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.scenario.seed = seed;
  cfg.init_seed = seed;
  cfg.train.seed = seed;
  cfg.eval_seed = seed;
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  for (const Key& k : keys()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

}  // namespace risnet::cli
