#include "risnet/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "risnet/errors.hpp"
#include "risnet/parallel.hpp"
#include "risnet/rng.hpp"

namespace risnet {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) {
    throw ConfigError("train.beta1 must be in [0, 1)");
  }
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("train.beta2 must be in [0, 1)");
  }
  if (!(adam.epsilon > 0.0)) throw ConfigError("train.epsilon must be > 0");
  if (!(clip_norm >= 0.0)) throw ConfigError("train.clip_norm must be >= 0");
  if (wmmse.max_iters < 1) throw ConfigError("wmmse.max_iters must be >= 1");
  if (!(wmmse.tol >= 0.0)) throw ConfigError("wmmse.tol must be >= 0");
}

AdamState AdamState::zeros_like(const RisnetParams& params) {
  AdamState s;
  for (const RealMat& b : params.blocks) {
    s.m.push_back(RealMat::Zero(b.rows(), b.cols()));
    s.v.push_back(RealMat::Zero(b.rows(), b.cols()));
  }
  return s;
}

bool AdamState::identical(const AdamState& other) const {
  if (t != other.t || m.size() != other.m.size()) return false;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!bitwise_equal(m[i], other.m[i]) || !bitwise_equal(v[i], other.v[i]))
      return false;
  }
  return true;
}

void adam_step(RisnetParams& params, const std::vector<RealMat>& grads,
               AdamState& state, double lr, const AdamConfig& cfg) {
  if (state.m.empty()) state = AdamState::zeros_like(params);
  if (grads.size() != params.blocks.size() ||
      state.m.size() != params.blocks.size()) {
    throw DimensionError("adam: gradient/state block count mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const RealMat& p = params.blocks[i];
    if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols() ||
        state.m[i].rows() != p.rows() || state.m[i].cols() != p.cols()) {
      throw DimensionError("adam: block " + std::to_string(i) + " shape mismatch");
    }
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    const auto g = grads[i].array();
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.square();
    params.blocks[i].array() +=
        lr * (m / c1) / ((v / c2).sqrt() + cfg.epsilon);
  }
}

namespace {

// WSR node for C = (G diag(phi)) (H V) + D V with V a constant.
ad::Var wsr_node(ad::Tape& t, ad::Var phi, const ChannelSample& sample,
                 const ComplexMat& v, std::span<const double> alpha,
                 double rho) {
  const ad::Var g = t.leaf(sample.g);
  const ad::Var hv = t.leaf(ComplexMat(*sample.h * v));
  const ad::Var dv = t.leaf(ComplexMat(sample.d * v));
  const ad::Var reflected = ad::cmatmul(t, ad::scale_cols(t, g, phi), hv);
  return ad::weighted_sum_rate(t, ad::add(t, reflected, dv), alpha, rho);
}

std::vector<RealMat> collect_grads(const ad::Tape& t,
                                   std::span<const ad::Var> vars) {
  std::vector<RealMat> grads;
  grads.reserve(vars.size());
  for (ad::Var v : vars) grads.push_back(t.real_adjoint(v));
  return grads;
}

void check_dims(const Dataset& data, const ScenarioConfig& scenario,
                const RisnetParams& params) {
  if (!(data.dims() == scenario.dims)) {
    throw ConfigError("dataset dimensions do not match the scenario config");
  }
  if (params.config.variant == Variant::kPermutationVariant &&
      params.config.users != scenario.dims.users) {
    throw ConfigError("RISNet user count does not match the scenario");
  }
}

double norm_squared(const std::vector<RealMat>& grads) {
  double s = 0.0;
  for (const RealMat& g : grads) s += g.squaredNorm();
  return s;
}

}  // namespace

SampleGradient sample_gradient(const RisnetParams& params,
                               const ChannelSample& sample,
                               const ScenarioConfig& scenario,
                               const WmmseOptions& wmmse) {
  const std::vector<double> alpha = scenario.weights();
  ad::Tape t;
  const auto vars = register_params(t, params, true);
  const ad::Var psi = forward(t, params.config, vars, sample.gamma);
  const ad::Var phi = ad::unit_phase(t, psi);
  const ComplexMat a = composite_channel(sample.g, t.complex(phi), *sample.h, sample.d);
  const PrecodeResult pre =
      wmmse_precode(a, alpha, scenario.rho, scenario.e_tr, wmmse);
  const ad::Var wsr = wsr_node(t, phi, sample, pre.v, alpha, scenario.rho);
  t.backward(wsr);
  return {t.real(wsr)(0, 0), collect_grads(t, vars)};
}

std::vector<ComplexMat> batch_precoders(const RisnetParams& params,
                                        const Dataset& data,
                                        std::span<const std::size_t> indices,
                                        const ScenarioConfig& scenario,
                                        const WmmseOptions& wmmse) {
  const std::vector<double> alpha = scenario.weights();
  std::vector<ComplexMat> out;
  for (std::size_t idx : indices) {
    const ChannelSample s = data.sample(idx);
    const ComplexMat phi = phases_to_phi(forward(params, s.gamma));
    const ComplexMat a = composite_channel(s.g, phi, *s.h, s.d);
    out.push_back(wmmse_precode(a, alpha, scenario.rho, scenario.e_tr, wmmse).v);
  }
  return out;
}

double batch_objective(const RisnetParams& params, const Dataset& data,
                       std::span<const std::size_t> indices,
                       std::span<const ComplexMat> precoders,
                       const ScenarioConfig& scenario) {
  if (indices.size() != precoders.size() || indices.empty()) {
    throw ContractError("batch objective: need one precoder per sample");
  }
  const std::vector<double> alpha = scenario.weights();
  double total = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const ChannelSample s = data.sample(indices[k]);
    const ComplexMat phi = phases_to_phi(forward(params, s.gamma));
    const ComplexMat a = composite_channel(s.g, phi, *s.h, s.d);
    total += weighted_sum_rate(a * precoders[k], alpha, scenario.rho);
  }
  return total / static_cast<double>(indices.size());
}

std::vector<RealMat> batch_gradient(const RisnetParams& params,
                                    const Dataset& data,
                                    std::span<const std::size_t> indices,
                                    std::span<const ComplexMat> precoders,
                                    const ScenarioConfig& scenario) {
  if (indices.size() != precoders.size() || indices.empty()) {
    throw ContractError("batch gradient: need one precoder per sample");
  }
  const std::vector<double> alpha = scenario.weights();
  std::vector<RealMat> sum;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const ChannelSample s = data.sample(indices[k]);
    ad::Tape t;
    const auto vars = register_params(t, params, true);
    const ad::Var phi =
        ad::unit_phase(t, forward(t, params.config, vars, s.gamma));
    t.backward(wsr_node(t, phi, s, precoders[k], alpha, scenario.rho));
    auto grads = collect_grads(t, vars);
    if (sum.empty()) {
      sum = std::move(grads);
    } else {
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += grads[i];
    }
  }
  for (RealMat& g : sum) g /= static_cast<double>(indices.size());
  return sum;
}

std::vector<std::size_t> batch_indices(std::uint64_t seed,
                                       std::uint32_t iteration,
                                       std::size_t dataset_size,
                                       std::uint32_t batch_size) {
  if (dataset_size == 0) throw ContractError("batch: empty dataset");
  Rng rng(seed, Stream::kBatch, iteration);
  std::vector<std::size_t> out(batch_size);
  for (auto& i : out) i = rng.uniform_index(dataset_size);
  return out;
}

EvalResult evaluate(const RisnetParams& params, const Dataset& data,
                    const ScenarioConfig& scenario, const WmmseOptions& wmmse,
                    unsigned threads) {
  check_dims(data, scenario, params);
  const std::vector<double> alpha = scenario.weights();
  EvalResult result;
  result.wsr.resize(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) {
    const ChannelSample s = data.sample(i);
    const ComplexMat phi = phases_to_phi(forward(params, s.gamma));
    const ComplexMat a = composite_channel(s.g, phi, *s.h, s.d);
    result.wsr[i] = wmmse_precode(a, alpha, scenario.rho, scenario.e_tr, wmmse).wsr;
  });
  double total = 0.0;
  for (double w : result.wsr) total += w;
  result.mean_wsr = data.size() == 0 ? 0.0 : total / static_cast<double>(data.size());
  return result;
}

TrainLog train(const Dataset& data, TrainState& state, const TrainConfig& cfg,
               const ScenarioConfig& scenario, const TrainHooks& hooks) {
  cfg.validate();
  scenario.validate();
  check_dims(data, scenario, state.params);
  if (data.size() == 0) throw ContractError("train: empty dataset");
  if (state.adam.m.empty()) state.adam = AdamState::zeros_like(state.params);

  TrainLog log;
  const auto start = std::chrono::steady_clock::now();
  std::vector<SampleGradient> per_sample(cfg.batch_size);
  for (auto it = static_cast<std::uint32_t>(state.adam.t); it < cfg.iterations;
       ++it) {
    const auto indices = batch_indices(cfg.seed, it, data.size(), cfg.batch_size);
    parallel_for(indices.size(), cfg.threads, [&](std::size_t k) {
      try {
        per_sample[k] = sample_gradient(state.params, data.sample(indices[k]),
                                        scenario, cfg.wmmse);
      } catch (const NumericError& e) {
        throw NumericError("train: iteration " + std::to_string(it + 1) +
                           ", dataset sample " + std::to_string(indices[k]) +
                           ": " + e.what());
      }
    });

    // Fixed-order reduction keeps the result independent of thread count.
    double wsr_sum = 0.0;
    std::vector<RealMat> grads = per_sample[0].grads;
    for (RealMat& g : grads) g.setZero();
    for (std::size_t k = 0; k < per_sample.size(); ++k) {
      const SampleGradient& s = per_sample[k];
      bool finite = std::isfinite(s.wsr);
      for (const RealMat& g : s.grads) finite = finite && g.allFinite();
      if (!finite) {
        throw NumericError("train: iteration " + std::to_string(it + 1) +
                           ", dataset sample " + std::to_string(indices[k]) +
                           ": non-finite WSR or gradient");
      }
      wsr_sum += s.wsr;
      for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += s.grads[i];
    }
    const double inv = 1.0 / static_cast<double>(per_sample.size());
    for (RealMat& g : grads) g *= inv;
    const double grad_norm = std::sqrt(norm_squared(grads));
    if (cfg.clip_norm > 0.0 && grad_norm > cfg.clip_norm) {
      for (RealMat& g : grads) g *= cfg.clip_norm / grad_norm;
    }
    adam_step(state.params, grads, state.adam, cfg.learning_rate, cfg.adam);

    TrainRecord rec;
    rec.iteration = it + 1;
    rec.mean_wsr = wsr_sum * inv;
    rec.grad_norm = grad_norm;
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    log.records.push_back(rec);
    if (hooks.progress) hooks.progress(rec);
    if (hooks.test_set != nullptr && cfg.eval_every > 0 &&
        rec.iteration % cfg.eval_every == 0) {
      const EvalResult ev =
          evaluate(state.params, *hooks.test_set, scenario, cfg.wmmse, cfg.threads);
      log.evals.push_back({rec.iteration, ev.mean_wsr});
    }
    if (hooks.checkpoint && cfg.checkpoint_every > 0 &&
        rec.iteration % cfg.checkpoint_every == 0 &&
        rec.iteration != cfg.iterations) {
      hooks.checkpoint(rec.iteration, state);
    }
  }
  if (hooks.checkpoint) {
    hooks.checkpoint(static_cast<std::uint32_t>(state.adam.t), state);
  }
  return log;
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "iteration,mean_wsr,grad_norm,wall_ms\n";
  char line[160];
  for (const TrainRecord& r : records) {
    std::snprintf(line, sizeof line, "%u,%.17g,%.17g,%.3f\n", r.iteration,
                  r.mean_wsr, r.grad_norm, r.wall_ms);
    out << line;
  }
  if (!out) throw IoError("write failed: " + path.string());
}

TrainLog TrainLog::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  TrainLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "iteration,mean_wsr,grad_norm,wall_ms") {
        throw FormatError("unexpected train log header", line_no);
      }
      continue;
    }
    if (line.empty()) continue;
    TrainRecord r;
    unsigned it = 0;
    if (std::sscanf(line.c_str(), "%u,%lf,%lf,%lf", &it, &r.mean_wsr,
                    &r.grad_norm, &r.wall_ms) != 4) {
      throw FormatError("malformed train log row", line_no);
    }
    r.iteration = it;
    log.records.push_back(r);
  }
  return log;
}

void save_adam_state(const AdamState& state, const std::filesystem::path& path) {
  io::ByteWriter out;
  out.bytes("RISA");
  out.u8(1);
  out.u64(state.t);
  out.u32(static_cast<std::uint32_t>(state.m.size()));
  for (const RealMat& m : state.m) out.real_mat(m);
  for (const RealMat& v : state.v) out.real_mat(v);
  io::write_file(path, out.buffer());
}

AdamState load_adam_state(const std::filesystem::path& path,
                          const RisnetParams& shape) {
  io::ByteReader in(io::read_file(path));
  if (in.bytes(4) != "RISA") throw FormatError("bad optimizer-state magic", 0);
  if (in.u8() != 1) throw FormatError("unsupported optimizer-state version", 4);
  AdamState s = AdamState::zeros_like(shape);
  s.t = in.u64();
  const std::size_t at = in.offset();
  if (in.u32() != shape.blocks.size()) {
    throw FormatError("optimizer-state block count mismatch", at);
  }
  for (RealMat& m : s.m) in.real_mat(m);
  for (RealMat& v : s.v) in.real_mat(v);
  if (in.remaining() != 0) {
    throw FormatError("trailing bytes after optimizer state", in.offset());
  }
  return s;
}

}  // namespace risnet
