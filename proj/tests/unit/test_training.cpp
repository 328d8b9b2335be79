#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "risnet/baselines.hpp"
#include "risnet/errors.hpp"
#include "risnet/parallel.hpp"
#include "risnet/training.hpp"
#include "temp_dir.hpp"

using namespace risnet;
namespace o = risnet::oracle;

namespace {

ScenarioConfig tiny_scenario(std::uint64_t seed = 3) {
  ScenarioConfig s;
  s.dims = {2, 4, 2};
  s.rho = 10.0;
  s.seed = seed;
  s.n_train = 16;
  s.n_test = 8;
  return s;
}

RisnetConfig tiny_net(Variant v, std::uint64_t seed = 1) {
  RisnetConfig c;
  c.variant = v;
  c.users = 2;
  c.layers = 3;
  c.branch_dim = 3;
  c.init_seed = seed;
  return c;
}

TrainConfig tiny_train(std::uint32_t iterations) {
  TrainConfig t;
  t.iterations = iterations;
  t.batch_size = 4;
  t.learning_rate = 1e-2;
  t.seed = 11;
  return t;
}

// Random weights and nonzero biases, so every block gets a gradient.
RisnetParams random_params(const RisnetConfig& cfg, std::uint64_t seed) {
  RisnetParams p = init_params(cfg);
  Rng rng(seed);
  for (RealMat& b : p.blocks) b = o::random_real(rng, b.rows(), b.cols(), 0.5);
  return p;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("train config validation names the key") {
  CHECK_NOTHROW(TrainConfig{}.validate());
  TrainConfig t;
  t.learning_rate = 0.0;
  CHECK_THROWS_WITH_AS(t.validate(), doctest::Contains("train.learning_rate"), ConfigError);
  t = {};
  t.batch_size = 0;
  CHECK_THROWS_WITH_AS(t.validate(), doctest::Contains("train.batch_size"), ConfigError);
  t = {};
  t.adam.beta1 = 1.0;
  CHECK_THROWS_WITH_AS(t.validate(), doctest::Contains("beta1"), ConfigError);
  t = {};
  t.adam.beta2 = -0.1;
  CHECK_THROWS_WITH_AS(t.validate(), doctest::Contains("beta2"), ConfigError);
}

TEST_CASE("default training hyperparameters") {
  const TrainConfig t;
  CHECK(t.learning_rate == 8e-4);
  CHECK(t.batch_size == 512);
  CHECK(t.iterations == 500);
  CHECK(t.adam.beta1 == 0.9);
  CHECK(t.adam.beta2 == 0.999);
  CHECK(t.adam.epsilon == 1e-8);
  CHECK(t.clip_norm == 0.0);
  CHECK(t.wmmse.max_iters == 50);
  CHECK(t.wmmse.tol == 1e-6);
}

TEST_CASE("adam first step moves by the learning rate") {
  RisnetParams p;
  p.blocks.push_back(RealMat::Zero(1, 1));
  AdamState s = AdamState::zeros_like(p);
  adam_step(p, {RealMat::Constant(1, 1, 1.0)}, s, 8e-4);
  CHECK(std::abs(p.blocks[0](0, 0) - 8e-4 / (1.0 + 1e-8)) < 1e-18);
  CHECK(s.t == 1);

  RisnetParams q;
  q.blocks.push_back(RealMat::Zero(1, 1));
  AdamState sq = AdamState::zeros_like(q);
  adam_step(q, {RealMat::Constant(1, 1, -3.0)}, sq, 8e-4);
  CHECK(q.blocks[0](0, 0) == doctest::Approx(-8e-4).epsilon(1e-7));
}

TEST_CASE("adam with zero gradient leaves params and still counts") {
  RisnetParams p = init_params(tiny_net(Variant::kPermutationVariant));
  const RisnetParams before = p;
  AdamState s = AdamState::zeros_like(p);
  std::vector<RealMat> zeros;
  for (const auto& b : p.blocks) zeros.push_back(RealMat::Zero(b.rows(), b.cols()));
  adam_step(p, zeros, s, 1e-3);
  adam_step(p, zeros, s, 1e-3);
  CHECK(p.identical(before));
  CHECK(s.t == 2);
}

TEST_CASE("adam is deterministic and checks shapes") {
  const RisnetParams init = init_params(tiny_net(Variant::kPermutationVariant));
  Rng rng(4);
  std::vector<std::vector<RealMat>> grads(3);
  for (auto& g : grads) {
    for (const auto& b : init.blocks) g.push_back(o::random_real(rng, b.rows(), b.cols()));
  }
  RisnetParams a = init, b = init;
  AdamState sa, sb;
  for (const auto& g : grads) {
    adam_step(a, g, sa, 1e-3);
    adam_step(b, g, sb, 1e-3);
  }
  CHECK(a.identical(b));
  CHECK(sa.identical(sb));
  CHECK(sa.t == 3);
  auto bad = grads[0];
  bad[0] = RealMat::Zero(1, 1);
  CHECK_THROWS_AS(adam_step(a, bad, sa, 1e-3), DimensionError);
  bad.pop_back();
  CHECK_THROWS_AS(adam_step(a, bad, sa, 1e-3), DimensionError);
}

TEST_CASE("batch gradient matches central differences with V fixed") {
  const ScenarioConfig sc = tiny_scenario();
  const Dataset data = sample_dataset(sc, Split::kTrain);
  const std::vector<std::size_t> idx{0, 3, 7};
  for (Variant v : {Variant::kPermutationVariant, Variant::kPermutationInvariant}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      CAPTURE(seed);
      RisnetParams p = random_params(tiny_net(v), seed);
      const auto pre = batch_precoders(p, data, idx, sc);
      const auto grads = batch_gradient(p, data, idx, pre, sc);
      std::size_t total = 0, good = 0;
      for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        const RealMat fd = o::central_difference(
            [&](const RealMat& x) {
              RisnetParams q = p;
              q.blocks[b] = x;
              return batch_objective(q, data, idx, pre, sc);
            },
            p.blocks[b]);
        for (Eigen::Index i = 0; i < fd.size(); ++i) {
          ++total;
          if (o::rel_error(grads[b].data()[i], fd.data()[i]) < 1e-5) ++good;
        }
      }
      CHECK(static_cast<double>(good) >= 0.99 * static_cast<double>(total));
    }
  }
}

TEST_CASE("per-sample gradient equals the single-sample batch gradient") {
  const ScenarioConfig sc = tiny_scenario();
  const Dataset data = sample_dataset(sc, Split::kTrain);
  const RisnetParams p = random_params(tiny_net(Variant::kPermutationVariant), 9);
  const std::vector<std::size_t> idx{5};
  const auto pre = batch_precoders(p, data, idx, sc);
  const SampleGradient s = sample_gradient(p, data.sample(5), sc);
  const auto g = batch_gradient(p, data, idx, pre, sc);
  CHECK(s.wsr == doctest::Approx(batch_objective(p, data, idx, pre, sc)).epsilon(1e-12));
  for (std::size_t b = 0; b < g.size(); ++b) CHECK(bitwise_equal(s.grads[b], g[b]));
}

TEST_CASE("batch indices are uniform draws keyed by iteration") {
  const auto a = batch_indices(5, 0, 10, 1000);
  CHECK(a == batch_indices(5, 0, 10, 1000));
  CHECK(a != batch_indices(5, 1, 10, 1000));
  CHECK(a != batch_indices(6, 0, 10, 1000));
  std::vector<int> counts(10, 0);
  for (std::size_t i : a) {
    REQUIRE(i < 10);
    ++counts[i];
  }
  for (int c : counts) CHECK(c > 50);
  CHECK_THROWS_AS(batch_indices(5, 0, 0, 4), ContractError);
}

TEST_CASE("zero iterations leave the parameters unchanged") {
  const ScenarioConfig sc = tiny_scenario();
  const Dataset data = sample_dataset(sc, Split::kTrain);
  TrainState st{init_params(tiny_net(Variant::kPermutationVariant)), {}};
  const RisnetParams before = st.params;
  const TrainLog log = train(data, st, tiny_train(0), sc);
  CHECK(log.records.empty());
  CHECK(st.params.identical(before));
}

TEST_CASE("training log invariants and CSV round trip") {
  const ScenarioConfig sc = tiny_scenario();
  const Dataset data = sample_dataset(sc, Split::kTrain);
  TrainState st{init_params(tiny_net(Variant::kPermutationInvariant)), {}};
  const TrainLog log = train(data, st, tiny_train(5), sc);
  REQUIRE(log.records.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(log.records[i].iteration == i + 1);
    CHECK(std::isfinite(log.records[i].mean_wsr));
    CHECK(log.records[i].mean_wsr >= 0.0);
    CHECK(log.records[i].grad_norm >= 0.0);
  }
  CHECK(st.adam.t == 5);

  testing::TempDir dir;
  log.write_csv(dir / "log.csv");
  const TrainLog back = TrainLog::read_csv(dir / "log.csv");
  REQUIRE(back.records.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(back.records[i].iteration == log.records[i].iteration);
    CHECK(back.records[i].mean_wsr == log.records[i].mean_wsr);
    CHECK(back.records[i].grad_norm == log.records[i].grad_norm);
  }
}

TEST_CASE("training is reproducible and thread-count independent") {
  const ScenarioConfig sc = tiny_scenario();
  const Dataset data = sample_dataset(sc, Split::kTrain);
  const RisnetParams init = init_params(tiny_net(Variant::kPermutationVariant));
  TrainState a{init, {}}, b{init, {}}, c{init, {}};
  TrainConfig cfg = tiny_train(4);
  const TrainLog la = train(data, a, cfg, sc);
  const TrainLog lb = train(data, b, cfg, sc);
  cfg.threads = 3;
  const TrainLog lc = train(data, c, cfg, sc);
  CHECK(a.params.identical(b.params));
  CHECK(a.adam.identical(b.adam));
  CHECK(a.params.identical(c.params));
  for (std::size_t i = 0; i < la.records.size(); ++i) {
    CHECK(la.records[i].mean_wsr == lb.records[i].mean_wsr);
    CHECK(std::abs(la.records[i].mean_wsr - lc.records[i].mean_wsr) < 1e-10);
  }
}

TEST_CASE("resuming from a saved state continues the same run") {
  testing::TempDir dir;
  const ScenarioConfig sc = tiny_scenario();
  const Dataset data = sample_dataset(sc, Split::kTrain);
  const RisnetParams init = init_params(tiny_net(Variant::kPermutationVariant));

  TrainState full{init, {}};
  const TrainLog full_log = train(data, full, tiny_train(6), sc);

  TrainState half{init, {}};
  TrainConfig cfg = tiny_train(6);
  cfg.checkpoint_every = 3;
  std::vector<std::uint32_t> seen;
  TrainHooks hooks;
  hooks.checkpoint = [&](std::uint32_t it, const TrainState& s) {
    seen.push_back(it);
    if (it == 3) {
      save_params(s.params, dir / "it3.risp");
      save_adam_state(s.adam, dir / "it3.adam");
    }
  };
  (void)train(data, half, cfg, sc, hooks);
  CHECK(seen == std::vector<std::uint32_t>{3, 6});

  TrainState resumed{load_params(dir / "it3.risp"), {}};
  resumed.adam = load_adam_state(dir / "it3.adam", resumed.params);
  CHECK(resumed.adam.t == 3);
  const TrainLog rest = train(data, resumed, tiny_train(6), sc);
  REQUIRE(rest.records.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rest.records[i].iteration == full_log.records[i + 3].iteration);
    CHECK(std::abs(rest.records[i].mean_wsr - full_log.records[i + 3].mean_wsr) < 1e-10);
  }
  CHECK(resumed.params.identical(full.params));
}

TEST_CASE("optimizer state file rejects mismatches") {
  testing::TempDir dir;
  const RisnetParams p = init_params(tiny_net(Variant::kPermutationVariant));
  AdamState s = AdamState::zeros_like(p);
  s.t = 7;
  save_adam_state(s, dir / "s.adam");
  CHECK(load_adam_state(dir / "s.adam", p).identical(s));
  const RisnetParams other = init_params(tiny_net(Variant::kPermutationInvariant));
  CHECK_THROWS_AS(load_adam_state(dir / "s.adam", other), Error);
}

TEST_CASE("non-finite channels abort with the iteration and sample") {
  const Dimensions dims{2, 4, 2};
  Rng rng(2);
  std::vector<ComplexMat> g, d;
  for (int i = 0; i < 3; ++i) {
    g.push_back(o::random_complex(rng, 2, 4));
    d.push_back(o::random_complex(rng, 2, 2));
  }
  g[1](0, 0) = Complex(std::nan(""), 0.0);
  const Dataset data(dims, o::random_complex(rng, 4, 2), g, d);
  ScenarioConfig sc = tiny_scenario();
  TrainState st{init_params(tiny_net(Variant::kPermutationVariant)), {}};
  TrainConfig cfg = tiny_train(3);
  cfg.batch_size = 8;
  CHECK_THROWS_WITH_AS(train(data, st, cfg, sc),
                       doctest::Contains("dataset sample 1"), NumericError);
  CHECK_THROWS_WITH_AS(train(data, st, cfg, sc), doctest::Contains("iteration 1"),
                       NumericError);
}

TEST_CASE("dimension mismatch between data and config is a config error") {
  const ScenarioConfig sc = tiny_scenario();
  const Dataset data = sample_dataset(sc, Split::kTrain);
  ScenarioConfig other = sc;
  other.dims.ris_antennas = 5;
  TrainState st{init_params(tiny_net(Variant::kPermutationVariant)), {}};
  CHECK_THROWS_AS(train(data, st, tiny_train(1), other), ConfigError);
  RisnetConfig three = tiny_net(Variant::kPermutationVariant);
  three.users = 3;
  TrainState wrong{init_params(three), {}};
  CHECK_THROWS_AS(train(data, wrong, tiny_train(1), sc), ConfigError);
}

TEST_CASE("evaluation is repeatable and never mutates parameters") {
  const ScenarioConfig sc = tiny_scenario();
  const Dataset test = sample_dataset(sc, Split::kTest);
  const RisnetParams p = random_params(tiny_net(Variant::kPermutationInvariant), 5);
  const RisnetParams before = p;
  const EvalResult a = evaluate(p, test, sc);
  const EvalResult b = evaluate(p, test, sc);
  const EvalResult c = evaluate(p, test, sc, {}, 4);
  CHECK(p.identical(before));
  CHECK(a.wsr == b.wsr);
  CHECK(a.mean_wsr == b.mean_wsr);
  CHECK(std::abs(a.mean_wsr - c.mean_wsr) < 1e-10);
  CHECK(a.wsr.size() == test.size());
}

TEST_CASE("an all-zero network evaluates to the identity-RIS baseline") {
  const ScenarioConfig sc = tiny_scenario();
  const Dataset test = sample_dataset(sc, Split::kTest);
  RisnetParams p = init_params(tiny_net(Variant::kPermutationVariant));
  for (RealMat& b : p.blocks) b.setZero();
  const EvalResult r = evaluate(p, test, sc);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double base = phase_eval(test.sample(i), RealMat::Zero(1, 4), sc).wsr;
    CHECK(r.wsr[i] == base);
  }
}

}  // TEST_SUITE

TEST_SUITE("training_full") {

TEST_CASE("full-size default configuration trains for two iterations") {
  ScenarioConfig sc;  // 9 BS antennas, 1024 RIS antennas, 4 users
  sc.rho = 1e11;
  sc.alpha = {0.25, 0.25, 0.25, 0.25};
  sc.n_train = 512;
  const Dataset data = sample_dataset(sc, Split::kTrain);
  for (Variant v : {Variant::kPermutationVariant, Variant::kPermutationInvariant}) {
    RisnetConfig net;
    net.variant = v;
    net.users = 4;
    net.layers = 8;
    net.branch_dim = v == Variant::kPermutationVariant ? 16 : 8;
    TrainConfig cfg;  // batch 512, learning rate 8e-4
    cfg.iterations = 2;
    cfg.threads = default_thread_count();
    TrainState st{init_params(net), {}};
    const TrainLog log = train(data, st, cfg, sc);
    CHECK(log.records.size() == 2);
    CHECK(std::isfinite(log.records.back().mean_wsr));
  }
}

struct DeskRun {
  ScenarioConfig sc;
  TrainState state;
  TrainLog log;
};

// Desk scale: M=4, N=64, U=2, batch 64, 200 iterations at rho = 10.
const DeskRun& desk_run() {
  static const DeskRun run = [] {
    DeskRun r;
    r.sc.dims = {4, 64, 2};
    r.sc.rho = 10.0;
    r.sc.n_train = 1024;
    r.sc.n_test = 256;
    RisnetConfig net;
    net.users = 2;
    net.init_seed = 1;
    TrainConfig cfg;
    cfg.iterations = 200;
    cfg.batch_size = 64;
    cfg.seed = 1;
    cfg.threads = default_thread_count();
    r.state = {init_params(net), {}};
    r.log = train(sample_dataset(r.sc, Split::kTrain), r.state, cfg, r.sc);
    return r;
  }();
  return run;
}

TEST_CASE("desk-scale training raises the 10-iteration mean WSR by half") {
  const TrainLog& log = desk_run().log;
  REQUIRE(log.records.size() == 200);
  double first = 0.0, last = 0.0;
  for (int k = 0; k < 10; ++k) {
    first += log.records[k].mean_wsr / 10.0;
    last += log.records[190 + k].mean_wsr / 10.0;
  }
  CAPTURE(first);
  CAPTURE(last);
  CHECK(last >= 1.5 * first);
}

TEST_CASE("trained desk-scale network beats random phases on the test set") {
  const DeskRun& r = desk_run();
  const Dataset test = sample_dataset(r.sc, Split::kTest);
  const double trained = evaluate(r.state.params, test, r.sc).mean_wsr;
  double random = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    Rng rng(1, Stream::kRandomPhase, i);
    random += random_phase_eval(test.sample(i), r.sc, rng) / static_cast<double>(test.size());
  }
  CAPTURE(random);
  CHECK(trained > random);
}

}  // TEST_SUITE
