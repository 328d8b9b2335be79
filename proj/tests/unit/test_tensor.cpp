#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <numeric>

#include "oracles.hpp"
#include "risnet/errors.hpp"
#include "risnet/tensor.hpp"

using namespace risnet;
namespace o = risnet::oracle;

namespace {

RealMat mat(std::initializer_list<std::initializer_list<double>> rows) {
  RealMat m(static_cast<Eigen::Index>(rows.size()),
            static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

// Scalar probe sum(R .* X) (real) or sum(Re(conj(R) .* Z)) (complex), so that
// every output entry gets a distinct adjoint.
ad::Var probe(ad::Tape& t, ad::Var x, std::uint64_t seed) {
  Rng rng(seed);
  RealMat out(1, 1);
  const std::size_t ops[] = {x.id};
  if (t.is_real(x)) {
    RealMat r = o::random_real(rng, t.real(x).rows(), t.real(x).cols());
    out(0, 0) = (r.array() * t.real(x).array()).sum();
    return t.record(out, ops, [x, r](ad::Tape& tp, std::size_t self) {
      tp.real_adjoint_slot(x.id) += tp.real_adjoint(ad::Var{self})(0, 0) * r;
    });
  }
  ComplexMat r = o::random_complex(rng, t.complex(x).rows(), t.complex(x).cols());
  out(0, 0) = (r.conjugate().array() * t.complex(x).array()).real().sum();
  return t.record(out, ops, [x, r](ad::Tape& tp, std::size_t self) {
    tp.complex_adjoint_slot(x.id) += tp.real_adjoint(ad::Var{self})(0, 0) * r;
  });
}

using Builder = std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

// Checks the tape gradient of probe(op(inputs)) against central differences
// for every real input. Complex inputs are split into real and imaginary
// parts, each checked the same way.
double gradient_error(const Builder& op, const std::vector<ad::Tape::Value>& inputs) {
  auto build = [&](ad::Tape& t, const std::vector<ad::Tape::Value>& vals,
                   std::vector<ad::Var>& vars) {
    vars.clear();
    for (const auto& v : vals) {
      if (const auto* r = std::get_if<RealMat>(&v)) {
        vars.push_back(t.leaf(*r, true));
      } else {
        vars.push_back(t.leaf(std::get<ComplexMat>(v), true));
      }
    }
    return probe(t, op(t, vars), 99);
  };
  ad::Tape tape;
  std::vector<ad::Var> vars;
  const ad::Var loss = build(tape, inputs, vars);
  tape.backward(loss);

  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto eval_with = [&](auto replace) {
      return [&, replace](const RealMat& x) {
        auto vals = inputs;
        replace(vals[k], x);
        ad::Tape t;
        std::vector<ad::Var> vs;
        return t.real(build(t, vals, vs))(0, 0);
      };
    };
    if (const auto* r = std::get_if<RealMat>(&inputs[k])) {
      auto f = eval_with([](ad::Tape::Value& slot, const RealMat& x) { slot = x; });
      worst = std::max(worst, o::max_rel_error(tape.real_adjoint(vars[k]),
                                               o::central_difference(f, *r)));
    } else {
      const ComplexMat& z = std::get<ComplexMat>(inputs[k]);
      const ComplexMat adj = tape.complex_adjoint(vars[k]);
      auto f_re = eval_with([&z](ad::Tape::Value& slot, const RealMat& x) {
        ComplexMat c = z;
        c.real() = x;
        slot = c;
      });
      auto f_im = eval_with([&z](ad::Tape::Value& slot, const RealMat& x) {
        ComplexMat c = z;
        c.imag() = x;
        slot = c;
      });
      worst = std::max(worst, o::max_rel_error(adj.real(),
                                               o::central_difference(f_re, z.real())));
      worst = std::max(worst, o::max_rel_error(adj.imag(),
                                               o::central_difference(f_im, z.imag())));
    }
  }
  return worst;
}

}  // namespace

TEST_SUITE("tensorcore") {

TEST_CASE("relu sign cases and identity on the positive orthant") {
  ad::Tape t;
  CHECK(bitwise_equal(t.real(ad::relu(t, t.leaf(mat({{-1, 0}, {2, -3}})))),
                      mat({{0, 0}, {2, 0}})));
  const RealMat pos = mat({{0.5, 3}, {0, 7}});
  CHECK(bitwise_equal(t.real(ad::relu(t, t.leaf(pos))), pos));
}

TEST_CASE("relu gradient is the positive mask") {
  ad::Tape t;
  const ad::Var x = t.leaf(mat({{3, -3}}), true);
  t.backward(ad::sum_all(t, ad::relu(t, x)));
  CHECK(bitwise_equal(t.real_adjoint(x), mat({{1, 0}})));
}

TEST_CASE("relu subgradient at exactly zero is zero") {
  ad::Tape t;
  const ad::Var x = t.leaf(mat({{0.0, -0.0}}), true);
  t.backward(ad::sum_all(t, ad::relu(t, x)));
  CHECK(t.real_adjoint(x)(0, 0) == 0.0);
  CHECK(t.real_adjoint(x)(0, 1) == 0.0);
}

TEST_CASE("affine examples") {
  ad::Tape t;
  const RealMat x = mat({{1, 2}, {3, 4}});
  CHECK(bitwise_equal(
      t.real(ad::affine(t, t.leaf(RealMat(RealMat::Identity(2, 2))), t.leaf(x),
                        t.leaf(RealMat(RealMat::Zero(2, 1))))),
      x));
  CHECK(bitwise_equal(t.real(ad::affine(t, t.leaf(mat({{1, 1}})), t.leaf(x),
                                        t.leaf(mat({{10}})))),
                      mat({{14, 16}})));
}

TEST_CASE("affine shape errors name the operand") {
  ad::Tape t;
  const ad::Var w = t.leaf(RealMat(RealMat::Ones(2, 3)));
  const ad::Var x_bad = t.leaf(RealMat(RealMat::Ones(4, 5)));
  const ad::Var x = t.leaf(RealMat(RealMat::Ones(3, 5)));
  const ad::Var b = t.leaf(RealMat(RealMat::Zero(2, 1)));
  const ad::Var b_bad = t.leaf(RealMat(RealMat::Zero(3, 1)));
  try {
    ad::affine(t, w, x_bad, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("X") != std::string::npos);
  }
  try {
    ad::affine(t, w, x, b_bad);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("b") != std::string::npos);
  }
}

TEST_CASE("affine bias gradient matches central differences") {
  Rng rng(7);
  const RealMat w = o::random_real(rng, 3, 5);
  const RealMat x = o::random_real(rng, 5, 4);
  const RealMat b = o::random_real(rng, 3, 1);
  const double err = gradient_error(
      [](ad::Tape& t, std::span<const ad::Var> v) {
        return ad::affine(t, v[0], v[1], v[2]);
      },
      {w, x, b});
  CHECK(err < 1e-7);
}

TEST_CASE("mean_cols examples") {
  ad::Tape t;
  CHECK(bitwise_equal(t.real(ad::mean_cols(t, t.leaf(mat({{1, 3}})))),
                      mat({{2, 2}})));
  const RealMat same = mat({{1.5, 1.5, 1.5}, {-2, -2, -2}});
  CHECK(bitwise_equal(t.real(ad::mean_cols(t, t.leaf(same))), same));
  const ad::Var x = t.leaf(mat({{1, 2, 3}, {4, 5, 6}}), true);
  t.backward(ad::sum_all(t, ad::mean_cols(t, x)));
  CHECK(t.real_adjoint(x).isApprox(RealMat::Ones(2, 3), 1e-15));
}

TEST_CASE("mean_cols rejects an empty input") {
  ad::Tape t;
  CHECK_THROWS_AS(ad::mean_cols(t, t.leaf(RealMat(2, 0))), ContractError);
}

TEST_CASE("mean_cols is bitwise invariant to column permutations") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    RealMat x = o::random_real(rng, 3, 17);
    std::vector<Eigen::Index> perm(17);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
      std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
    }
    RealMat xp(3, 17);
    for (Eigen::Index c = 0; c < 17; ++c) xp.col(c) = x.col(perm[c]);
    ad::Tape t;
    const RealMat m = t.real(ad::mean_cols(t, t.leaf(x)));
    CHECK(bitwise_equal(m, t.real(ad::mean_cols(t, t.leaf(xp)))));
  }
}

TEST_CASE("concat_rows stacks in order and slices back") {
  ad::Tape t;
  const ad::Var parts1[] = {t.leaf(mat({{1}})), t.leaf(mat({{2}}))};
  CHECK(bitwise_equal(t.real(ad::concat_rows(t, parts1)), mat({{1}, {2}})));
  const RealMat only = mat({{1, 2, 3}});
  const ad::Var parts2[] = {t.leaf(only)};
  CHECK(bitwise_equal(t.real(ad::concat_rows(t, parts2)), only));

  Rng rng(3);
  const RealMat a = o::random_real(rng, 2, 5);
  const RealMat b = o::random_real(rng, 3, 5);
  const ad::Var parts3[] = {t.leaf(a), t.leaf(b)};
  const RealMat s = t.real(ad::concat_rows(t, parts3));
  CHECK(bitwise_equal(RealMat(s.topRows(2)), a));
  CHECK(bitwise_equal(RealMat(s.bottomRows(3)), b));

  const ad::Var bad[] = {t.leaf(a), t.leaf(RealMat(RealMat::Ones(1, 4)))};
  CHECK_THROWS_AS(ad::concat_rows(t, bad), DimensionError);
}

TEST_CASE("unit_phase values") {
  ad::Tape t;
  const ComplexMat z = t.complex(ad::unit_phase(t, t.leaf(mat({{0.0, std::numbers::pi}}))));
  CHECK(z(0, 0) == Complex(1.0, 0.0));
  CHECK(z(0, 1).real() == -1.0);
  CHECK(std::abs(z(0, 1).imag()) < 1e-15);
}

TEST_CASE("unit_phase magnitude is one within 1e-15") {
  Rng rng(5);
  const RealMat psi = o::random_real(rng, 1, 200, 50.0);
  ad::Tape t;
  const ComplexMat z = t.complex(ad::unit_phase(t, t.leaf(psi)));
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    CHECK(std::abs(std::abs(z(0, i)) - 1.0) <= 1e-15);
  }
}

TEST_CASE("unit_phase derivative of the real part at pi/2 is -1") {
  ad::Tape t;
  const ad::Var psi = t.leaf(mat({{std::numbers::pi / 2}}), true);
  const ad::Var z = ad::unit_phase(t, psi);
  // Re(z) via a probe with R = 1.
  RealMat out(1, 1);
  out(0, 0) = t.complex(z)(0, 0).real();
  const std::size_t ops[] = {z.id};
  const ad::Var re = t.record(out, ops, [z](ad::Tape& tp, std::size_t self) {
    tp.complex_adjoint_slot(z.id)(0, 0) += tp.real_adjoint(ad::Var{self})(0, 0);
  });
  t.backward(re);
  CHECK(std::abs(t.real_adjoint(psi)(0, 0) - (-1.0)) < 1e-9);
}

TEST_CASE("cmatmul examples") {
  Rng rng(1);
  const ComplexMat b = o::random_complex(rng, 3, 2);
  ad::Tape t;
  CHECK(bitwise_equal(
      t.complex(ad::cmatmul(t, t.leaf(ComplexMat(ComplexMat::Identity(3, 3))),
                            t.leaf(b))),
      b));
  ComplexMat j(1, 1);
  j(0, 0) = Complex(0, 1);
  CHECK(t.complex(ad::cmatmul(t, t.leaf(j), t.leaf(j)))(0, 0) == Complex(-1, 0));
  CHECK_THROWS_AS(ad::cmatmul(t, t.leaf(b), t.leaf(b)), DimensionError);
}

TEST_CASE("cmatmul matches the triple-loop oracle") {
  Rng rng(2);
  {
    const ComplexMat a = o::random_complex(rng, 3, 4);
    const ComplexMat b = o::random_complex(rng, 4, 2);
    ad::Tape t;
    const ComplexMat c = t.complex(ad::cmatmul(t, t.leaf(a), t.leaf(b)));
    CHECK((c - o::naive_matmul(a, b)).cwiseAbs().maxCoeff() < 1e-12);
  }
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = static_cast<Eigen::Index>(1 + rng.uniform_index(16));
    const auto k = static_cast<Eigen::Index>(1 + rng.uniform_index(16));
    const auto n = static_cast<Eigen::Index>(1 + rng.uniform_index(16));
    const ComplexMat a = o::random_complex(rng, m, k);
    const ComplexMat b = o::random_complex(rng, k, n);
    ad::Tape t;
    const ComplexMat c = t.complex(ad::cmatmul(t, t.leaf(a), t.leaf(b)));
    const ComplexMat ref = o::naive_matmul(a, b);
    CHECK((c - ref).norm() / ref.norm() < 1e-12);
  }
}

TEST_CASE("conjugate transpose is an involution") {
  Rng rng(4);
  const ComplexMat a = o::random_complex(rng, 5, 3);
  CHECK(bitwise_equal(ComplexMat(a.adjoint().adjoint()), a));
}

TEST_CASE("backward contract") {
  ad::Tape t;
  const ad::Var x = t.leaf(mat({{1, 2}, {3, 4}}), true);
  t.backward(ad::sum_all(t, x));
  CHECK(bitwise_equal(t.real_adjoint(x), RealMat(RealMat::Ones(2, 2))));

  ad::Tape t2;
  const ad::Var y = t2.leaf(mat({{1, 2}, {3, 4}}), true);
  t2.backward(ad::sum_all(t2, ad::relu(t2, ad::scale(t2, y, -1.0))));
  CHECK(bitwise_equal(t2.real_adjoint(y), RealMat(RealMat::Zero(2, 2))));

  CHECK_THROWS_AS(t2.backward(y), ContractError);
  ComplexMat z(1, 1);
  z(0, 0) = 1.0;
  CHECK_THROWS_AS(t2.backward(t2.leaf(z)), ContractError);
}

TEST_CASE("unreached trainable leaves still get zero adjoints") {
  ad::Tape t;
  const ad::Var used = t.leaf(mat({{1.0}}), true);
  const ad::Var unused = t.leaf(mat({{1.0, 2.0}}), true);
  t.backward(ad::sum_all(t, used));
  CHECK(t.real_adjoint(unused).rows() == 1);
  CHECK(t.real_adjoint(unused).cols() == 2);
  CHECK(t.real_adjoint(unused).isZero(0.0));
  CHECK(t.trainable_leaves().size() == 2);
}

TEST_CASE("backward is deterministic across repeated calls") {
  Rng rng(8);
  ad::Tape t;
  const ad::Var w = t.leaf(o::random_real(rng, 4, 6), true);
  const ad::Var x = t.leaf(o::random_real(rng, 6, 9), true);
  const ad::Var b = t.leaf(o::random_real(rng, 4, 1), true);
  const ad::Var h = ad::relu(t, ad::affine(t, w, x, b));
  const ad::Var parts[] = {h, ad::mean_cols(t, h)};
  const ad::Var loss = ad::sum_all(t, ad::concat_rows(t, parts));
  t.backward(loss);
  const RealMat gw = t.real_adjoint(w);
  const RealMat gx = t.real_adjoint(x);
  t.backward(loss);
  CHECK(bitwise_equal(gw, t.real_adjoint(w)));
  CHECK(bitwise_equal(gx, t.real_adjoint(x)));
}

TEST_CASE("sum_parts is exactly invariant to the order of its parts") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<RealMat> vals;
    for (int k = 0; k < 5; ++k) vals.push_back(o::random_real(rng, 3, 4, 1e3));
    ad::Tape t;
    std::vector<ad::Var> fwd, rev;
    for (const auto& v : vals) fwd.push_back(t.leaf(v));
    rev.assign(fwd.rbegin(), fwd.rend());
    const RealMat a = t.real(ad::sum_parts(t, fwd));
    CHECK(bitwise_equal(a, t.real(ad::sum_parts(t, rev))));
  }
}

TEST_CASE("every primitive's gradient matches central differences") {
  Rng rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    CAPTURE(trial);
    const RealMat away = o::random_away_from_zero(rng, 3, 4);
    CHECK(gradient_error([](ad::Tape& t, std::span<const ad::Var> v) {
            return ad::relu(t, v[0]);
          },
                         {away}) < 1e-5);
    CHECK(gradient_error([](ad::Tape& t, std::span<const ad::Var> v) {
            return ad::affine(t, v[0], v[1], v[2]);
          },
                         {o::random_real(rng, 2, 3), o::random_real(rng, 3, 5),
                          o::random_real(rng, 2, 1)}) < 1e-5);
    CHECK(gradient_error([](ad::Tape& t, std::span<const ad::Var> v) {
            return ad::mean_cols(t, v[0]);
          },
                         {o::random_real(rng, 3, 6)}) < 1e-5);
    CHECK(gradient_error([](ad::Tape& t, std::span<const ad::Var> v) {
            return ad::concat_rows(t, v);
          },
                         {o::random_real(rng, 2, 3), o::random_real(rng, 1, 3)}) <
          1e-5);
    CHECK(gradient_error([](ad::Tape& t, std::span<const ad::Var> v) {
            return ad::unit_phase(t, v[0]);
          },
                         {o::random_real(rng, 1, 6, 3.0)}) < 1e-5);
    CHECK(gradient_error([](ad::Tape& t, std::span<const ad::Var> v) {
            return ad::cmatmul(t, v[0], v[1]);
          },
                         {o::random_complex(rng, 3, 4), o::random_complex(rng, 4, 2)}) <
          1e-5);
    CHECK(gradient_error([](ad::Tape& t, std::span<const ad::Var> v) {
            return ad::scale_cols(t, v[0], v[1]);
          },
                         {o::random_complex(rng, 2, 5), o::random_complex(rng, 1, 5)}) <
          1e-5);
    CHECK(gradient_error([](ad::Tape& t, std::span<const ad::Var> v) {
            return ad::add(t, v[0], v[1]);
          },
                         {o::random_complex(rng, 2, 2), o::random_complex(rng, 2, 2)}) <
          1e-5);
    CHECK(gradient_error([](ad::Tape& t, std::span<const ad::Var> v) {
            return ad::scale(t, v[0], -2.5);
          },
                         {o::random_real(rng, 2, 2)}) < 1e-5);
    RealMat positive = o::random_real(rng, 2, 3).cwiseAbs().array() + 0.5;
    CHECK(gradient_error([](ad::Tape& t, std::span<const ad::Var> v) {
            return ad::log(t, v[0]);
          },
                         {positive}) < 1e-5);
    CHECK(gradient_error([](ad::Tape& t, std::span<const ad::Var> v) {
            return ad::sum_parts(t, v);
          },
                         {o::random_real(rng, 2, 3), o::random_real(rng, 2, 3),
                          o::random_real(rng, 2, 3)}) < 1e-5);
  }
}

}  // TEST_SUITE
