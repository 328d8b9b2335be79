#include "risnet/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "risnet/errors.hpp"

namespace risnet {

std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

namespace ad {

namespace {

template <class Mat>
Mat zeros_like(const Mat& m) {
  return Mat::Zero(m.rows(), m.cols());
}

void require_real(const Tape& t, Var v, const char* op, const char* operand) {
  if (!t.is_real(v)) {
    throw ContractError(std::string(op) + ": operand " + operand +
                        " must be real");
  }
}

void require_complex(const Tape& t, Var v, const char* op,
                     const char* operand) {
  if (t.is_real(v)) {
    throw ContractError(std::string(op) + ": operand " + operand +
                        " must be complex");
  }
}

// Sum of `values` taken in ascending order.
double sorted_sum(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc;
}

}  // namespace

Var Tape::leaf(RealMat value, bool trainable) {
  Node n;
  n.value = std::move(value);
  n.trainable = trainable;
  n.requires_grad = trainable;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::leaf(ComplexMat value, bool trainable) {
  Node n;
  n.value = std::move(value);
  n.trainable = trainable;
  n.requires_grad = trainable;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::record(Value value, std::span<const std::size_t> operands,
                 BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (std::size_t id : operands) {
    if (id >= nodes_.size()) {
      throw ContractError("tape: operand id " + std::to_string(id) +
                          " is not on this tape");
    }
    n.requires_grad = n.requires_grad || nodes_[id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) {
    throw ContractError("tape: var " + std::to_string(v.id) +
                        " is not on this tape");
  }
  return nodes_[v.id];
}

bool Tape::is_real(Var v) const {
  return std::holds_alternative<RealMat>(node(v).value);
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

const RealMat& Tape::real(Var v) const {
  const auto* m = std::get_if<RealMat>(&node(v).value);
  if (m == nullptr) throw ContractError("tape: node holds a complex value");
  return *m;
}

const ComplexMat& Tape::complex(Var v) const {
  const auto* m = std::get_if<ComplexMat>(&node(v).value);
  if (m == nullptr) throw ContractError("tape: node holds a real value");
  return *m;
}

const RealMat& Tape::real_adjoint(Var v) const {
  const Node& n = node(v);
  if (!n.has_adjoint) throw ContractError("tape: node has no adjoint");
  return std::get<RealMat>(n.adjoint);
}

const ComplexMat& Tape::complex_adjoint(Var v) const {
  const Node& n = node(v);
  if (!n.has_adjoint) throw ContractError("tape: node has no adjoint");
  return std::get<ComplexMat>(n.adjoint);
}

RealMat& Tape::real_adjoint_slot(std::size_t id) {
  Node& n = nodes_.at(id);
  const auto& value = std::get<RealMat>(n.value);
  if (!n.has_adjoint) {
    n.adjoint = zeros_like(value);
    n.has_adjoint = true;
  }
  return std::get<RealMat>(n.adjoint);
}

ComplexMat& Tape::complex_adjoint_slot(std::size_t id) {
  Node& n = nodes_.at(id);
  const auto& value = std::get<ComplexMat>(n.value);
  if (!n.has_adjoint) {
    n.adjoint = zeros_like(value);
    n.has_adjoint = true;
  }
  return std::get<ComplexMat>(n.adjoint);
}

void Tape::backward(Var loss) {
  const Node& l = node(loss);
  const auto* lv = std::get_if<RealMat>(&l.value);
  if (lv == nullptr || lv->rows() != 1 || lv->cols() != 1) {
    throw ContractError("backward: loss must be a real 1x1 node");
  }
  for (Node& n : nodes_) {
    n.has_adjoint = false;
    n.adjoint = RealMat();
  }
  real_adjoint_slot(loss.id)(0, 0) = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.has_adjoint && n.requires_grad && n.backward) n.backward(*this, i);
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].trainable || nodes_[i].has_adjoint) continue;
    if (std::holds_alternative<RealMat>(nodes_[i].value)) {
      real_adjoint_slot(i);
    } else {
      complex_adjoint_slot(i);
    }
  }
}

std::vector<Var> Tape::trainable_leaves() const {
  std::vector<Var> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].trainable) out.push_back(Var{i});
  }
  return out;
}

Var relu(Tape& t, Var x) {
  require_real(t, x, "relu", "X");
  const RealMat& xv = t.real(x);
  RealMat out = xv.cwiseMax(0.0);
  const std::size_t ops[] = {x.id};
  return t.record(std::move(out), ops, [x](Tape& tp, std::size_t self) {
    const RealMat& in = tp.real(x);
    const RealMat& g = tp.real_adjoint(Var{self});
    tp.real_adjoint_slot(x.id).array() +=
        (in.array() > 0.0).select(g.array(), 0.0);
  });
}

Var affine(Tape& t, Var w, Var x, Var b) {
  require_real(t, w, "affine", "W");
  require_real(t, x, "affine", "X");
  require_real(t, b, "affine", "b");
  const RealMat& wv = t.real(w);
  const RealMat& xv = t.real(x);
  const RealMat& bv = t.real(b);
  if (xv.rows() != wv.cols()) {
    throw DimensionError("affine: X is " + shape_string(xv.rows(), xv.cols()) +
                         " but W is " + shape_string(wv.rows(), wv.cols()));
  }
  if (bv.rows() != wv.rows() || bv.cols() != 1) {
    throw DimensionError("affine: b is " + shape_string(bv.rows(), bv.cols()) +
                         ", expected " + shape_string(wv.rows(), 1));
  }
  // Accumulate row by row with a fixed inner order so that every column is
  // computed by the same sequence of roundings, whatever its position.
  RealMat out(wv.rows(), xv.cols());
  for (Eigen::Index r = 0; r < wv.rows(); ++r) {
    auto row = out.row(r);
    row.setConstant(bv(r, 0));
    for (Eigen::Index k = 0; k < wv.cols(); ++k) row += wv(r, k) * xv.row(k);
  }
  const std::size_t ops[] = {w.id, x.id, b.id};
  return t.record(std::move(out), ops, [w, x, b](Tape& tp, std::size_t self) {
    const RealMat& g = tp.real_adjoint(Var{self});
    if (tp.requires_grad(w)) {
      tp.real_adjoint_slot(w.id).noalias() += g * tp.real(x).transpose();
    }
    if (tp.requires_grad(x)) {
      tp.real_adjoint_slot(x.id).noalias() += tp.real(w).transpose() * g;
    }
    if (tp.requires_grad(b)) {
      tp.real_adjoint_slot(b.id) += g.rowwise().sum();
    }
  });
}

Var mean_cols(Tape& t, Var x) {
  require_real(t, x, "mean_cols", "X");
  const RealMat& xv = t.real(x);
  if (xv.cols() == 0) throw ContractError("mean_cols: empty input (N = 0)");
  const auto n = static_cast<double>(xv.cols());
  RealMat out(xv.rows(), xv.cols());
  std::vector<double> buf(static_cast<std::size_t>(xv.cols()));
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    std::copy(xv.row(r).begin(), xv.row(r).end(), buf.begin());
    out.row(r).setConstant(sorted_sum(buf) / n);
  }
  const std::size_t ops[] = {x.id};
  return t.record(std::move(out), ops, [x, n](Tape& tp, std::size_t self) {
    const RealMat& g = tp.real_adjoint(Var{self});
    const Eigen::VectorXd spread = g.rowwise().sum() / n;
    tp.real_adjoint_slot(x.id).colwise() += spread;
  });
}

Var concat_rows(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no parts");
  Eigen::Index cols = -1;
  Eigen::Index rows = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    require_real(t, parts[i], "concat_rows", "part");
    const RealMat& p = t.real(parts[i]);
    if (cols >= 0 && p.cols() != cols) {
      throw DimensionError("concat_rows: part " + std::to_string(i) + " has " +
                           std::to_string(p.cols()) + " columns, expected " +
                           std::to_string(cols));
    }
    cols = p.cols();
    rows += p.rows();
  }
  RealMat out(rows, cols);
  std::vector<std::size_t> ops;
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (Var v : parts) {
    const RealMat& p = t.real(v);
    out.middleRows(at, p.rows()) = p;
    ops.push_back(v.id);
    offsets.push_back(at);
    at += p.rows();
  }
  return t.record(std::move(out), ops,
                  [ops, offsets](Tape& tp, std::size_t self) {
                    const RealMat& g = tp.real_adjoint(Var{self});
                    for (std::size_t i = 0; i < ops.size(); ++i) {
                      if (!tp.requires_grad(ops[i])) continue;
                      RealMat& slot = tp.real_adjoint_slot(ops[i]);
                      slot += g.middleRows(offsets[i], slot.rows());
                    }
                  });
}

Var unit_phase(Tape& t, Var psi) {
  require_real(t, psi, "unit_phase", "psi");
  const RealMat& pv = t.real(psi);
  ComplexMat out(pv.rows(), pv.cols());
  for (Eigen::Index i = 0; i < pv.size(); ++i) {
    out.data()[i] = Complex(std::cos(pv.data()[i]), std::sin(pv.data()[i]));
  }
  const std::size_t ops[] = {psi.id};
  return t.record(std::move(out), ops, [psi](Tape& tp, std::size_t self) {
    const ComplexMat& g = tp.complex_adjoint(Var{self});
    const ComplexMat& phi = tp.complex(Var{self});
    RealMat& slot = tp.real_adjoint_slot(psi.id);
    // Re(conj(g) * j * phi)
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const Complex gi = g.data()[i];
      const Complex p = phi.data()[i];
      slot.data()[i] += -gi.real() * p.imag() + gi.imag() * p.real();
    }
  });
}

Var cmatmul(Tape& t, Var a, Var b) {
  require_complex(t, a, "cmatmul", "A");
  require_complex(t, b, "cmatmul", "B");
  const ComplexMat& av = t.complex(a);
  const ComplexMat& bv = t.complex(b);
  if (av.cols() != bv.rows()) {
    throw DimensionError("cmatmul: A is " + shape_string(av.rows(), av.cols()) +
                         " but B is " + shape_string(bv.rows(), bv.cols()));
  }
  ComplexMat out = av * bv;
  const std::size_t ops[] = {a.id, b.id};
  return t.record(std::move(out), ops, [a, b](Tape& tp, std::size_t self) {
    const ComplexMat& g = tp.complex_adjoint(Var{self});
    if (tp.requires_grad(a)) {
      tp.complex_adjoint_slot(a.id).noalias() += g * tp.complex(b).adjoint();
    }
    if (tp.requires_grad(b)) {
      tp.complex_adjoint_slot(b.id).noalias() += tp.complex(a).adjoint() * g;
    }
  });
}

Var scale_cols(Tape& t, Var a, Var phi) {
  require_complex(t, a, "scale_cols", "A");
  require_complex(t, phi, "scale_cols", "phi");
  const ComplexMat& av = t.complex(a);
  const ComplexMat& pv = t.complex(phi);
  if (pv.rows() != 1 || pv.cols() != av.cols()) {
    throw DimensionError("scale_cols: phi is " +
                         shape_string(pv.rows(), pv.cols()) + ", expected " +
                         shape_string(1, av.cols()));
  }
  ComplexMat out = av.array().rowwise() * pv.row(0).array();
  const std::size_t ops[] = {a.id, phi.id};
  return t.record(std::move(out), ops, [a, phi](Tape& tp, std::size_t self) {
    const ComplexMat& g = tp.complex_adjoint(Var{self});
    if (tp.requires_grad(a)) {
      tp.complex_adjoint_slot(a.id).array() +=
          g.array().rowwise() * tp.complex(phi).row(0).conjugate().array();
    }
    if (tp.requires_grad(phi)) {
      tp.complex_adjoint_slot(phi.id).row(0) +=
          (tp.complex(a).conjugate().array() * g.array()).colwise().sum().matrix();
    }
  });
}

Var add(Tape& t, Var a, Var b) {
  if (t.is_real(a) != t.is_real(b)) {
    throw ContractError("add: operands must both be real or both complex");
  }
  const std::size_t ops[] = {a.id, b.id};
  if (t.is_real(a)) {
    const RealMat& av = t.real(a);
    const RealMat& bv = t.real(b);
    if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
      throw DimensionError("add: " + shape_string(av.rows(), av.cols()) +
                           " vs " + shape_string(bv.rows(), bv.cols()));
    }
    return t.record(RealMat(av + bv), ops, [a, b](Tape& tp, std::size_t self) {
      const RealMat& g = tp.real_adjoint(Var{self});
      if (tp.requires_grad(a)) tp.real_adjoint_slot(a.id) += g;
      if (tp.requires_grad(b)) tp.real_adjoint_slot(b.id) += g;
    });
  }
  const ComplexMat& av = t.complex(a);
  const ComplexMat& bv = t.complex(b);
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
    throw DimensionError("add: " + shape_string(av.rows(), av.cols()) + " vs " +
                         shape_string(bv.rows(), bv.cols()));
  }
  return t.record(ComplexMat(av + bv), ops, [a, b](Tape& tp, std::size_t self) {
    const ComplexMat& g = tp.complex_adjoint(Var{self});
    if (tp.requires_grad(a)) tp.complex_adjoint_slot(a.id) += g;
    if (tp.requires_grad(b)) tp.complex_adjoint_slot(b.id) += g;
  });
}

Var scale(Tape& t, Var a, double s) {
  const std::size_t ops[] = {a.id};
  if (t.is_real(a)) {
    return t.record(RealMat(s * t.real(a)), ops,
                    [a, s](Tape& tp, std::size_t self) {
                      tp.real_adjoint_slot(a.id) +=
                          s * tp.real_adjoint(Var{self});
                    });
  }
  return t.record(ComplexMat(s * t.complex(a)), ops,
                  [a, s](Tape& tp, std::size_t self) {
                    tp.complex_adjoint_slot(a.id) +=
                        s * tp.complex_adjoint(Var{self});
                  });
}

Var log(Tape& t, Var x) {
  require_real(t, x, "log", "X");
  RealMat out = t.real(x).array().log().matrix();
  const std::size_t ops[] = {x.id};
  return t.record(std::move(out), ops, [x](Tape& tp, std::size_t self) {
    tp.real_adjoint_slot(x.id).array() +=
        tp.real_adjoint(Var{self}).array() / tp.real(x).array();
  });
}

Var sum_all(Tape& t, Var x) {
  require_real(t, x, "sum_all", "X");
  RealMat out(1, 1);
  out(0, 0) = t.real(x).sum();
  const std::size_t ops[] = {x.id};
  return t.record(std::move(out), ops, [x](Tape& tp, std::size_t self) {
    tp.real_adjoint_slot(x.id).array() += tp.real_adjoint(Var{self})(0, 0);
  });
}

Var sum_parts(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("sum_parts: no parts");
  for (Var v : parts) require_real(t, v, "sum_parts", "part");
  const RealMat& first = t.real(parts[0]);
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const RealMat& p = t.real(parts[i]);
    if (p.rows() != first.rows() || p.cols() != first.cols()) {
      throw DimensionError("sum_parts: part " + std::to_string(i) + " is " +
                           shape_string(p.rows(), p.cols()) + ", expected " +
                           shape_string(first.rows(), first.cols()));
    }
  }
  RealMat out(first.rows(), first.cols());
  std::vector<const double*> src;
  for (Var v : parts) src.push_back(t.real(v).data());
  std::vector<double> buf(parts.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    for (std::size_t k = 0; k < src.size(); ++k) buf[k] = src[k][i];
    out.data()[i] = sorted_sum(buf);
  }
  std::vector<std::size_t> ops;
  for (Var v : parts) ops.push_back(v.id);
  return t.record(std::move(out), ops, [ops](Tape& tp, std::size_t self) {
    const RealMat& g = tp.real_adjoint(Var{self});
    for (std::size_t id : ops) {
      if (tp.requires_grad(id)) tp.real_adjoint_slot(id) += g;
    }
  });
}

}  // namespace ad
}  // namespace risnet
