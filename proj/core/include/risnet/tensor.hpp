#pragma once

#include <complex>
#include <cstddef>
#include <cstring>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace risnet {

using Complex = std::complex<double>;
using RealMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexMat =
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Same shape and identical bit patterns.
template <class Derived>
bool bitwise_equal(const Eigen::MatrixBase<Derived>& a,
                   const Eigen::MatrixBase<Derived>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  using Scalar = typename Derived::Scalar;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      const Scalar x = a(r, c);
      const Scalar y = b(r, c);
      if (std::memcmp(&x, &y, sizeof(Scalar)) != 0) return false;
    }
  }
  return true;
}

std::string shape_string(Eigen::Index rows, Eigen::Index cols);

namespace ad {

// Handle to a node on the Tape that created it.
struct Var {
  std::size_t id = 0;
};

// Reverse-mode recording of a fixed set of matrix primitives.
//
// Complex adjoints use the convention  dL/dRe(z) + j dL/dIm(z), so for a
// product C = A B the rules are  dA += dC B^H  and  dB += A^H dC.
//
// A tape is confined to one thread. Nodes are appended in execution order,
// which is a topological order by construction.
class Tape {
 public:
  using Value = std::variant<RealMat, ComplexMat>;
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Var leaf(RealMat value, bool trainable = false);
  Var leaf(ComplexMat value, bool trainable = false);

  // Appends a primitive application. `backward` receives the tape and the
  // node id and must accumulate into operand adjoint slots.
  Var record(Value value, std::span<const std::size_t> operands,
             BackwardFn backward);

  bool is_real(Var v) const;
  bool requires_grad(Var v) const;
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  const RealMat& real(Var v) const;
  const ComplexMat& complex(Var v) const;

  // Valid after backward() for every node the loss reached and every
  // trainable leaf.
  const RealMat& real_adjoint(Var v) const;
  const ComplexMat& complex_adjoint(Var v) const;

  // Zero-initialized on first use within a backward pass.
  RealMat& real_adjoint_slot(std::size_t id);
  ComplexMat& complex_adjoint_slot(std::size_t id);

  // Clears all adjoints, seeds the real 1x1 loss with 1 and propagates.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  std::vector<Var> trainable_leaves() const;

 private:
  struct Node {
    Value value;
    Value adjoint;
    bool has_adjoint = false;
    bool trainable = false;
    bool requires_grad = false;
    BackwardFn backward;
  };

  const Node& node(Var v) const;

  std::vector<Node> nodes_;
};

// Elementwise max(0, x); subgradient 0 at x == 0.
Var relu(Tape& t, Var x);
// W X + b with b (p x 1) added to every column of W X.
Var affine(Tape& t, Var w, Var x, Var b);
// Every column replaced by the row-wise mean. Row sums are accumulated in
// sorted order, so the result is exactly invariant to column permutations.
Var mean_cols(Tape& t, Var x);
Var concat_rows(Tape& t, std::span<const Var> parts);
// Elementwise e^{j psi}.
Var unit_phase(Tape& t, Var psi);
Var cmatmul(Tape& t, Var a, Var b);
// A diag(phi) for complex A (r x n) and phi (1 x n), without forming diag.
Var scale_cols(Tape& t, Var a, Var phi);
// Elementwise a + b, real or complex, same shape.
Var add(Tape& t, Var a, Var b);
// Elementwise s * a, real or complex.
Var scale(Tape& t, Var a, double s);
// Elementwise natural log of a real matrix.
Var log(Tape& t, Var x);
// Sum of all entries of a real matrix as a 1x1 node.
Var sum_all(Tape& t, Var x);
// Elementwise sum of equally shaped real parts. Each entry is summed in
// sorted order, so the result is exactly invariant to reordering `parts`.
Var sum_parts(Tape& t, std::span<const Var> parts);

}  // namespace ad
}  // namespace risnet
