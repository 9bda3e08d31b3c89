#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "empmp/error.hpp"

namespace empmp {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tape;

namespace detail {
struct TensorAccess;
}

// Dense row-major f64 tensor with value semantics. Copies share the
// underlying buffer; every op allocates a fresh output, so shared buffers are
// only mutated through values_mut() (parameter init and optimizer updates).
// A tensor may carry a link to the tape node that produced it; such tensors
// must not outlive the tape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const;
  std::size_t size() const { return data_ ? data_->size() : 0; }
  bool empty() const { return data_ == nullptr; }

  std::span<const double> values() const;
  std::span<double> values_mut();
  double item() const;
  double at(std::initializer_list<int> index) const;

  // Same buffer, no tape link.
  Tensor detached() const;
  // Fresh buffer with copied contents, no tape link.
  Tensor deep_copy() const;

  bool tracked() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

 private:
  friend class Tape;
  friend struct detail::TensorAccess;
  std::shared_ptr<std::vector<double>> data_;
  Shape shape_;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

// Reverse-mode tape. Ops append nodes during the forward pass; backward()
// replays pull closures once each, in reverse insertion order, which is a
// valid topological order because operands always precede their results.
// Gradient buffers are allocated lazily and accumulate across backward calls
// until zero_grad().
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool live() const { return live_; }
  void set_live(bool live) { live_ = live; }

  // Registers a leaf (parameter or input). The returned view shares data
  // with t and participates in gradient tracking.
  Tensor watch(const Tensor& t);

  // Seeds d(loss)/d(loss) = 1 and propagates. loss must be a scalar recorded
  // on this tape.
  void backward(const Tensor& loss);

  // Gradient of the last backward pass(es) w.r.t. a tracked tensor. Allocates
  // (and returns) zeros if the tensor never received a contribution.
  std::span<const double> grad(const Tensor& t);
  std::vector<double> grad_copy(const Tensor& t);

  void zero_grad();
  std::size_t nodes() const { return nodes_.size(); }

  // Recording interface used by the ops below.
  int record(std::size_t value_size, std::vector<int> parents,
             std::function<void(Tape&)> pull);
  std::span<double> grad_accum(int node);
  std::span<const double> grad_view(int node) const;
  bool grad_touched(int node) const;
  Tensor adopt(Tensor t, int node) const;

 private:
  struct Node {
    std::size_t size = 0;
    std::vector<int> parents;
    std::function<void(Tape&)> pull;
    std::vector<double> grad;
  };
  std::vector<Node> nodes_;
  bool live_ = true;
};

// Free-function form of Tape::backward.
void backward(const Tensor& loss, Tape& tape);

// out[..., j, ...] = sum_i x[..., i, ...] * w[i][j] + b[j], contracting the
// given axis of x against the first axis of w; axis -1 means the last axis.
// Realizes temporal maps (axis = last), the feature embedding and decoding
// head (axis = 0), and the distance embedding (axis = 0).
Tensor linear_along_axis(const Tensor& x, int axis, const Tensor& w,
                         const Tensor& b);

// Normalizes over one axis with population variance, then applies the
// per-position affine (gain, bias), each of length dim(axis).
Tensor layer_norm(const Tensor& x, int axis, const Tensor& gain,
                  const Tensor& bias, double eps);

// Flattens two adjacent axes (first, first+1) into one; pure view, shares the
// buffer. Row-major layout means (p, t) -> p * T + t.
Tensor merge_axes(const Tensor& x, int first, int second);

// Inverse of merge_axes; splits axis into (first_size, second_size).
Tensor split_axes(const Tensor& x, int axis, int first_size, int second_size);

// Elementwise product. Shapes must match exactly, or y may omit axis 1 of x
// (the person axis), in which case it is broadcast along that axis.
Tensor hadamard(const Tensor& x, const Tensor& y);

Tensor add(const Tensor& x, const Tensor& y);
Tensor subtract(const Tensor& x, const Tensor& y);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);

// Inserts a new axis of the given size at `axis`, repeating x along it.
Tensor repeat_axis(const Tensor& x, int axis, int count);

// Scalar sum of all elements.
Tensor sum_all(const Tensor& x);

// out[..., t, ...] = x[..., t+1, ...] - x[..., t, ...]; the axis shrinks by
// one and must have size >= 2.
Tensor diff_along_axis(const Tensor& x, int axis);

// Compares analytic gradients of the scalar f(params) against central finite
// differences at the given step, element by element, and returns the maximum
// relative error |a - c| / (|a| + |c| + noise), where noise is the roundoff
// floor of the central difference itself. f must be a pure function of the
// parameter values; it is re-invoked with perturbed, untracked copies.
double finite_diff_check(
    const std::function<Tensor(const std::vector<Tensor>&)>& f,
    const std::vector<Tensor>& params, double step);

}  // namespace empmp
