#include "empmp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <utility>

namespace empmp {

namespace detail {

// Internal escape hatch for view ops that share the data buffer under a new
// shape (merge_axes / split_axes).
struct TensorAccess {
  static Tensor alias(const Tensor& t, Shape shape) {
    if (shape_numel(shape) != t.size())
      throw DimensionError("view shape " + shape_str(shape) + " does not cover " +
                           std::to_string(t.size()) + " elements");
    Tensor r;
    r.data_ = t.data_;
    r.shape_ = std::move(shape);
    return r;
  }
};

}  // namespace detail

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 1) throw DimensionError("shape has non-positive extent " + std::to_string(d));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ')';
  return out.str();
}

Tensor::Tensor(Shape shape)
    : data_(std::make_shared<std::vector<double>>(shape_numel(shape), 0.0)),
      shape_(std::move(shape)) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)) {
  if (shape_numel(shape_) != values.size())
    throw DimensionError("tensor shape " + shape_str(shape_) + " does not match " +
                         std::to_string(values.size()) + " values");
  data_ = std::make_shared<std::vector<double>>(std::move(values));
}

Tensor Tensor::zeros(Shape shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(Shape shape, double value) {
  Tensor t(std::move(shape));
  for (double& v : *t.data_) v = value;
  return t;
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{1}, {value}); }

int Tensor::dim(int axis) const {
  if (axis < 0 || axis >= rank())
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(shape_));
  return shape_[static_cast<std::size_t>(axis)];
}

std::span<const double> Tensor::values() const {
  if (!data_) throw ContractError("reading values of an empty tensor");
  return {data_->data(), data_->size()};
}

std::span<double> Tensor::values_mut() {
  if (!data_) throw ContractError("mutating an empty tensor");
  return {data_->data(), data_->size()};
}

double Tensor::item() const {
  if (size() != 1)
    throw ContractError("item() requires a one-element tensor, got " + shape_str(shape_));
  return (*data_)[0];
}

double Tensor::at(std::initializer_list<int> index) const {
  if (static_cast<int>(index.size()) != rank())
    throw DimensionError("index rank " + std::to_string(index.size()) +
                         " does not match tensor rank " + std::to_string(rank()));
  std::size_t flat = 0;
  int axis = 0;
  for (int i : index) {
    int d = shape_[static_cast<std::size_t>(axis)];
    if (i < 0 || i >= d)
      throw DimensionError("index " + std::to_string(i) + " out of range on axis " +
                           std::to_string(axis));
    flat = flat * static_cast<std::size_t>(d) + static_cast<std::size_t>(i);
    ++axis;
  }
  return (*data_)[flat];
}

Tensor Tensor::detached() const {
  Tensor t = *this;
  t.tape_ = nullptr;
  t.node_ = -1;
  return t;
}

Tensor Tensor::deep_copy() const {
  Tensor t;
  t.shape_ = shape_;
  t.data_ = data_ ? std::make_shared<std::vector<double>>(*data_) : nullptr;
  return t;
}

Tensor Tape::adopt(Tensor t, int node) const {
  t.tape_ = const_cast<Tape*>(this);
  t.node_ = node;
  return t;
}

Tensor Tape::watch(const Tensor& t) {
  if (t.empty()) throw ContractError("cannot watch an empty tensor");
  int id = record(t.size(), {}, nullptr);
  return adopt(t.detached(), id);
}

int Tape::record(std::size_t value_size, std::vector<int> parents,
                 std::function<void(Tape&)> pull) {
  for (int p : parents)
    if (p < 0 || p >= static_cast<int>(nodes_.size()))
      throw TapeError("node parent does not precede the node");
  Node n;
  n.size = value_size;
  n.parents = std::move(parents);
  n.pull = std::move(pull);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

std::span<double> Tape::grad_accum(int node) {
  Node& n = nodes_.at(static_cast<std::size_t>(node));
  if (n.grad.empty()) n.grad.assign(n.size, 0.0);
  return {n.grad.data(), n.grad.size()};
}

std::span<const double> Tape::grad_view(int node) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(node));
  return {n.grad.data(), n.grad.size()};
}

bool Tape::grad_touched(int node) const {
  return !nodes_.at(static_cast<std::size_t>(node)).grad.empty();
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape() != this) throw TapeError("loss tensor is not recorded on this tape");
  if (loss.size() != 1)
    throw ContractError("backward expects a scalar loss, got " + shape_str(loss.shape()));
  // Intermediate grads left over from an earlier backward would be pulled
  // into the leaves a second time; only leaves accumulate across calls.
  for (Node& n : nodes_)
    if (n.pull) n.grad.clear();
  grad_accum(loss.node())[0] += 1.0;
  for (int i = loss.node(); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.grad.empty() && n.pull) n.pull(*this);
  }
}

std::span<const double> Tape::grad(const Tensor& t) {
  if (t.tape() != this) throw TapeError("tensor is not recorded on this tape");
  return grad_accum(t.node());
}

std::vector<double> Tape::grad_copy(const Tensor& t) {
  auto g = grad(t);
  return {g.begin(), g.end()};
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad.clear();
}

void backward(const Tensor& loss, Tape& tape) { tape.backward(loss); }

namespace {

// Flat view of a tensor as (outer, n, inner) around one axis.
struct AxisView {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisView axis_view(const Shape& shape, int axis) {
  AxisView v;
  for (int i = 0; i < static_cast<int>(shape.size()); ++i) {
    std::size_t d = static_cast<std::size_t>(shape[static_cast<std::size_t>(i)]);
    if (i < axis)
      v.outer *= d;
    else if (i == axis)
      v.n = d;
    else
      v.inner *= d;
  }
  return v;
}

void check_axis(const Tensor& x, int axis, const char* op) {
  if (axis < 0 || axis >= x.rank())
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for shape " + shape_str(x.shape()));
}

void check_same_shape(const Tensor& x, const Tensor& y, const char* op) {
  if (x.shape() != y.shape())
    throw DimensionError(std::string(op) + ": shapes " + shape_str(x.shape()) + " and " +
                         shape_str(y.shape()) + " differ");
}

// The unique live tape among the operands, if any.
Tape* common_tape(std::initializer_list<const Tensor*> ts) {
  Tape* tape = nullptr;
  for (const Tensor* t : ts) {
    if (!t->tracked()) continue;
    if (tape && t->tape() != tape) throw TapeError("operands recorded on different tapes");
    tape = t->tape();
  }
  if (tape && !tape->live()) tape = nullptr;
  return tape;
}

#ifndef NDEBUG
void debug_check_finite(std::span<const double> v, const char* op) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericError(std::string(op) + " produced a non-finite value");
}
#else
void debug_check_finite(std::span<const double>, const char*) {}
#endif

std::vector<int> tracked_parents(std::initializer_list<const Tensor*> ts) {
  std::vector<int> parents;
  for (const Tensor* t : ts)
    if (t->tracked()) parents.push_back(t->node());
  return parents;
}

// Records `out` on the tape (when tracked). make_pull receives the freshly
// assigned node id and returns the pull closure, so closures can read their
// own upstream gradient.
template <typename MakePull>
Tensor record_op(Tape* tape, Tensor out, std::vector<int> parents, MakePull make_pull) {
  if (!tape) return out;
  struct PullBox {
    std::function<void(Tape&)> fn;
  };
  auto box = std::make_shared<PullBox>();
  int id = tape->record(out.size(), std::move(parents), [box](Tape& t) { box->fn(t); });
  box->fn = make_pull(id);
  return tape->adopt(out, id);
}

}  // namespace

Tensor linear_along_axis(const Tensor& x, int axis, const Tensor& w, const Tensor& b) {
  if (axis == -1) axis = static_cast<int>(x.rank()) - 1;
  check_axis(x, axis, "linear_along_axis");
  if (w.rank() != 2)
    throw DimensionError("linear_along_axis: weight must be rank 2, got " +
                         shape_str(w.shape()));
  if (b.rank() != 1)
    throw DimensionError("linear_along_axis: bias must be rank 1, got " + shape_str(b.shape()));
  const int n = x.dim(axis);
  const int m = w.dim(1);
  if (w.dim(0) != n)
    throw DimensionError("linear_along_axis: axis " + std::to_string(axis) + " has size " +
                         std::to_string(n) + " but weight expects " + std::to_string(w.dim(0)));
  if (b.dim(0) != m)
    throw DimensionError("linear_along_axis: bias length " + std::to_string(b.dim(0)) +
                         " does not match weight output size " + std::to_string(m));

  const AxisView v = axis_view(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[static_cast<std::size_t>(axis)] = m;
  Tensor out(out_shape);

  const double* xd = x.values().data();
  const double* wd = w.values().data();
  const double* bd = b.values().data();
  double* od = out.values_mut().data();
  const std::size_t N = v.n, M = static_cast<std::size_t>(m), I = v.inner;

  if (I == 1) {
    for (std::size_t o = 0; o < v.outer; ++o) {
      double* orow = od + o * M;
      std::memcpy(orow, bd, M * sizeof(double));
      const double* xrow = xd + o * N;
      for (std::size_t i = 0; i < N; ++i) {
        const double xi = xrow[i];
        const double* wrow = wd + i * M;
        for (std::size_t j = 0; j < M; ++j) orow[j] += xi * wrow[j];
      }
    }
  } else {
    for (std::size_t o = 0; o < v.outer; ++o) {
      for (std::size_t j = 0; j < M; ++j) {
        double* oj = od + (o * M + j) * I;
        for (std::size_t k = 0; k < I; ++k) oj[k] = bd[j];
      }
      for (std::size_t i = 0; i < N; ++i) {
        const double* xi = xd + (o * N + i) * I;
        const double* wrow = wd + i * M;
        for (std::size_t j = 0; j < M; ++j) {
          const double wij = wrow[j];
          double* oj = od + (o * M + j) * I;
          for (std::size_t k = 0; k < I; ++k) oj[k] += xi[k] * wij;
        }
      }
    }
  }
  debug_check_finite(out.values(), "linear_along_axis");

  Tape* tape = common_tape({&x, &w, &b});
  if (!tape) return out;

  const int xn = x.tracked() ? x.node() : -1;
  const int wn = w.tracked() ? w.node() : -1;
  const int bn = b.tracked() ? b.node() : -1;
  const Tensor xv = x.detached();
  const Tensor wv = w.detached();

  return record_op(tape, out, tracked_parents({&x, &w, &b}), [=](int self) {
    return [=](Tape& t) {
      const double* dout = t.grad_view(self).data();
      const double* xd2 = xv.values().data();
      const double* wd2 = wv.values().data();
      if (xn >= 0) {
        double* dx = t.grad_accum(xn).data();
        if (I == 1) {
          for (std::size_t o = 0; o < v.outer; ++o) {
            const double* drow = dout + o * M;
            double* xgrow = dx + o * N;
            for (std::size_t i = 0; i < N; ++i) {
              const double* wrow = wd2 + i * M;
              double s = 0.0;
              for (std::size_t j = 0; j < M; ++j) s += drow[j] * wrow[j];
              xgrow[i] += s;
            }
          }
        } else {
          for (std::size_t o = 0; o < v.outer; ++o)
            for (std::size_t i = 0; i < N; ++i) {
              double* dxi = dx + (o * N + i) * I;
              const double* wrow = wd2 + i * M;
              for (std::size_t j = 0; j < M; ++j) {
                const double wij = wrow[j];
                const double* dj = dout + (o * M + j) * I;
                for (std::size_t k = 0; k < I; ++k) dxi[k] += dj[k] * wij;
              }
            }
        }
      }
      if (wn >= 0) {
        double* dw = t.grad_accum(wn).data();
        if (I == 1) {
          for (std::size_t o = 0; o < v.outer; ++o) {
            const double* drow = dout + o * M;
            const double* xrow = xd2 + o * N;
            for (std::size_t i = 0; i < N; ++i) {
              const double xi = xrow[i];
              double* dwrow = dw + i * M;
              for (std::size_t j = 0; j < M; ++j) dwrow[j] += xi * drow[j];
            }
          }
        } else {
          for (std::size_t o = 0; o < v.outer; ++o)
            for (std::size_t i = 0; i < N; ++i) {
              const double* xi = xd2 + (o * N + i) * I;
              double* dwrow = dw + i * M;
              for (std::size_t j = 0; j < M; ++j) {
                const double* dj = dout + (o * M + j) * I;
                double s = 0.0;
                for (std::size_t k = 0; k < I; ++k) s += xi[k] * dj[k];
                dwrow[j] += s;
              }
            }
        }
      }
      if (bn >= 0) {
        double* db = t.grad_accum(bn).data();
        for (std::size_t o = 0; o < v.outer; ++o)
          for (std::size_t j = 0; j < M; ++j) {
            const double* dj = dout + (o * M + j) * I;
            double s = 0.0;
            for (std::size_t k = 0; k < I; ++k) s += dj[k];
            db[j] += s;
          }
      }
    };
  });
}

Tensor layer_norm(const Tensor& x, int axis, const Tensor& gain, const Tensor& bias,
                  double eps) {
  check_axis(x, axis, "layer_norm");
  if (eps <= 0.0)
    throw ConfigError("layer_norm: eps must be positive, got " + std::to_string(eps));
  const int n = x.dim(axis);
  if (gain.rank() != 1 || gain.dim(0) != n)
    throw DimensionError("layer_norm: gain must have length " + std::to_string(n) +
                         " (size of axis " + std::to_string(axis) + ")");
  if (bias.rank() != 1 || bias.dim(0) != n)
    throw DimensionError("layer_norm: bias must have length " + std::to_string(n) +
                         " (size of axis " + std::to_string(axis) + ")");

  const AxisView v = axis_view(x.shape(), axis);
  Tensor out(x.shape());
  auto xhat = std::make_shared<std::vector<double>>(x.size());
  auto rstd = std::make_shared<std::vector<double>>(v.outer * v.inner);

  const double* xd = x.values().data();
  const double* gd = gain.values().data();
  const double* bd = bias.values().data();
  double* od = out.values_mut().data();
  const std::size_t N = v.n, I = v.inner;
  const double inv_n = 1.0 / static_cast<double>(N);

  std::vector<double> mean(I), var(I);
  for (std::size_t o = 0; o < v.outer; ++o) {
    const std::size_t base = o * N * I;
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      const double* xi = xd + base + i * I;
      for (std::size_t k = 0; k < I; ++k) mean[k] += xi[k];
    }
    for (std::size_t k = 0; k < I; ++k) mean[k] *= inv_n;
    std::fill(var.begin(), var.end(), 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      const double* xi = xd + base + i * I;
      for (std::size_t k = 0; k < I; ++k) {
        const double d = xi[k] - mean[k];
        var[k] += d * d;
      }
    }
    double* rs = rstd->data() + o * I;
    for (std::size_t k = 0; k < I; ++k) rs[k] = 1.0 / std::sqrt(var[k] * inv_n + eps);
    for (std::size_t i = 0; i < N; ++i) {
      const double* xi = xd + base + i * I;
      double* xh = xhat->data() + base + i * I;
      double* oi = od + base + i * I;
      const double gi = gd[i], bi = bd[i];
      for (std::size_t k = 0; k < I; ++k) {
        const double h = (xi[k] - mean[k]) * rs[k];
        xh[k] = h;
        oi[k] = gi * h + bi;
      }
    }
  }
  debug_check_finite(out.values(), "layer_norm");

  Tape* tape = common_tape({&x, &gain, &bias});
  if (!tape) return out;

  const int xn = x.tracked() ? x.node() : -1;
  const int gn = gain.tracked() ? gain.node() : -1;
  const int bn = bias.tracked() ? bias.node() : -1;
  const Tensor gv = gain.detached();

  return record_op(tape, out, tracked_parents({&x, &gain, &bias}), [=](int self) {
    return [=](Tape& t) {
      const double* dout = t.grad_view(self).data();
      const double* gd2 = gv.values().data();
      const std::size_t N2 = v.n, I2 = v.inner;
      const double inv = 1.0 / static_cast<double>(N2);
      std::vector<double> mh(I2), mhx(I2);
      double* dx = xn >= 0 ? t.grad_accum(xn).data() : nullptr;
      double* dg = gn >= 0 ? t.grad_accum(gn).data() : nullptr;
      double* db = bn >= 0 ? t.grad_accum(bn).data() : nullptr;
      for (std::size_t o = 0; o < v.outer; ++o) {
        const std::size_t base = o * N2 * I2;
        const double* rs = rstd->data() + o * I2;
        if (dx) {
          std::fill(mh.begin(), mh.end(), 0.0);
          std::fill(mhx.begin(), mhx.end(), 0.0);
          for (std::size_t i = 0; i < N2; ++i) {
            const double* dy = dout + base + i * I2;
            const double* xh = xhat->data() + base + i * I2;
            const double gi = gd2[i];
            for (std::size_t k = 0; k < I2; ++k) {
              const double h = gi * dy[k];
              mh[k] += h;
              mhx[k] += h * xh[k];
            }
          }
          for (std::size_t k = 0; k < I2; ++k) {
            mh[k] *= inv;
            mhx[k] *= inv;
          }
        }
        for (std::size_t i = 0; i < N2; ++i) {
          const double* dy = dout + base + i * I2;
          const double* xh = xhat->data() + base + i * I2;
          const double gi = gd2[i];
          double dgi = 0.0, dbi = 0.0;
          double* dxi = dx ? dx + base + i * I2 : nullptr;
          for (std::size_t k = 0; k < I2; ++k) {
            if (dxi) dxi[k] += (gi * dy[k] - mh[k] - xh[k] * mhx[k]) * rs[k];
            dgi += dy[k] * xh[k];
            dbi += dy[k];
          }
          if (dg) dg[i] += dgi;
          if (db) db[i] += dbi;
        }
      }
    };
  });
}

namespace {

// Shared implementation for the two reshape views. Gradients map one-to-one
// through the unchanged flat layout.
Tensor reshape_view(const Tensor& x, Shape out_shape) {
  Tensor out = detail::TensorAccess::alias(x, std::move(out_shape));
  Tape* tape = common_tape({&x});
  if (!tape) return out;
  const int xn = x.node();
  const std::size_t total = x.size();
  return record_op(tape, out, {xn}, [=](int self) {
    return [=](Tape& t) {
      const double* dout = t.grad_view(self).data();
      double* dx = t.grad_accum(xn).data();
      for (std::size_t i = 0; i < total; ++i) dx[i] += dout[i];
    };
  });
}

}  // namespace

Tensor merge_axes(const Tensor& x, int first, int second) {
  check_axis(x, first, "merge_axes");
  check_axis(x, second, "merge_axes");
  if (second != first + 1)
    throw ContractError("merge_axes: axes " + std::to_string(first) + " and " +
                        std::to_string(second) + " must be adjacent");
  Shape out_shape;
  for (int i = 0; i < x.rank(); ++i) {
    if (i == first)
      out_shape.push_back(x.dim(first) * x.dim(second));
    else if (i != second)
      out_shape.push_back(x.dim(i));
  }
  return reshape_view(x, std::move(out_shape));
}

Tensor split_axes(const Tensor& x, int axis, int first_size, int second_size) {
  check_axis(x, axis, "split_axes");
  if (first_size < 1 || second_size < 1 || x.dim(axis) != first_size * second_size)
    throw DimensionError("split_axes: axis " + std::to_string(axis) + " of size " +
                         std::to_string(x.dim(axis)) + " cannot split into " +
                         std::to_string(first_size) + " x " + std::to_string(second_size));
  Shape out_shape;
  for (int i = 0; i < x.rank(); ++i) {
    if (i == axis) {
      out_shape.push_back(first_size);
      out_shape.push_back(second_size);
    } else {
      out_shape.push_back(x.dim(i));
    }
  }
  return reshape_view(x, std::move(out_shape));
}

Tensor hadamard(const Tensor& x, const Tensor& y) {
  const bool broadcast = (y.rank() == x.rank() - 1) && x.rank() >= 2;
  if (!broadcast) {
    check_same_shape(x, y, "hadamard");
    Tensor out(x.shape());
    const double* xd = x.values().data();
    const double* yd = y.values().data();
    double* od = out.values_mut().data();
    const std::size_t total = x.size();
    for (std::size_t i = 0; i < total; ++i) od[i] = xd[i] * yd[i];
    debug_check_finite(out.values(), "hadamard");

    Tape* tape = common_tape({&x, &y});
    if (!tape) return out;
    const int xn = x.tracked() ? x.node() : -1;
    const int yn = y.tracked() ? y.node() : -1;
    const Tensor xv = x.detached(), yv = y.detached();
    return record_op(tape, out, tracked_parents({&x, &y}), [=](int self) {
      return [=](Tape& t) {
        const double* dout = t.grad_view(self).data();
        const std::size_t tot = xv.size();
        if (xn >= 0) {
          double* dx = t.grad_accum(xn).data();
          const double* yd2 = yv.values().data();
          for (std::size_t i = 0; i < tot; ++i) dx[i] += dout[i] * yd2[i];
        }
        if (yn >= 0) {
          double* dy = t.grad_accum(yn).data();
          const double* xd2 = xv.values().data();
          for (std::size_t i = 0; i < tot; ++i) dy[i] += dout[i] * xd2[i];
        }
      };
    });
  }

  // Broadcast along axis 1 (the person axis): y must equal x with axis 1
  // removed.
  Shape reduced;
  for (int i = 0; i < x.rank(); ++i)
    if (i != 1) reduced.push_back(x.dim(i));
  if (y.shape() != reduced)
    throw DimensionError("hadamard: cannot broadcast " + shape_str(y.shape()) + " against " +
                         shape_str(x.shape()) + " along axis 1");

  const std::size_t A = static_cast<std::size_t>(x.dim(0));
  const std::size_t P = static_cast<std::size_t>(x.dim(1));
  std::size_t B = 1;
  for (int i = 2; i < x.rank(); ++i) B *= static_cast<std::size_t>(x.dim(i));

  Tensor out(x.shape());
  const double* xd = x.values().data();
  const double* yd = y.values().data();
  double* od = out.values_mut().data();
  for (std::size_t a = 0; a < A; ++a) {
    const double* ya = yd + a * B;
    for (std::size_t p = 0; p < P; ++p) {
      const double* xa = xd + (a * P + p) * B;
      double* oa = od + (a * P + p) * B;
      for (std::size_t k = 0; k < B; ++k) oa[k] = xa[k] * ya[k];
    }
  }
  debug_check_finite(out.values(), "hadamard");

  Tape* tape = common_tape({&x, &y});
  if (!tape) return out;
  const int xn = x.tracked() ? x.node() : -1;
  const int yn = y.tracked() ? y.node() : -1;
  const Tensor xv = x.detached(), yv = y.detached();
  return record_op(tape, out, tracked_parents({&x, &y}), [=](int self) {
    return [=](Tape& t) {
      const double* dout = t.grad_view(self).data();
      if (xn >= 0) {
        double* dx = t.grad_accum(xn).data();
        const double* yd2 = yv.values().data();
        for (std::size_t a = 0; a < A; ++a) {
          const double* ya = yd2 + a * B;
          for (std::size_t p = 0; p < P; ++p) {
            const double* da = dout + (a * P + p) * B;
            double* dxa = dx + (a * P + p) * B;
            for (std::size_t k = 0; k < B; ++k) dxa[k] += da[k] * ya[k];
          }
        }
      }
      if (yn >= 0) {
        double* dy = t.grad_accum(yn).data();
        const double* xd2 = xv.values().data();
        for (std::size_t a = 0; a < A; ++a) {
          double* dya = dy + a * B;
          for (std::size_t p = 0; p < P; ++p) {
            const double* da = dout + (a * P + p) * B;
            const double* xa = xd2 + (a * P + p) * B;
            for (std::size_t k = 0; k < B; ++k) dya[k] += da[k] * xa[k];
          }
        }
      }
    };
  });
}

namespace {

template <bool Subtract>
Tensor add_like(const Tensor& x, const Tensor& y, const char* op) {
  check_same_shape(x, y, op);
  Tensor out(x.shape());
  const double* xd = x.values().data();
  const double* yd = y.values().data();
  double* od = out.values_mut().data();
  const std::size_t total = x.size();
  for (std::size_t i = 0; i < total; ++i) od[i] = Subtract ? xd[i] - yd[i] : xd[i] + yd[i];
  debug_check_finite(out.values(), op);

  Tape* tape = common_tape({&x, &y});
  if (!tape) return out;
  const int xn = x.tracked() ? x.node() : -1;
  const int yn = y.tracked() ? y.node() : -1;
  return record_op(tape, out, tracked_parents({&x, &y}), [=](int self) {
    return [=](Tape& t) {
      const double* dout = t.grad_view(self).data();
      if (xn >= 0) {
        double* dx = t.grad_accum(xn).data();
        for (std::size_t i = 0; i < total; ++i) dx[i] += dout[i];
      }
      if (yn >= 0) {
        double* dy = t.grad_accum(yn).data();
        for (std::size_t i = 0; i < total; ++i) dy[i] += Subtract ? -dout[i] : dout[i];
      }
    };
  });
}

}  // namespace

Tensor add(const Tensor& x, const Tensor& y) { return add_like<false>(x, y, "add"); }

Tensor subtract(const Tensor& x, const Tensor& y) { return add_like<true>(x, y, "subtract"); }

Tensor scale(const Tensor& x, double factor) {
  Tensor out(x.shape());
  const double* xd = x.values().data();
  double* od = out.values_mut().data();
  const std::size_t total = x.size();
  for (std::size_t i = 0; i < total; ++i) od[i] = xd[i] * factor;
  debug_check_finite(out.values(), "scale");

  Tape* tape = common_tape({&x});
  if (!tape) return out;
  const int xn = x.node();
  return record_op(tape, out, {xn}, [=](int self) {
    return [=](Tape& t) {
      const double* dout = t.grad_view(self).data();
      double* dx = t.grad_accum(xn).data();
      for (std::size_t i = 0; i < total; ++i) dx[i] += dout[i] * factor;
    };
  });
}

Tensor add_scalar(const Tensor& x, double value) {
  Tensor out(x.shape());
  const double* xd = x.values().data();
  double* od = out.values_mut().data();
  const std::size_t total = x.size();
  for (std::size_t i = 0; i < total; ++i) od[i] = xd[i] + value;
  debug_check_finite(out.values(), "add_scalar");

  Tape* tape = common_tape({&x});
  if (!tape) return out;
  const int xn = x.node();
  return record_op(tape, out, {xn}, [=](int self) {
    return [=](Tape& t) {
      const double* dout = t.grad_view(self).data();
      double* dx = t.grad_accum(xn).data();
      for (std::size_t i = 0; i < total; ++i) dx[i] += dout[i];
    };
  });
}

Tensor repeat_axis(const Tensor& x, int axis, int count) {
  if (axis < 0 || axis > x.rank())
    throw DimensionError("repeat_axis: insert position " + std::to_string(axis) +
                         " out of range for shape " + shape_str(x.shape()));
  if (count < 1) throw ContractError("repeat_axis: count must be >= 1");

  Shape out_shape;
  std::size_t A = 1, B = 1;
  for (int i = 0; i < x.rank(); ++i) {
    if (i == axis) out_shape.push_back(count);
    out_shape.push_back(x.dim(i));
    if (i < axis)
      A *= static_cast<std::size_t>(x.dim(i));
    else
      B *= static_cast<std::size_t>(x.dim(i));
  }
  if (axis == x.rank()) out_shape.push_back(count);

  Tensor out(out_shape);
  const double* xd = x.values().data();
  double* od = out.values_mut().data();
  const std::size_t R = static_cast<std::size_t>(count);
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t r = 0; r < R; ++r)
      std::memcpy(od + (a * R + r) * B, xd + a * B, B * sizeof(double));

  Tape* tape = common_tape({&x});
  if (!tape) return out;
  const int xn = x.node();
  return record_op(tape, out, {xn}, [=](int self) {
    return [=](Tape& t) {
      const double* dout = t.grad_view(self).data();
      double* dx = t.grad_accum(xn).data();
      for (std::size_t a = 0; a < A; ++a)
        for (std::size_t r = 0; r < R; ++r) {
          const double* da = dout + (a * R + r) * B;
          double* dxa = dx + a * B;
          for (std::size_t k = 0; k < B; ++k) dxa[k] += da[k];
        }
    };
  });
}

Tensor sum_all(const Tensor& x) {
  const double* xd = x.values().data();
  const std::size_t total = x.size();
  double s = 0.0;
  for (std::size_t i = 0; i < total; ++i) s += xd[i];
  Tensor out = Tensor::scalar(s);
  debug_check_finite(out.values(), "sum_all");

  Tape* tape = common_tape({&x});
  if (!tape) return out;
  const int xn = x.node();
  return record_op(tape, out, {xn}, [=](int self) {
    return [=](Tape& t) {
      const double g = t.grad_view(self)[0];
      double* dx = t.grad_accum(xn).data();
      for (std::size_t i = 0; i < total; ++i) dx[i] += g;
    };
  });
}

Tensor diff_along_axis(const Tensor& x, int axis) {
  check_axis(x, axis, "diff_along_axis");
  if (x.dim(axis) < 2)
    throw ContractError("diff_along_axis: axis " + std::to_string(axis) +
                        " must have size >= 2, got " + std::to_string(x.dim(axis)));
  const AxisView v = axis_view(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[static_cast<std::size_t>(axis)] -= 1;
  Tensor out(out_shape);

  const double* xd = x.values().data();
  double* od = out.values_mut().data();
  const std::size_t N = v.n, I = v.inner;
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t i = 0; i + 1 < N; ++i) {
      const double* a = xd + (o * N + i) * I;
      const double* b = xd + (o * N + i + 1) * I;
      double* oi = od + (o * (N - 1) + i) * I;
      for (std::size_t k = 0; k < I; ++k) oi[k] = b[k] - a[k];
    }
  debug_check_finite(out.values(), "diff_along_axis");

  Tape* tape = common_tape({&x});
  if (!tape) return out;
  const int xn = x.node();
  return record_op(tape, out, {xn}, [=](int self) {
    return [=](Tape& t) {
      const double* dout = t.grad_view(self).data();
      double* dx = t.grad_accum(xn).data();
      for (std::size_t o = 0; o < v.outer; ++o)
        for (std::size_t i = 0; i + 1 < v.n; ++i) {
          const double* dj = dout + (o * (v.n - 1) + i) * v.inner;
          double* da = dx + (o * v.n + i) * v.inner;
          double* db = dx + (o * v.n + i + 1) * v.inner;
          for (std::size_t k = 0; k < v.inner; ++k) {
            da[k] -= dj[k];
            db[k] += dj[k];
          }
        }
    };
  });
}

double finite_diff_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                         const std::vector<Tensor>& params, double step) {
  if (step <= 0.0) throw ContractError("finite_diff_check: step must be positive");
  if (params.empty()) throw ContractError("finite_diff_check: no parameters given");

  Tape tape;
  std::vector<Tensor> watched;
  watched.reserve(params.size());
  for (const Tensor& p : params) watched.push_back(tape.watch(p));
  Tensor loss = f(watched);
  if (loss.size() != 1)
    throw ContractError("finite_diff_check: f must return a scalar, got " +
                        shape_str(loss.shape()));
  if (!std::isfinite(loss.item()))
    throw NumericError("finite_diff_check: f produced a non-finite value");
  tape.backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const Tensor& w : watched) analytic.push_back(tape.grad_copy(w));

  // Probe with untracked copies sharing the parameter buffers.
  std::vector<Tensor> probe;
  probe.reserve(params.size());
  for (const Tensor& p : params) probe.push_back(p.detached());

  // Central differences cannot resolve gradients below the roundoff of f
  // divided by the step; treat disagreements under that scale as noise.
  const double noise = 1e3 * std::numeric_limits<double>::epsilon() *
                       (1.0 + std::abs(loss.item())) / step;

  double worst = 0.0;
  for (std::size_t pi = 0; pi < probe.size(); ++pi) {
    auto buf = probe[pi].values_mut();
    for (std::size_t e = 0; e < buf.size(); ++e) {
      const double orig = buf[e];
      buf[e] = orig + step;
      const double fp = f(probe).item();
      buf[e] = orig - step;
      const double fm = f(probe).item();
      buf[e] = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw NumericError("finite_diff_check: f produced a non-finite value during probing");
      const double central = (fp - fm) / (2.0 * step);
      const double a = analytic[pi][e];
      const double rel = std::abs(a - central) / (std::abs(a) + std::abs(central) + noise);
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace empmp
