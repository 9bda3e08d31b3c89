#include "empmp/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace empmp {

DctBasis::DctBasis(int frames) : frames_(frames) {
  if (frames < 1) throw ConfigError("DCT basis needs at least one frame");
  const std::size_t T = static_cast<std::size_t>(frames);
  std::vector<double> m(T * T), mt(T * T);
  const double norm0 = 1.0 / std::sqrt(static_cast<double>(frames));
  const double norm = std::sqrt(2.0 / static_cast<double>(frames));
  for (std::size_t k = 0; k < T; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      const double angle = std::numbers::pi * (2.0 * static_cast<double>(t) + 1.0) *
                           static_cast<double>(k) / (2.0 * static_cast<double>(frames));
      const double v = (k == 0 ? norm0 : norm) * std::cos(angle);
      m[k * T + t] = v;
      mt[t * T + k] = v;
    }
  matrix_ = Tensor(Shape{frames, frames}, std::move(m));
  transposed_ = Tensor(Shape{frames, frames}, std::move(mt));
}

namespace {

int resolve_axis(const Tensor& x, int axis) {
  if (axis == -1) return x.rank() - 1;
  return axis;
}

}  // namespace

Tensor dct_forward(const Tensor& x, const DctBasis& basis, int axis) {
  const int ax = resolve_axis(x, axis);
  if (ax < 0 || ax >= x.rank() || x.dim(ax) != basis.frames())
    throw DimensionError("dct_forward: axis " + std::to_string(ax) + " of " +
                         shape_str(x.shape()) + " does not match basis length " +
                         std::to_string(basis.frames()));
  // (D x)_k = sum_t D[k][t] x_t, realized as x contracted with D^T.
  return linear_along_axis(x, ax, basis.transposed(), Tensor(Shape{basis.frames()}));
}

Tensor dct_inverse(const Tensor& x, const DctBasis& basis, int axis) {
  const int ax = resolve_axis(x, axis);
  if (ax < 0 || ax >= x.rank() || x.dim(ax) != basis.frames())
    throw DimensionError("dct_inverse: axis " + std::to_string(ax) + " of " +
                         shape_str(x.shape()) + " does not match basis length " +
                         std::to_string(basis.frames()));
  return linear_along_axis(x, ax, basis.matrix(), Tensor(Shape{basis.frames()}));
}

MotionSequence dct_forward(const MotionSequence& x, const DctBasis& basis) {
  return MotionSequence::from_tensor(x.joints, dct_forward(x.data, basis, 2));
}

MotionSequence dct_inverse(const MotionSequence& x, const DctBasis& basis) {
  return MotionSequence::from_tensor(x.joints, dct_inverse(x.data, basis, 2));
}

std::vector<double> pips_keys(const MotionSequence& x, int hip_index) {
  if (hip_index < 0 || hip_index >= x.joints)
    throw ContractError("hip index " + std::to_string(hip_index) + " out of range for " +
                        std::to_string(x.joints) + " joints");
  std::vector<std::array<double, 3>> hips(static_cast<std::size_t>(x.persons));
  for (int p = 0; p < x.persons; ++p) hips[static_cast<std::size_t>(p)] = x.hip(p, 0, hip_index);
  std::vector<double> keys(static_cast<std::size_t>(x.persons), 0.0);
  for (int p = 0; p < x.persons; ++p) {
    double s = 0.0;
    for (int q = 0; q < x.persons; ++q) {
      if (q == p) continue;
      const auto& a = hips[static_cast<std::size_t>(p)];
      const auto& b = hips[static_cast<std::size_t>(q)];
      const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
      s += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    keys[static_cast<std::size_t>(p)] = s;
  }
  return keys;
}

SortedMotion pips_sort(const MotionSequence& x, int hip_index) {
  const std::vector<double> keys = pips_keys(x, hip_index);
  std::vector<int> order(static_cast<std::size_t>(x.persons));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return keys[static_cast<std::size_t>(a)] > keys[static_cast<std::size_t>(b)];
  });
  SortedMotion result;
  result.motion = permute_persons(x, order);
  result.permutation.order = std::move(order);
  result.permutation.keys.reserve(keys.size());
  for (int p : result.permutation.order)
    result.permutation.keys.push_back(keys[static_cast<std::size_t>(p)]);
  return result;
}

MotionSequence ipips_restore(const MotionSequence& y, const PersonPermutation& perm) {
  if (static_cast<int>(perm.order.size()) != y.persons)
    throw ContractError("permutation covers " + std::to_string(perm.order.size()) +
                        " persons, sequence has " + std::to_string(y.persons));
  // Invert: slot s holds original person order[s].
  std::vector<int> inverse(perm.order.size());
  for (std::size_t s = 0; s < perm.order.size(); ++s)
    inverse[static_cast<std::size_t>(perm.order[s])] = static_cast<int>(s);
  return permute_persons(y, inverse);
}

}  // namespace empmp
