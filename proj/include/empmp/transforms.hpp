#pragma once

#include <vector>

#include "empmp/motion.hpp"
#include "empmp/tensor.hpp"

namespace empmp {

// Orthonormal DCT-II basis for a fixed frame count T:
//   matrix[k][t] = sqrt(2/T) * cos(pi * (2t + 1) * k / (2T)),  row 0 scaled
// to 1/sqrt(T). Rows are the basis vectors; the inverse transform is the
// transpose. Forward and inverse transforms of different lengths use
// separately constructed bases.
class DctBasis {
 public:
  explicit DctBasis(int frames);
  int frames() const { return frames_; }
  const Tensor& matrix() const { return matrix_; }     // (T, T), rows = basis
  const Tensor& transposed() const { return transposed_; }

 private:
  int frames_;
  Tensor matrix_;
  Tensor transposed_;
};

// Applies the basis along `axis` (default: last). Gradients flow through x.
Tensor dct_forward(const Tensor& x, const DctBasis& basis, int axis = -1);
Tensor dct_inverse(const Tensor& x, const DctBasis& basis, int axis = -1);

MotionSequence dct_forward(const MotionSequence& x, const DctBasis& basis);
MotionSequence dct_inverse(const MotionSequence& x, const DctBasis& basis);

// Canonical person ordering: persons are sorted by descending sum of
// first-frame hip distances to all other persons, stable on ties.
struct PersonPermutation {
  std::vector<int> order;    // order[slot] = original person index
  std::vector<double> keys;  // sort keys in slot order (non-increasing)
};

struct SortedMotion {
  MotionSequence motion;
  PersonPermutation permutation;
};

std::vector<double> pips_keys(const MotionSequence& x, int hip_index);
SortedMotion pips_sort(const MotionSequence& x, int hip_index);

// Undo pips_sort: slot s of y returns to original person order[s].
MotionSequence ipips_restore(const MotionSequence& y, const PersonPermutation& perm);

}  // namespace empmp
