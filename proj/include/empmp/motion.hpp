#pragma once

#include <array>
#include <vector>

#include "empmp/tensor.hpp"

namespace empmp {

// One multi-person motion clip in meters, stored as a (3J, P, T) tensor in
// row-major order: row 3*j + c holds coordinate c (0 = x, 1 = y, 2 = z) of
// joint j across persons and frames.
struct MotionSequence {
  int joints = 0;   // J
  int persons = 0;  // P
  int frames = 0;   // T
  Tensor data;      // (3J, P, T)

  static MotionSequence zeros(int joints, int persons, int frames);
  // Wraps an existing (3J, P, T) tensor; validates the first axis.
  static MotionSequence from_tensor(int joints, const Tensor& data);

  double coord(int coord_axis, int joint, int person, int frame) const;
  void set_coord(int coord_axis, int joint, int person, int frame, double value);
  std::array<double, 3> joint_position(int joint, int person, int frame) const;
  std::array<double, 3> hip(int person, int frame, int hip_index) const {
    return joint_position(hip_index, person, frame);
  }
};

// order[slot] = original person index feeding that slot.
MotionSequence permute_persons(const MotionSequence& x, const std::vector<int>& order);

// Rigid rotation of every position about the given world axis through the
// origin (0 = x, 1 = y, 2 = z).
MotionSequence rotate_about_axis(const MotionSequence& x, int vertical_axis, double angle);

MotionSequence translate(const MotionSequence& x, const std::array<double, 3>& offset);

}  // namespace empmp
