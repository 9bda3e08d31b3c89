#include "empmp/motion.hpp"

#include <cmath>

namespace empmp {

namespace {

std::size_t flat_index(const MotionSequence& m, int coord_axis, int joint, int person,
                       int frame) {
  if (coord_axis < 0 || coord_axis >= 3) throw DimensionError("coordinate axis out of range");
  if (joint < 0 || joint >= m.joints)
    throw DimensionError("joint " + std::to_string(joint) + " out of range");
  if (person < 0 || person >= m.persons)
    throw DimensionError("person " + std::to_string(person) + " out of range");
  if (frame < 0 || frame >= m.frames)
    throw DimensionError("frame " + std::to_string(frame) + " out of range");
  const std::size_t row = static_cast<std::size_t>(3 * joint + coord_axis);
  return (row * static_cast<std::size_t>(m.persons) + static_cast<std::size_t>(person)) *
             static_cast<std::size_t>(m.frames) +
         static_cast<std::size_t>(frame);
}

}  // namespace

MotionSequence MotionSequence::zeros(int joints, int persons, int frames) {
  if (joints < 1 || persons < 1 || frames < 1)
    throw DimensionError("motion sequence dimensions must be >= 1");
  MotionSequence m;
  m.joints = joints;
  m.persons = persons;
  m.frames = frames;
  m.data = Tensor(Shape{3 * joints, persons, frames});
  return m;
}

MotionSequence MotionSequence::from_tensor(int joints, const Tensor& data) {
  if (data.rank() != 3)
    throw DimensionError("motion tensor must be rank 3, got " + shape_str(data.shape()));
  if (data.dim(0) != 3 * joints)
    throw DimensionError("motion tensor first axis " + std::to_string(data.dim(0)) +
                         " does not equal 3 * " + std::to_string(joints));
  MotionSequence m;
  m.joints = joints;
  m.persons = data.dim(1);
  m.frames = data.dim(2);
  m.data = data.detached();
  return m;
}

double MotionSequence::coord(int coord_axis, int joint, int person, int frame) const {
  return data.values()[flat_index(*this, coord_axis, joint, person, frame)];
}

void MotionSequence::set_coord(int coord_axis, int joint, int person, int frame,
                               double value) {
  data.values_mut()[flat_index(*this, coord_axis, joint, person, frame)] = value;
}

std::array<double, 3> MotionSequence::joint_position(int joint, int person, int frame) const {
  return {coord(0, joint, person, frame), coord(1, joint, person, frame),
          coord(2, joint, person, frame)};
}

MotionSequence permute_persons(const MotionSequence& x, const std::vector<int>& order) {
  if (static_cast<int>(order.size()) != x.persons)
    throw ContractError("person permutation length " + std::to_string(order.size()) +
                        " does not match " + std::to_string(x.persons) + " persons");
  std::vector<bool> seen(order.size(), false);
  for (int p : order) {
    if (p < 0 || p >= x.persons || seen[static_cast<std::size_t>(p)])
      throw ContractError("person permutation is not a bijection");
    seen[static_cast<std::size_t>(p)] = true;
  }
  MotionSequence out = MotionSequence::zeros(x.joints, x.persons, x.frames);
  const double* src = x.data.values().data();
  double* dst = out.data.values_mut().data();
  const std::size_t rows = static_cast<std::size_t>(3 * x.joints);
  const std::size_t P = static_cast<std::size_t>(x.persons);
  const std::size_t T = static_cast<std::size_t>(x.frames);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t slot = 0; slot < P; ++slot) {
      const std::size_t from = static_cast<std::size_t>(order[slot]);
      for (std::size_t t = 0; t < T; ++t)
        dst[(r * P + slot) * T + t] = src[(r * P + from) * T + t];
    }
  return out;
}

MotionSequence rotate_about_axis(const MotionSequence& x, int vertical_axis, double angle) {
  if (vertical_axis < 0 || vertical_axis >= 3)
    throw ContractError("vertical axis must be 0, 1 or 2");
  const int a = (vertical_axis + 1) % 3;
  const int b = (vertical_axis + 2) % 3;
  const double c = std::cos(angle), s = std::sin(angle);
  MotionSequence out = MotionSequence::zeros(x.joints, x.persons, x.frames);
  for (int j = 0; j < x.joints; ++j)
    for (int p = 0; p < x.persons; ++p)
      for (int t = 0; t < x.frames; ++t) {
        const double va = x.coord(a, j, p, t);
        const double vb = x.coord(b, j, p, t);
        out.set_coord(a, j, p, t, c * va - s * vb);
        out.set_coord(b, j, p, t, s * va + c * vb);
        out.set_coord(vertical_axis, j, p, t, x.coord(vertical_axis, j, p, t));
      }
  return out;
}

MotionSequence translate(const MotionSequence& x, const std::array<double, 3>& offset) {
  MotionSequence out = MotionSequence::zeros(x.joints, x.persons, x.frames);
  for (int j = 0; j < x.joints; ++j)
    for (int c = 0; c < 3; ++c)
      for (int p = 0; p < x.persons; ++p)
        for (int t = 0; t < x.frames; ++t)
          out.set_coord(c, j, p, t, x.coord(c, j, p, t) + offset[static_cast<std::size_t>(c)]);
  return out;
}

}  // namespace empmp
