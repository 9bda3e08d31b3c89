#pragma once

#include "empmp/motion.hpp"
#include "empmp/tensor.hpp"

namespace empmp {

struct LossBreakdown {
  double joint = 0.0;
  double velocity = 0.0;
  double total = 0.0;
};

// Mean over persons, frames and joints of the squared L2 distance between
// predicted and true 3D joint positions. Differentiable form on (3J, P, T)
// tensors; `joints` names J so the denominator is P * T * J.
Tensor joint_loss_op(const Tensor& pred, const Tensor& gt, int joints);

// Same form applied to consecutive-frame velocities; frames axis must have
// size >= 2 and the denominator uses T - 1.
Tensor velocity_loss_op(const Tensor& pred, const Tensor& gt, int joints);

double joint_loss(const MotionSequence& pred, const MotionSequence& gt);
double velocity_loss(const MotionSequence& pred, const MotionSequence& gt);

// total = joint + velocity.
LossBreakdown total_loss(const MotionSequence& pred, const MotionSequence& gt);

}  // namespace empmp
