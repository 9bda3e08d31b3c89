#include "empmp/loss.hpp"

namespace empmp {

namespace {

void check_pair(const Tensor& pred, const Tensor& gt, int joints, const char* op) {
  if (pred.shape() != gt.shape())
    throw DimensionError(std::string(op) + ": prediction " + shape_str(pred.shape()) +
                         " and target " + shape_str(gt.shape()) + " differ");
  if (pred.rank() != 3 || pred.dim(0) != 3 * joints)
    throw DimensionError(std::string(op) + ": expected (3J, P, T) with J=" +
                         std::to_string(joints) + ", got " + shape_str(pred.shape()));
}

Tensor mean_squared(const Tensor& diff, double denom) {
  return scale(sum_all(hadamard(diff, diff)), 1.0 / denom);
}

}  // namespace

Tensor joint_loss_op(const Tensor& pred, const Tensor& gt, int joints) {
  check_pair(pred, gt, joints, "joint_loss");
  const double denom = static_cast<double>(pred.dim(1)) * static_cast<double>(pred.dim(2)) *
                       static_cast<double>(joints);
  return mean_squared(subtract(pred, gt), denom);
}

Tensor velocity_loss_op(const Tensor& pred, const Tensor& gt, int joints) {
  check_pair(pred, gt, joints, "velocity_loss");
  if (pred.dim(2) < 2)
    throw ContractError("velocity_loss: needs at least 2 frames, got " +
                        std::to_string(pred.dim(2)));
  Tensor dv = subtract(diff_along_axis(pred, 2), diff_along_axis(gt, 2));
  const double denom = static_cast<double>(pred.dim(1)) *
                       static_cast<double>(pred.dim(2) - 1) * static_cast<double>(joints);
  return mean_squared(dv, denom);
}

double joint_loss(const MotionSequence& pred, const MotionSequence& gt) {
  return joint_loss_op(pred.data, gt.data, pred.joints).item();
}

double velocity_loss(const MotionSequence& pred, const MotionSequence& gt) {
  return velocity_loss_op(pred.data, gt.data, pred.joints).item();
}

LossBreakdown total_loss(const MotionSequence& pred, const MotionSequence& gt) {
  LossBreakdown b;
  b.joint = joint_loss(pred, gt);
  b.velocity = velocity_loss(pred, gt);
  b.total = b.joint + b.velocity;
  return b;
}

}  // namespace empmp
