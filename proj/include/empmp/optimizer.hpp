#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "empmp/model.hpp"

namespace empmp {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moments aligned with the model's parameter enumeration order.
struct AdamState {
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m, v;

  AdamState() = default;
  explicit AdamState(const EmpmpModel& model);
  bool matches(const EmpmpModel& model) const;
};

// One bias-corrected Adam update on a raw parameter buffer; t is the 1-based
// step count including this update.
void adam_apply(std::span<double> param, std::span<const double> grad,
                std::span<double> m, std::span<double> v, std::uint64_t t,
                const AdamConfig& cfg, double lr);

// Updates every model parameter in place. grads must align with the
// enumeration order; non-finite gradients abort with the parameter's name.
void adam_step(EmpmpModel& model, const std::vector<std::vector<double>>& grads,
               AdamState& state, const AdamConfig& cfg, double lr);

}  // namespace empmp
