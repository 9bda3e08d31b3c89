#include "empmp/optimizer.hpp"

#include <cmath>

namespace empmp {

AdamState::AdamState(const EmpmpModel& model) {
  model.for_each_parameter([&](const std::string&, const Tensor& t) {
    m.emplace_back(t.size(), 0.0);
    v.emplace_back(t.size(), 0.0);
  });
}

bool AdamState::matches(const EmpmpModel& model) const {
  std::size_t i = 0;
  bool ok = m.size() == v.size();
  model.for_each_parameter([&](const std::string&, const Tensor& t) {
    if (i >= m.size() || m[i].size() != t.size() || v[i].size() != t.size()) ok = false;
    ++i;
  });
  return ok && i == m.size();
}

void adam_apply(std::span<double> param, std::span<const double> grad,
                std::span<double> m, std::span<double> v, std::uint64_t t,
                const AdamConfig& cfg, double lr) {
  if (param.size() != grad.size() || param.size() != m.size() || param.size() != v.size())
    throw ContractError("adam_apply: buffer sizes disagree");
  if (t < 1) throw ContractError("adam_apply: step count must be >= 1");
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

void adam_step(EmpmpModel& model, const std::vector<std::vector<double>>& grads,
               AdamState& state, const AdamConfig& cfg, double lr) {
  if (!state.matches(model))
    throw ContractError("adam_step: optimizer state does not match the model");
  if (grads.size() != state.m.size())
    throw ContractError("adam_step: expected " + std::to_string(state.m.size()) +
                        " gradient buffers, got " + std::to_string(grads.size()));
  // Validate everything before mutating anything, so a bad batch cannot leave
  // a half-updated model behind.
  std::size_t i = 0;
  model.for_each_parameter([&](const std::string& name, Tensor& t) {
    if (grads[i].size() != t.size())
      throw ContractError("adam_step: gradient size mismatch for " + name);
    for (double g : grads[i])
      if (!std::isfinite(g)) throw NumericError("non-finite gradient for parameter " + name);
    ++i;
  });

  ++state.step;
  i = 0;
  model.for_each_parameter([&](const std::string&, Tensor& t) {
    adam_apply(t.values_mut(), grads[i], {state.m[i].data(), state.m[i].size()},
               {state.v[i].data(), state.v[i].size()}, state.step, cfg, lr);
    ++i;
  });
}

}  // namespace empmp
