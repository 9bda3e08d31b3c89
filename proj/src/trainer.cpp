#include "empmp/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "empmp/checkpoint.hpp"
#include "empmp/loss.hpp"
#include "empmp/transforms.hpp"

namespace empmp {

double lr_at(const LrSchedule& schedule, double base_lr, int epoch) {
  if (epoch < 0) throw ContractError("lr_at: epoch must be >= 0");
  switch (schedule.kind) {
    case ScheduleKind::kConstant:
      return base_lr;
    case ScheduleKind::kStepDecay: {
      if (schedule.every < 1) throw ConfigError("lr schedule: every must be >= 1");
      const int drops = epoch / schedule.every;
      return base_lr * std::pow(schedule.factor, static_cast<double>(drops));
    }
  }
  throw ContractError("lr_at: unknown schedule kind");
}

namespace {

// Distinct stream tags for the per-epoch shuffle and per-sample augmentation
// so the two never reuse draws.
constexpr std::uint64_t kShuffleStream = 0x73687566ull;
constexpr std::uint64_t kAugmentStream = 0x6175676dull;

void check_windows(const TrainPlan& plan, const EmpmpModel& model,
                   const std::vector<TrainWindow>& windows) {
  if (windows.empty()) throw ContractError("train: no windows given");
  if (plan.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (plan.epochs < 0) throw ConfigError("train: epochs must be >= 0");
  const ModelConfig& cfg = model.config();
  for (const TrainWindow& w : windows) {
    if (w.input.joints != cfg.joints || w.input.persons != cfg.persons ||
        w.input.frames != cfg.frames_in)
      throw DimensionError("train: window input (J=" + std::to_string(w.input.joints) +
                           ", P=" + std::to_string(w.input.persons) + ", T=" +
                           std::to_string(w.input.frames) + ") does not match the model");
    if (w.target.joints != cfg.joints || w.target.persons != cfg.persons ||
        w.target.frames != cfg.frames_out)
      throw DimensionError("train: window target does not match the model");
  }
}

std::string checkpoint_file(const std::string& dir) {
  return (std::filesystem::path(dir) / "checkpoint.empm").string();
}

}  // namespace

TrainResult train(const TrainPlan& plan, EmpmpModel& model,
                  const std::vector<TrainWindow>& windows, AdamState* state,
                  int start_epoch) {
  check_windows(plan, model, windows);
  if (start_epoch < 0) throw ContractError("train: start_epoch must be >= 0");

  AdamState local_state;
  if (!state) {
    local_state = AdamState(model);
    state = &local_state;
  } else if (state->m.empty()) {
    *state = AdamState(model);
  }
  if (!state->matches(model))
    throw ContractError("train: optimizer state does not match the model");

  TrainResult result;
  const std::size_t window_count = windows.size();
  const int hip = model.config().hip_index;

  if (!plan.checkpoint_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(plan.checkpoint_dir, ec);
    if (ec)
      throw IoError("cannot create checkpoint directory " + plan.checkpoint_dir + ": " +
                    ec.message());
  }

  for (int e = start_epoch; e < start_epoch + plan.epochs; ++e) {
    const double lr = lr_at(plan.schedule, plan.lr, e);
    std::vector<std::size_t> order(window_count);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(Rng::mix(Rng::mix(plan.seed, kShuffleStream),
                             static_cast<std::uint64_t>(e)));
    shuffle_rng.shuffle(order);

    double epoch_joint = 0.0, epoch_vel = 0.0;
    for (std::size_t begin = 0; begin < window_count; begin += static_cast<std::size_t>(plan.batch_size)) {
      const std::size_t end =
          std::min(window_count, begin + static_cast<std::size_t>(plan.batch_size));
      const std::size_t batch_n = end - begin;

      Tape tape;
      EmpmpModel watched = model.watched(tape);
      Tensor joint_sum = Tensor::scalar(0.0);
      Tensor vel_sum = Tensor::scalar(0.0);
      for (std::size_t i = begin; i < end; ++i) {
        const TrainWindow* w = &windows[order[i]];
        TrainWindow augmented;
        if (plan.augment) {
          Rng aug_rng(Rng::mix(Rng::mix(plan.seed, kAugmentStream),
                               static_cast<std::uint64_t>(e) * window_count + i));
          augmented = augment(*w, aug_rng, plan.vertical_axis);
          w = &augmented;
        }
        SortedMotion sorted = pips_sort(w->input, hip);
        MotionSequence target = permute_persons(w->target, sorted.permutation.order);
        DistanceMatrix dist = distance_matrix(sorted.motion, hip);
        Tensor pred = predict_sorted(watched, sorted.motion.data, dist);
        joint_sum = add(joint_sum, joint_loss_op(pred, target.data, target.joints));
        vel_sum = add(vel_sum, velocity_loss_op(pred, target.data, target.joints));
      }
      const double inv_n = 1.0 / static_cast<double>(batch_n);
      Tensor batch_loss = scale(add(joint_sum, vel_sum), inv_n);

      StepLoss step;
      step.joint = joint_sum.item() * inv_n;
      step.velocity = vel_sum.item() * inv_n;
      step.total = batch_loss.item();
      if (!std::isfinite(step.total)) {
        result.nan_abort = true;
        return result;
      }
      result.steps.push_back(step);
      epoch_joint += joint_sum.item();
      epoch_vel += vel_sum.item();

      tape.backward(batch_loss);
      std::vector<std::vector<double>> grads;
      watched.for_each_parameter([&](const std::string&, const Tensor& t) {
        grads.push_back(tape.grad_copy(t));
      });
      adam_step(model, grads, *state, plan.adam, lr);
    }

    StepLoss mean;
    mean.joint = epoch_joint / static_cast<double>(window_count);
    mean.velocity = epoch_vel / static_cast<double>(window_count);
    mean.total = mean.joint + mean.velocity;
    result.epoch_means.push_back(mean);
    result.epochs_completed = e - start_epoch + 1;

    if (!plan.checkpoint_dir.empty()) {
      const bool last = e + 1 == start_epoch + plan.epochs;
      const bool due = plan.checkpoint_every > 0 &&
                       (e - start_epoch + 1) % plan.checkpoint_every == 0;
      if (last || due) {
        CheckpointMeta meta;
        meta.completed_epochs = static_cast<std::uint32_t>(e + 1);
        result.checkpoint_path = checkpoint_file(plan.checkpoint_dir);
        save_checkpoint(result.checkpoint_path, model, state, meta);
      }
    }
  }
  return result;
}

TwoPhaseResult pretrain_finetune(const TrainPlan& pretrain_plan,
                                 const std::vector<TrainWindow>& pretrain_windows,
                                 const TrainPlan& finetune_plan,
                                 const std::vector<TrainWindow>& finetune_windows,
                                 EmpmpModel& model) {
  TwoPhaseResult out;
  out.pretrain = train(pretrain_plan, model, pretrain_windows);
  if (out.pretrain.nan_abort) return out;
  out.finetune = train(finetune_plan, model, finetune_windows);
  return out;
}

void write_loss_csv(const TrainResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write loss curve to " + path);
  out << std::setprecision(17);
  out << "epoch,joint,velocity,total\n";
  for (std::size_t e = 0; e < result.epoch_means.size(); ++e) {
    const StepLoss& s = result.epoch_means[e];
    out << (e + 1) << ',' << s.joint << ',' << s.velocity << ',' << s.total << '\n';
  }
  if (!out) throw IoError("failed writing loss curve to " + path);
}

}  // namespace empmp
