#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "empmp/model.hpp"
#include "empmp/optimizer.hpp"
#include "empmp/scene.hpp"

namespace empmp {

enum class ScheduleKind { kConstant, kStepDecay };

struct LrSchedule {
  ScheduleKind kind = ScheduleKind::kConstant;
  double factor = 1.0;  // multiplier applied every `every` epochs
  int every = 10;
};

// Learning rate for a 0-based epoch index.
double lr_at(const LrSchedule& schedule, double base_lr, int epoch);

struct TrainPlan {
  int epochs = 0;
  int batch_size = 128;
  double lr = 3e-4;
  LrSchedule schedule;
  AdamConfig adam;
  std::uint64_t seed = 0;
  bool augment = true;
  int vertical_axis = 2;
  int checkpoint_every = 0;     // epochs between checkpoint writes; 0 = end only
  std::string checkpoint_dir;   // empty = keep everything in memory
};

struct StepLoss {
  double joint = 0.0;
  double velocity = 0.0;
  double total = 0.0;
};

struct TrainResult {
  std::vector<StepLoss> epoch_means;  // one entry per completed epoch
  std::vector<StepLoss> steps;        // one entry per optimizer step
  int epochs_completed = 0;
  bool nan_abort = false;
  std::string checkpoint_path;  // last file written, empty if none
};

// Runs plan.epochs epochs of shuffled mini-batch Adam over the windows,
// sorting each sample into canonical person order (the same permutation is
// applied to the target) and training on the sorted pair. Shuffling and
// augmentation derive from (plan.seed, epoch index, sample position), so a
// run resumed from a checkpoint at epoch boundary `start_epoch` replays the
// exact steps of an uninterrupted run. On a non-finite batch loss the run
// aborts without updating parameters further.
TrainResult train(const TrainPlan& plan, EmpmpModel& model,
                  const std::vector<TrainWindow>& windows, AdamState* state = nullptr,
                  int start_epoch = 0);

struct TwoPhaseResult {
  TrainResult pretrain;
  TrainResult finetune;
};

// Pre-train on one window set, then fine-tune on another. Parameters carry
// over exactly between the phases; the fine-tune phase starts a fresh
// optimizer state.
TwoPhaseResult pretrain_finetune(const TrainPlan& pretrain_plan,
                                 const std::vector<TrainWindow>& pretrain_windows,
                                 const TrainPlan& finetune_plan,
                                 const std::vector<TrainWindow>& finetune_windows,
                                 EmpmpModel& model);

// Per-epoch loss curve: "epoch,joint,velocity,total".
void write_loss_csv(const TrainResult& result, const std::string& path);

}  // namespace empmp
