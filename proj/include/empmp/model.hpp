#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "empmp/motion.hpp"
#include "empmp/tensor.hpp"
#include "empmp/transforms.hpp"

namespace empmp {

// Axis over which the layer norms of the per-person (local) stream normalize.
enum class LocalNormAxis { kChannel, kTemporal };
// Axis for the norms living on merged (C, P*T) tensors in the global stream.
enum class GlobalNormAxis { kMerged, kChannel };

struct ModelConfig {
  int joints = 15;      // J
  int persons = 3;      // P
  int frames_in = 30;   // T
  int frames_out = 30;  // T'
  int channels = 45;    // C
  int stages = 4;       // K
  int local_iters = 16; // N
  int global_iters = 1; // M
  double alpha = 0.2;   // fusion weight for the refined global stream
  int hip_index = 0;
  double norm_eps = 1e-5;
  bool spatial_update = false;
  LocalNormAxis local_norm_axis = LocalNormAxis::kChannel;
  GlobalNormAxis global_norm_axis = GlobalNormAxis::kMerged;
  std::uint64_t seed = 0;

  int coord_rows() const { return 3 * joints; }
  int merged() const { return persons * frames_in; }
  void validate() const;

  // Named presets: "3dpw" (J=13, P=2, T=16, T'=14, C=39),
  // "cmu-2s" (J=15, P=3, T=T'=30, C=45), "cmu-1s" (same with T=T'=15).
  static ModelConfig preset(const std::string& name);
};

struct LayerNormParams {
  Tensor gain;  // ones at init
  Tensor bias;  // zeros at init
  int axis = 0;
  double eps = 1e-5;
};

Tensor layer_norm(const Tensor& x, const LayerNormParams& p);

// Parameters of one stage: the dual-stream estimation block plus the
// cross-level interaction block.
struct StageParams {
  // Local stream: N residual temporal maps (T x T) with norms.
  std::vector<Tensor> local_weights, local_biases;
  std::vector<LayerNormParams> local_norms;
  // Global stream: M residual maps (PT x PT) on the merged view, with norms.
  std::vector<Tensor> global_weights, global_biases;
  std::vector<LayerNormParams> global_norms;
  // Optional spatial variant: residual channel maps (C x C) after each
  // temporal group.
  std::vector<Tensor> local_spatial_weights, local_spatial_biases;
  std::vector<LayerNormParams> local_spatial_norms;
  std::vector<Tensor> global_spatial_weights, global_spatial_biases;
  std::vector<LayerNormParams> global_spatial_norms;
  // Cross-level interaction.
  Tensor scale_weight, scale_bias;          // (PT x T), (T)
  Tensor shift_weight, shift_bias;          // (PT x T), (T)
  LayerNormParams refine_norm;              // applied to the modulated local map
  Tensor dist_weight, dist_bias;            // (P x C), (C): distance embedding
  LayerNormParams fuse_norm;                // applied before the local residual
  Tensor translate_weight, translate_bias;  // (PT x PT), (PT)
  LayerNormParams global_refine_norm;       // applied before the global residual
};

// The full network. Copies are shallow (parameters shared); use clone() for
// an independent set of weights.
class EmpmpModel {
 public:
  explicit EmpmpModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  Tensor embed_weight, embed_bias;  // (3J x C), (C)
  std::vector<StageParams> stages;
  Tensor head_time_weight, head_time_bias;        // (T x T'), (T')
  Tensor head_channel_weight, head_channel_bias;  // (C x 3J), (3J)

  // Visits every parameter in the fixed serialization order: embedding,
  // stages (local temporal, local spatial, global temporal, global spatial,
  // interaction), head. Norm gains/biases follow their layer's weight/bias.
  void for_each_parameter(
      const std::function<void(const std::string&, Tensor&)>& fn);
  void for_each_parameter(
      const std::function<void(const std::string&, const Tensor&)>& fn) const;

  std::size_t parameter_count() const;
  EmpmpModel clone() const;
  // Shallow copy whose parameters are tape-watched views; gradients of a
  // backward pass land on the tape keyed by these views.
  EmpmpModel watched(Tape& tape) const;

 private:
  ModelConfig config_;
};

// Hip-to-hip distances between all person pairs per frame.
struct DistanceMatrix {
  int persons = 0;
  int frames = 0;
  Tensor values;  // (P, P, T)
};

DistanceMatrix distance_matrix(const MotionSequence& sorted, int hip_index);

// Forward pieces. All take and return tensors shaped (C, P, T) for the local
// stream or (C, P*T) for the merged global stream; gradients flow when inputs
// or parameters are tape-tracked.
Tensor joint_embed(const Tensor& x_dct, const EmpmpModel& m);
Tensor me_local_update(const Tensor& z, const StageParams& sp, const ModelConfig& cfg,
                       int iters = -1);
Tensor me_global_update(const Tensor& z, const StageParams& sp, const ModelConfig& cfg,
                        int iters = -1);
Tensor spatial_update_local(const Tensor& z, const StageParams& sp, const ModelConfig& cfg);
Tensor spatial_update_global(const Tensor& zg, const StageParams& sp, const ModelConfig& cfg);

struct CiOutput {
  Tensor fused;           // (C, P, T)
  Tensor global_refined;  // (C, P*T)
};

CiOutput ci_block(const Tensor& z_local, const Tensor& z_global,
                  const DistanceMatrix& distances, const StageParams& sp,
                  const ModelConfig& cfg);

Tensor stage_forward(const Tensor& z, const DistanceMatrix& distances,
                     const StageParams& sp, const ModelConfig& cfg);

// Whole network on an already person-sorted coordinate tensor (3J, P, T):
// DCT, embedding, stages, decoding head, inverse DCT. Returns (3J, P, T').
Tensor predict_sorted(const EmpmpModel& m, const Tensor& x_sorted,
                      const DistanceMatrix& distances);

// Public entry point: canonical sort, network, restore original person order.
MotionSequence forward(const MotionSequence& x, const EmpmpModel& m);

std::size_t count_params(const ModelConfig& cfg);

struct FlopBreakdown {
  struct Item {
    std::string label;
    std::uint64_t macs = 0;  // multiply-accumulate ops
  };
  std::vector<Item> items;
  std::uint64_t total = 0;
};

// Dense-contraction MACs for one forward pass of `batch` samples; layer norm
// and elementwise work excluded. See docs/PROFILING.md for the closed form.
FlopBreakdown count_flops(const ModelConfig& cfg, std::uint64_t batch = 1);

}  // namespace empmp
