#include "empmp/model.hpp"

#include <cmath>

#include "empmp/rng.hpp"

namespace empmp {

void ModelConfig::validate() const {
  if (joints < 1) throw ConfigError("config: joints must be >= 1");
  if (persons < 1) throw ConfigError("config: persons must be >= 1");
  if (frames_in < 1) throw ConfigError("config: frames_in must be >= 1");
  if (frames_out < 1) throw ConfigError("config: frames_out must be >= 1");
  if (channels < 1) throw ConfigError("config: channels must be >= 1");
  if (stages < 1) throw ConfigError("config: stages must be >= 1");
  if (local_iters < 0) throw ConfigError("config: local_iters must be >= 0");
  if (global_iters < 0) throw ConfigError("config: global_iters must be >= 0");
  if (alpha < 0.0) throw ConfigError("config: alpha must be >= 0");
  if (hip_index < 0 || hip_index >= joints)
    throw ConfigError("config: hip_index " + std::to_string(hip_index) +
                      " out of range for " + std::to_string(joints) + " joints");
  if (norm_eps <= 0.0) throw ConfigError("config: norm_eps must be positive");
}

ModelConfig ModelConfig::preset(const std::string& name) {
  ModelConfig c;
  if (name == "3dpw") {
    c.joints = 13;
    c.persons = 2;
    c.frames_in = 16;
    c.frames_out = 14;
    c.channels = 39;
  } else if (name == "cmu-2s") {
    c.joints = 15;
    c.persons = 3;
    c.frames_in = 30;
    c.frames_out = 30;
    c.channels = 45;
  } else if (name == "cmu-1s") {
    c.joints = 15;
    c.persons = 3;
    c.frames_in = 15;
    c.frames_out = 15;
    c.channels = 45;
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected 3dpw, cmu-2s or cmu-1s)");
  }
  return c;
}

Tensor layer_norm(const Tensor& x, const LayerNormParams& p) {
  return layer_norm(x, p.axis, p.gain, p.bias, p.eps);
}

namespace {

Tensor init_weight(int in, int out, Rng& rng, double extra = 1.0) {
  const double k = extra / std::sqrt(static_cast<double>(in));
  Tensor w(Shape{in, out});
  for (double& v : w.values_mut()) v = rng.uniform(-k, k);
  return w;
}

LayerNormParams make_norm(int len, int axis, double eps) {
  LayerNormParams p;
  p.gain = Tensor::full(Shape{len}, 1.0);
  p.bias = Tensor(Shape{len});
  p.axis = axis;
  p.eps = eps;
  return p;
}

// Norm placement for local (C, P, T) tensors.
int local_axis(const ModelConfig& cfg) {
  return cfg.local_norm_axis == LocalNormAxis::kChannel ? 0 : 2;
}
int local_affine(const ModelConfig& cfg) {
  return cfg.local_norm_axis == LocalNormAxis::kChannel ? cfg.channels : cfg.frames_in;
}
// Norm placement for merged (C, P*T) tensors.
int global_axis(const ModelConfig& cfg) {
  return cfg.global_norm_axis == GlobalNormAxis::kMerged ? 1 : 0;
}
int global_affine(const ModelConfig& cfg) {
  return cfg.global_norm_axis == GlobalNormAxis::kMerged ? cfg.merged() : cfg.channels;
}

}  // namespace

EmpmpModel::EmpmpModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  Rng rng(config_.seed);
  const int c = config_.channels;
  const int t = config_.frames_in;
  const int pt = config_.merged();
  const int rows = config_.coord_rows();
  const double eps = config_.norm_eps;
  const int la = local_axis(config_), laff = local_affine(config_);
  const int ga = global_axis(config_), gaff = global_affine(config_);

  embed_weight = init_weight(rows, c, rng);
  embed_bias = Tensor(Shape{c});

  stages.resize(static_cast<std::size_t>(config_.stages));
  for (StageParams& sp : stages) {
    for (int i = 0; i < config_.local_iters; ++i) {
      sp.local_weights.push_back(init_weight(t, t, rng));
      sp.local_biases.push_back(Tensor(Shape{t}));
      sp.local_norms.push_back(make_norm(laff, la, eps));
    }
    if (config_.spatial_update) {
      for (int i = 0; i < config_.local_iters; ++i) {
        sp.local_spatial_weights.push_back(init_weight(c, c, rng));
        sp.local_spatial_biases.push_back(Tensor(Shape{c}));
        sp.local_spatial_norms.push_back(make_norm(laff, la, eps));
      }
    }
    for (int j = 0; j < config_.global_iters; ++j) {
      sp.global_weights.push_back(init_weight(pt, pt, rng));
      sp.global_biases.push_back(Tensor(Shape{pt}));
      sp.global_norms.push_back(make_norm(gaff, ga, eps));
    }
    if (config_.spatial_update) {
      for (int j = 0; j < config_.global_iters; ++j) {
        sp.global_spatial_weights.push_back(init_weight(c, c, rng));
        sp.global_spatial_biases.push_back(Tensor(Shape{c}));
        sp.global_spatial_norms.push_back(make_norm(gaff, ga, eps));
      }
    }
    // Scale/shift maps start near zero so the modulation (1 + S) begins
    // close to identity.
    sp.scale_weight = init_weight(pt, t, rng, 0.01);
    sp.scale_bias = Tensor(Shape{t});
    sp.shift_weight = init_weight(pt, t, rng, 0.01);
    sp.shift_bias = Tensor(Shape{t});
    sp.refine_norm = make_norm(laff, la, eps);
    sp.dist_weight = init_weight(config_.persons, c, rng);
    sp.dist_bias = Tensor(Shape{c});
    sp.fuse_norm = make_norm(laff, la, eps);
    sp.translate_weight = init_weight(pt, pt, rng);
    sp.translate_bias = Tensor(Shape{pt});
    sp.global_refine_norm = make_norm(gaff, ga, eps);
  }

  // The decoding head starts near zero so the untrained network predicts
  // close to the origin instead of amplified feature noise; the trunk then
  // builds the prediction up rather than unlearning it.
  head_time_weight = init_weight(t, config_.frames_out, rng, 0.01);
  head_time_bias = Tensor(Shape{config_.frames_out});
  head_channel_weight = init_weight(c, rows, rng, 0.01);
  head_channel_bias = Tensor(Shape{rows});
}

namespace {

template <typename Model, typename Fn>
void visit_params(Model& m, Fn&& fn) {
  fn("embed.weight", m.embed_weight);
  fn("embed.bias", m.embed_bias);
  for (std::size_t k = 0; k < m.stages.size(); ++k) {
    auto& sp = m.stages[k];
    const std::string pre = "stage" + std::to_string(k) + ".";
    for (std::size_t i = 0; i < sp.local_weights.size(); ++i) {
      const std::string n = pre + "local" + std::to_string(i) + ".";
      fn(n + "weight", sp.local_weights[i]);
      fn(n + "bias", sp.local_biases[i]);
      fn(n + "norm.gain", sp.local_norms[i].gain);
      fn(n + "norm.bias", sp.local_norms[i].bias);
    }
    for (std::size_t i = 0; i < sp.local_spatial_weights.size(); ++i) {
      const std::string n = pre + "local_spatial" + std::to_string(i) + ".";
      fn(n + "weight", sp.local_spatial_weights[i]);
      fn(n + "bias", sp.local_spatial_biases[i]);
      fn(n + "norm.gain", sp.local_spatial_norms[i].gain);
      fn(n + "norm.bias", sp.local_spatial_norms[i].bias);
    }
    for (std::size_t j = 0; j < sp.global_weights.size(); ++j) {
      const std::string n = pre + "global" + std::to_string(j) + ".";
      fn(n + "weight", sp.global_weights[j]);
      fn(n + "bias", sp.global_biases[j]);
      fn(n + "norm.gain", sp.global_norms[j].gain);
      fn(n + "norm.bias", sp.global_norms[j].bias);
    }
    for (std::size_t j = 0; j < sp.global_spatial_weights.size(); ++j) {
      const std::string n = pre + "global_spatial" + std::to_string(j) + ".";
      fn(n + "weight", sp.global_spatial_weights[j]);
      fn(n + "bias", sp.global_spatial_biases[j]);
      fn(n + "norm.gain", sp.global_spatial_norms[j].gain);
      fn(n + "norm.bias", sp.global_spatial_norms[j].bias);
    }
    fn(pre + "ci.scale.weight", sp.scale_weight);
    fn(pre + "ci.scale.bias", sp.scale_bias);
    fn(pre + "ci.shift.weight", sp.shift_weight);
    fn(pre + "ci.shift.bias", sp.shift_bias);
    fn(pre + "ci.refine_norm.gain", sp.refine_norm.gain);
    fn(pre + "ci.refine_norm.bias", sp.refine_norm.bias);
    fn(pre + "ci.dist.weight", sp.dist_weight);
    fn(pre + "ci.dist.bias", sp.dist_bias);
    fn(pre + "ci.fuse_norm.gain", sp.fuse_norm.gain);
    fn(pre + "ci.fuse_norm.bias", sp.fuse_norm.bias);
    fn(pre + "ci.translate.weight", sp.translate_weight);
    fn(pre + "ci.translate.bias", sp.translate_bias);
    fn(pre + "ci.global_norm.gain", sp.global_refine_norm.gain);
    fn(pre + "ci.global_norm.bias", sp.global_refine_norm.bias);
  }
  fn("head.time.weight", m.head_time_weight);
  fn("head.time.bias", m.head_time_bias);
  fn("head.channel.weight", m.head_channel_weight);
  fn("head.channel.bias", m.head_channel_bias);
}

}  // namespace

void EmpmpModel::for_each_parameter(
    const std::function<void(const std::string&, Tensor&)>& fn) {
  visit_params(*this, fn);
}

void EmpmpModel::for_each_parameter(
    const std::function<void(const std::string&, const Tensor&)>& fn) const {
  visit_params(*this, fn);
}

std::size_t EmpmpModel::parameter_count() const {
  std::size_t n = 0;
  for_each_parameter([&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

EmpmpModel EmpmpModel::clone() const {
  EmpmpModel copy = *this;
  copy.for_each_parameter(
      [](const std::string&, Tensor& t) { t = t.deep_copy(); });
  return copy;
}

EmpmpModel EmpmpModel::watched(Tape& tape) const {
  EmpmpModel copy = *this;
  copy.for_each_parameter(
      [&tape](const std::string&, Tensor& t) { t = tape.watch(t); });
  return copy;
}

DistanceMatrix distance_matrix(const MotionSequence& sorted, int hip_index) {
  if (hip_index < 0 || hip_index >= sorted.joints)
    throw ContractError("hip index out of range");
  DistanceMatrix d;
  d.persons = sorted.persons;
  d.frames = sorted.frames;
  d.values = Tensor(Shape{sorted.persons, sorted.persons, sorted.frames});
  double* out = d.values.values_mut().data();
  const std::size_t P = static_cast<std::size_t>(sorted.persons);
  const std::size_t T = static_cast<std::size_t>(sorted.frames);
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t q = 0; q < P; ++q)
      for (std::size_t t = 0; t < T; ++t) {
        const auto a = sorted.hip(static_cast<int>(p), static_cast<int>(t), hip_index);
        const auto b = sorted.hip(static_cast<int>(q), static_cast<int>(t), hip_index);
        const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
        out[(p * P + q) * T + t] = std::sqrt(dx * dx + dy * dy + dz * dz);
      }
  return d;
}

Tensor joint_embed(const Tensor& x_dct, const EmpmpModel& m) {
  if (x_dct.rank() != 3 || x_dct.dim(0) != m.config().coord_rows())
    throw DimensionError("joint_embed: expected (" +
                         std::to_string(m.config().coord_rows()) + ", P, T), got " +
                         shape_str(x_dct.shape()));
  return linear_along_axis(x_dct, 0, m.embed_weight, m.embed_bias);
}

Tensor me_local_update(const Tensor& z, const StageParams& sp, const ModelConfig& cfg,
                       int iters) {
  const int n = iters < 0 ? static_cast<int>(sp.local_weights.size()) : iters;
  if (n > static_cast<int>(sp.local_weights.size()))
    throw ContractError("me_local_update: asked for " + std::to_string(n) +
                        " iterations, stage has " + std::to_string(sp.local_weights.size()));
  Tensor cur = z;
  for (int i = 0; i < n; ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    Tensor u = linear_along_axis(cur, 2, sp.local_weights[ui], sp.local_biases[ui]);
    cur = add(cur, layer_norm(u, sp.local_norms[ui]));
  }
  if (cfg.spatial_update && !sp.local_spatial_weights.empty())
    cur = spatial_update_local(cur, sp, cfg);
  return cur;
}

Tensor spatial_update_local(const Tensor& z, const StageParams& sp, const ModelConfig&) {
  Tensor cur = z;
  for (std::size_t i = 0; i < sp.local_spatial_weights.size(); ++i) {
    Tensor u = linear_along_axis(cur, 0, sp.local_spatial_weights[i],
                                 sp.local_spatial_biases[i]);
    cur = add(cur, layer_norm(u, sp.local_spatial_norms[i]));
  }
  return cur;
}

Tensor me_global_update(const Tensor& z, const StageParams& sp, const ModelConfig& cfg,
                        int iters) {
  const int m = iters < 0 ? static_cast<int>(sp.global_weights.size()) : iters;
  if (m > static_cast<int>(sp.global_weights.size()))
    throw ContractError("me_global_update: asked for " + std::to_string(m) +
                        " iterations, stage has " + std::to_string(sp.global_weights.size()));
  Tensor cur = merge_axes(z, 1, 2);
  for (int j = 0; j < m; ++j) {
    const std::size_t uj = static_cast<std::size_t>(j);
    Tensor u = linear_along_axis(cur, 1, sp.global_weights[uj], sp.global_biases[uj]);
    cur = add(cur, layer_norm(u, sp.global_norms[uj]));
  }
  if (cfg.spatial_update && !sp.global_spatial_weights.empty())
    cur = spatial_update_global(cur, sp, cfg);
  return cur;
}

Tensor spatial_update_global(const Tensor& zg, const StageParams& sp, const ModelConfig&) {
  Tensor cur = zg;
  for (std::size_t j = 0; j < sp.global_spatial_weights.size(); ++j) {
    Tensor u = linear_along_axis(cur, 0, sp.global_spatial_weights[j],
                                 sp.global_spatial_biases[j]);
    cur = add(cur, layer_norm(u, sp.global_spatial_norms[j]));
  }
  return cur;
}

CiOutput ci_block(const Tensor& z_local, const Tensor& z_global,
                  const DistanceMatrix& distances, const StageParams& sp,
                  const ModelConfig& cfg) {
  if (z_local.rank() != 3)
    throw DimensionError("ci_block: local stream must be rank 3, got " +
                         shape_str(z_local.shape()));
  if (z_global.rank() != 2)
    throw DimensionError("ci_block: global stream must be rank 2, got " +
                         shape_str(z_global.shape()));
  const int persons = z_local.dim(1);
  if (distances.persons != persons || distances.frames != z_local.dim(2))
    throw DimensionError("ci_block: distance matrix " + shape_str(distances.values.shape()) +
                         " does not match local stream " + shape_str(z_local.shape()));

  // Scale/shift modulation of the local stream by the global summary.
  Tensor s = linear_along_axis(z_global, 1, sp.scale_weight, sp.scale_bias);  // (C, T)
  Tensor h = linear_along_axis(z_global, 1, sp.shift_weight, sp.shift_bias);  // (C, T)
  Tensor modulated = hadamard(z_local, add_scalar(s, 1.0));
  modulated = add(modulated, repeat_axis(h, 1, persons));
  Tensor refined = layer_norm(modulated, sp.refine_norm);

  // Distance embedding: contract the first person axis of (P, P, T) to C.
  Tensor tau = linear_along_axis(distances.values, 0, sp.dist_weight, sp.dist_bias);

  Tensor local_star = add(z_local, layer_norm(add(refined, tau), sp.fuse_norm));

  // Global refinement from the merged local stream.
  Tensor local_merged = merge_axes(z_local, 1, 2);
  Tensor g = linear_along_axis(local_merged, 1, sp.translate_weight, sp.translate_bias);
  Tensor global_star = add(z_global, layer_norm(add(z_global, g), sp.global_refine_norm));

  Tensor unmerged = split_axes(global_star, 1, persons, z_local.dim(2));
  CiOutput out;
  out.fused = add(local_star, scale(unmerged, cfg.alpha));
  out.global_refined = global_star;
  return out;
}

Tensor stage_forward(const Tensor& z, const DistanceMatrix& distances,
                     const StageParams& sp, const ModelConfig& cfg) {
  Tensor z_local = me_local_update(z, sp, cfg);
  Tensor z_global = me_global_update(z, sp, cfg);
  return ci_block(z_local, z_global, distances, sp, cfg).fused;
}

Tensor predict_sorted(const EmpmpModel& m, const Tensor& x_sorted,
                      const DistanceMatrix& distances) {
  const ModelConfig& cfg = m.config();
  if (x_sorted.rank() != 3 || x_sorted.dim(0) != cfg.coord_rows() ||
      x_sorted.dim(1) != cfg.persons || x_sorted.dim(2) != cfg.frames_in)
    throw DimensionError("predict_sorted: expected (" + std::to_string(cfg.coord_rows()) +
                         ", " + std::to_string(cfg.persons) + ", " +
                         std::to_string(cfg.frames_in) + "), got " +
                         shape_str(x_sorted.shape()));
  const DctBasis in_basis(cfg.frames_in);
  const DctBasis out_basis(cfg.frames_out);
  Tensor z = dct_forward(x_sorted, in_basis, 2);
  z = joint_embed(z, m);
  for (const StageParams& sp : m.stages) z = stage_forward(z, distances, sp, cfg);
  z = linear_along_axis(z, 2, m.head_time_weight, m.head_time_bias);
  z = linear_along_axis(z, 0, m.head_channel_weight, m.head_channel_bias);
  return dct_inverse(z, out_basis, 2);
}

MotionSequence forward(const MotionSequence& x, const EmpmpModel& m) {
  const ModelConfig& cfg = m.config();
  if (x.joints != cfg.joints || x.persons != cfg.persons || x.frames != cfg.frames_in)
    throw DimensionError("forward: sequence (J=" + std::to_string(x.joints) +
                         ", P=" + std::to_string(x.persons) + ", T=" +
                         std::to_string(x.frames) + ") does not match config (J=" +
                         std::to_string(cfg.joints) + ", P=" + std::to_string(cfg.persons) +
                         ", T=" + std::to_string(cfg.frames_in) + ")");
  SortedMotion sorted = pips_sort(x, cfg.hip_index);
  DistanceMatrix dist = distance_matrix(sorted.motion, cfg.hip_index);
  Tensor y = predict_sorted(m, sorted.motion.data, dist);
  return ipips_restore(MotionSequence::from_tensor(x.joints, y), sorted.permutation);
}

std::size_t count_params(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t c = static_cast<std::size_t>(cfg.channels);
  const std::size_t t = static_cast<std::size_t>(cfg.frames_in);
  const std::size_t to = static_cast<std::size_t>(cfg.frames_out);
  const std::size_t pt = static_cast<std::size_t>(cfg.merged());
  const std::size_t p = static_cast<std::size_t>(cfg.persons);
  const std::size_t rows = static_cast<std::size_t>(cfg.coord_rows());
  const std::size_t n = static_cast<std::size_t>(cfg.local_iters);
  const std::size_t m = static_cast<std::size_t>(cfg.global_iters);
  const std::size_t laff =
      cfg.local_norm_axis == LocalNormAxis::kChannel ? c : t;
  const std::size_t gaff =
      cfg.global_norm_axis == GlobalNormAxis::kMerged ? pt : c;

  const std::size_t embed = rows * c + c;
  std::size_t stage = n * (t * t + t + 2 * laff) + m * (pt * pt + pt + 2 * gaff);
  if (cfg.spatial_update)
    stage += n * (c * c + c + 2 * laff) + m * (c * c + c + 2 * gaff);
  const std::size_t ci = 2 * (pt * t + t) + 2 * laff   // scale, shift, refine norm
                         + (p * c + c) + 2 * laff      // distance embedding, fuse norm
                         + (pt * pt + pt) + 2 * gaff;  // translate map, global norm
  const std::size_t head = t * to + to + c * rows + rows;
  return embed + static_cast<std::size_t>(cfg.stages) * (stage + ci) + head;
}

FlopBreakdown count_flops(const ModelConfig& cfg, std::uint64_t batch) {
  cfg.validate();
  const std::uint64_t c = static_cast<std::uint64_t>(cfg.channels);
  const std::uint64_t t = static_cast<std::uint64_t>(cfg.frames_in);
  const std::uint64_t to = static_cast<std::uint64_t>(cfg.frames_out);
  const std::uint64_t p = static_cast<std::uint64_t>(cfg.persons);
  const std::uint64_t pt = p * t;
  const std::uint64_t rows = static_cast<std::uint64_t>(cfg.coord_rows());
  const std::uint64_t k = static_cast<std::uint64_t>(cfg.stages);
  const std::uint64_t n = static_cast<std::uint64_t>(cfg.local_iters);
  const std::uint64_t m = static_cast<std::uint64_t>(cfg.global_iters);

  FlopBreakdown out;
  auto item = [&](const std::string& label, std::uint64_t macs) {
    if (macs == 0) return;
    out.items.push_back({label, macs * batch});
    out.total += macs * batch;
  };
  item("dct", rows * p * t * t);
  item("embed", p * t * rows * c);
  item("local_temporal", k * n * c * p * t * t);
  if (cfg.spatial_update) item("local_spatial", k * n * p * t * c * c);
  item("global_temporal", k * m * c * pt * pt);
  if (cfg.spatial_update) item("global_spatial", k * m * pt * c * c);
  item("ci_scale_shift", k * 2 * c * pt * t);
  item("ci_distance", k * c * p * t * p);
  item("ci_translate", k * c * pt * pt);
  item("head_time", c * p * t * to);
  item("head_channel", p * to * c * rows);
  item("idct", rows * p * to * to);
  return out;
}

}  // namespace empmp
