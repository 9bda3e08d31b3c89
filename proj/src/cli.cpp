#include "empmp/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "empmp/checkpoint.hpp"
#include "empmp/loss.hpp"
#include "empmp/metrics.hpp"
#include "empmp/scene.hpp"
#include "empmp/trainer.hpp"

namespace empmp::cli {

namespace {

// Everything a run needs, resolved from defaults, then preset, then config
// file, then command-line flags (later layers win).
struct RunConfig {
  ModelConfig model;
  TrainPlan plan;
  int stride = 0;  // 0 = frames_in + frames_out
  std::string preset;

  void apply(const std::string& key, const std::string& value);
  void apply_file(const std::string& path);
  void echo(std::ostream& out) const;
};

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw ConfigError("config key " + key + ": expected a boolean, got '" + value + "'");
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected an integer, got '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected a number, got '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected an unsigned integer, got '" + value +
                      "'");
  }
}

void RunConfig::apply(const std::string& key, const std::string& value) {
  if (key == "model.joints") model.joints = parse_int(key, value);
  else if (key == "model.persons") model.persons = parse_int(key, value);
  else if (key == "model.frames_in") model.frames_in = parse_int(key, value);
  else if (key == "model.frames_out") model.frames_out = parse_int(key, value);
  else if (key == "model.channels") model.channels = parse_int(key, value);
  else if (key == "model.stages") model.stages = parse_int(key, value);
  else if (key == "model.local_iters") model.local_iters = parse_int(key, value);
  else if (key == "model.global_iters") model.global_iters = parse_int(key, value);
  else if (key == "model.alpha") model.alpha = parse_double(key, value);
  else if (key == "model.hip_index") model.hip_index = parse_int(key, value);
  else if (key == "model.norm_eps") model.norm_eps = parse_double(key, value);
  else if (key == "model.spatial_update") model.spatial_update = parse_bool(key, value);
  else if (key == "model.seed") model.seed = parse_u64(key, value);
  else if (key == "model.local_norm_axis") {
    if (value == "channel") model.local_norm_axis = LocalNormAxis::kChannel;
    else if (value == "temporal") model.local_norm_axis = LocalNormAxis::kTemporal;
    else throw ConfigError("config key " + key + ": expected channel or temporal");
  } else if (key == "model.global_norm_axis") {
    if (value == "merged") model.global_norm_axis = GlobalNormAxis::kMerged;
    else if (value == "channel") model.global_norm_axis = GlobalNormAxis::kChannel;
    else throw ConfigError("config key " + key + ": expected merged or channel");
  }
  else if (key == "train.epochs") plan.epochs = parse_int(key, value);
  else if (key == "train.batch_size") plan.batch_size = parse_int(key, value);
  else if (key == "train.lr") plan.lr = parse_double(key, value);
  else if (key == "train.seed") plan.seed = parse_u64(key, value);
  else if (key == "train.augment") plan.augment = parse_bool(key, value);
  else if (key == "train.vertical_axis") plan.vertical_axis = parse_int(key, value);
  else if (key == "train.checkpoint_every") plan.checkpoint_every = parse_int(key, value);
  else if (key == "train.stride") stride = parse_int(key, value);
  else if (key == "train.lr_factor") {
    plan.schedule.factor = parse_double(key, value);
    plan.schedule.kind = ScheduleKind::kStepDecay;
  } else if (key == "train.lr_every") {
    plan.schedule.every = parse_int(key, value);
    plan.schedule.kind = ScheduleKind::kStepDecay;
  }
  else if (key == "adam.beta1") plan.adam.beta1 = parse_double(key, value);
  else if (key == "adam.beta2") plan.adam.beta2 = parse_double(key, value);
  else if (key == "adam.eps") plan.adam.eps = parse_double(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected key = value");
    apply(key, value);
  }
}

void RunConfig::echo(std::ostream& out) const {
  out << std::setprecision(17);
  if (!preset.empty()) out << "# preset = " << preset << '\n';
  out << "model.joints = " << model.joints << '\n';
  out << "model.persons = " << model.persons << '\n';
  out << "model.frames_in = " << model.frames_in << '\n';
  out << "model.frames_out = " << model.frames_out << '\n';
  out << "model.channels = " << model.channels << '\n';
  out << "model.stages = " << model.stages << '\n';
  out << "model.local_iters = " << model.local_iters << '\n';
  out << "model.global_iters = " << model.global_iters << '\n';
  out << "model.alpha = " << model.alpha << '\n';
  out << "model.hip_index = " << model.hip_index << '\n';
  out << "model.norm_eps = " << model.norm_eps << '\n';
  out << "model.spatial_update = " << (model.spatial_update ? "true" : "false") << '\n';
  out << "model.local_norm_axis = "
      << (model.local_norm_axis == LocalNormAxis::kChannel ? "channel" : "temporal") << '\n';
  out << "model.global_norm_axis = "
      << (model.global_norm_axis == GlobalNormAxis::kMerged ? "merged" : "channel") << '\n';
  out << "model.seed = " << model.seed << '\n';
  out << "train.epochs = " << plan.epochs << '\n';
  out << "train.batch_size = " << plan.batch_size << '\n';
  out << "train.lr = " << plan.lr << '\n';
  out << "train.seed = " << plan.seed << '\n';
  out << "train.augment = " << (plan.augment ? "true" : "false") << '\n';
  out << "train.vertical_axis = " << plan.vertical_axis << '\n';
  out << "train.checkpoint_every = " << plan.checkpoint_every << '\n';
  out << "train.stride = " << stride << '\n';
  if (plan.schedule.kind == ScheduleKind::kStepDecay) {
    out << "train.lr_factor = " << plan.schedule.factor << '\n';
    out << "train.lr_every = " << plan.schedule.every << '\n';
  }
  out << "adam.beta1 = " << plan.adam.beta1 << '\n';
  out << "adam.beta2 = " << plan.adam.beta2 << '\n';
  out << "adam.eps = " << plan.adam.eps << '\n';
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  // Probe writability early so failures surface as clean usage errors.
  const std::string probe = (std::filesystem::path(dir) / ".write_probe").string();
  {
    std::ofstream f(probe);
    if (!f) throw IoError("directory " + dir + " is not writable");
  }
  std::filesystem::remove(probe, ec);
}

std::vector<TrainWindow> windows_from_manifest(const std::string& manifest,
                                               const ModelConfig& cfg, int stride) {
  const std::vector<Scene> scenes = load_manifest(manifest);
  const int eff_stride = stride > 0 ? stride : cfg.frames_in + cfg.frames_out;
  std::vector<TrainWindow> windows;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    if (scenes[i].persons != cfg.persons)
      throw ConfigError("scene " + std::to_string(i) + " has P=" +
                        std::to_string(scenes[i].persons) + ", model expects P=" +
                        std::to_string(cfg.persons));
    if (scenes[i].joints != cfg.joints)
      throw ConfigError("scene " + std::to_string(i) + " has J=" +
                        std::to_string(scenes[i].joints) + ", model expects J=" +
                        std::to_string(cfg.joints));
    auto w = window_split(scenes[i], cfg.frames_in, cfg.frames_out, eff_stride,
                          static_cast<int>(i));
    windows.insert(windows.end(), std::make_move_iterator(w.begin()),
                   std::make_move_iterator(w.end()));
  }
  if (windows.empty())
    throw ConfigError("no training windows: scenes are shorter than frames_in + frames_out");
  return windows;
}

int cmd_synth(const std::string& out_dir, int count, std::uint64_t seed, int persons,
              int frames, double fps, bool binary) {
  ensure_dir(out_dir);
  const std::vector<Scene> templates = walker_templates();
  const std::vector<Scene> scenes = synth_scenes(count, seed, templates, persons, fps, frames);
  const std::string manifest = save_scene_set(scenes, out_dir, binary);
  std::cout << "wrote " << scenes.size() << " scenes to " << manifest << '\n';
  return 0;
}

int cmd_train(RunConfig cfg, const std::string& manifest, const std::string& out_dir,
              const std::string& from_checkpoint) {
  ensure_dir(out_dir);

  int start_epoch = 0;
  AdamState state;
  EmpmpModel model(cfg.model);
  if (!from_checkpoint.empty()) {
    LoadedCheckpoint loaded = load_checkpoint(from_checkpoint);
    model = std::move(loaded.model);
    cfg.model = model.config();
    if (loaded.optimizer) state = std::move(*loaded.optimizer);
    start_epoch = static_cast<int>(loaded.meta.completed_epochs);
  }

  const std::vector<TrainWindow> windows =
      windows_from_manifest(manifest, cfg.model, cfg.stride);

  {
    std::ofstream echo_out((std::filesystem::path(out_dir) / "config.txt").string());
    if (!echo_out) throw IoError("cannot write config echo to " + out_dir);
    cfg.echo(echo_out);
  }

  cfg.plan.checkpoint_dir = out_dir;
  TrainResult result = train(cfg.plan, model, windows, &state, start_epoch);
  write_loss_csv(result, (std::filesystem::path(out_dir) / "loss.csv").string());
  if (result.nan_abort) {
    std::cerr << "training aborted: non-finite loss\n";
    return 3;
  }
  if (!result.epoch_means.empty()) {
    const StepLoss& last = result.epoch_means.back();
    std::cout << "trained " << result.epochs_completed << " epochs over " << windows.size()
              << " windows; final loss " << last.total << " (joint " << last.joint
              << ", velocity " << last.velocity << ")\n";
  }
  std::cout << "checkpoint: " << result.checkpoint_path << '\n';
  return 0;
}

int cmd_eval(const std::string& manifest, const std::string& checkpoint_path,
             const std::string& scheme_tag, const std::string& out_dir, int stride) {
  const FrameScheme scheme = frame_scheme(scheme_tag);
  LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
  const ModelConfig& mc = loaded.model.config();
  if (scheme.vim_frames.back() > mc.frames_out || scheme.jaf_frames.back() > mc.frames_out)
    throw ConfigError("scheme '" + scheme_tag + "' reports frame " +
                      std::to_string(std::max(scheme.vim_frames.back(),
                                              scheme.jaf_frames.back())) +
                      " but the model predicts only " + std::to_string(mc.frames_out));
  ensure_dir(out_dir);

  const std::vector<TrainWindow> windows = windows_from_manifest(manifest, mc, stride);
  std::vector<MotionSequence> preds, gts;
  preds.reserve(windows.size());
  gts.reserve(windows.size());
  for (const TrainWindow& w : windows) {
    preds.push_back(forward(w.input, loaded.model));
    gts.push_back(w.target);
  }
  const MetricReport report = evaluate(preds, gts, scheme, mc.hip_index);
  write_report_csv(report, (std::filesystem::path(out_dir) / "report.csv").string());
  write_report_json(report, (std::filesystem::path(out_dir) / "report.json").string());

  std::cout << std::setprecision(6);
  std::cout << "evaluated " << report.sequences << " windows (" << scheme_tag << ")\n";
  std::cout << "mpjpe_mm " << report.mpjpe_mm << '\n';
  std::cout << "vim_avg_mm " << report.vim_avg_mm << "  jpe_avg_mm " << report.jpe_avg_mm
            << "  ape_avg_mm " << report.ape_avg_mm << "  fde_avg_mm " << report.fde_avg_mm
            << '\n';
  return 0;
}

int cmd_profile(const RunConfig& cfg, std::uint64_t batch, int runs,
                const std::string& out_csv) {
  cfg.model.validate();
  const std::size_t params = count_params(cfg.model);
  const FlopBreakdown flops = count_flops(cfg.model, batch);

  EmpmpModel model(cfg.model);
  Rng rng(cfg.model.seed + 1);
  MotionSequence input =
      MotionSequence::zeros(cfg.model.joints, cfg.model.persons, cfg.model.frames_in);
  for (double& v : input.data.values_mut()) v = rng.uniform(-1.0, 1.0);

  std::vector<double> latencies_ms;
  latencies_ms.reserve(static_cast<std::size_t>(runs));
  for (int r = 0; r < runs; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    MotionSequence out = forward(input, model);
    const auto t1 = std::chrono::steady_clock::now();
    (void)out;
    latencies_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(latencies_ms.begin(), latencies_ms.end());
  const double median_ms = latencies_ms[latencies_ms.size() / 2];

  std::cout << "parameters " << params << '\n';
  std::cout << "macs (batch " << batch << "):\n";
  for (const auto& item : flops.items)
    std::cout << "  " << std::left << std::setw(16) << item.label << ' ' << item.macs << '\n';
  std::cout << "  " << std::left << std::setw(16) << "total" << ' ' << flops.total << '\n';
  std::cout << "forward latency ms (median of " << runs << ") " << std::setprecision(4)
            << median_ms << '\n';

  if (!out_csv.empty()) {
    std::ofstream out(out_csv);
    if (!out) throw IoError("cannot write profile to " + out_csv);
    out << "item,value\nparameters," << params << '\n';
    for (const auto& item : flops.items) out << "macs_" << item.label << ',' << item.macs << '\n';
    out << "macs_total," << flops.total << '\n';
    out << std::setprecision(17) << "latency_ms_median," << median_ms << '\n';
  }
  return 0;
}

int cmd_predict(const std::string& manifest, const std::string& checkpoint_path,
                const std::string& out_dir, const std::string& csv_path) {
  LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
  const ModelConfig& mc = loaded.model.config();
  ensure_dir(out_dir);

  const std::vector<Scene> scenes = load_manifest(manifest);
  std::vector<Scene> predicted;
  predicted.reserve(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const Scene& s = scenes[i];
    if (s.persons != mc.persons || s.joints != mc.joints)
      throw ConfigError("scene " + std::to_string(i) + " (P=" + std::to_string(s.persons) +
                        ", J=" + std::to_string(s.joints) + ") does not match checkpoint (P=" +
                        std::to_string(mc.persons) + ", J=" + std::to_string(mc.joints) + ")");
    if (s.frames < mc.frames_in)
      throw ConfigError("scene " + std::to_string(i) + " has " + std::to_string(s.frames) +
                        " frames, model needs " + std::to_string(mc.frames_in));
    const MotionSequence tail = s.slice(s.frames - mc.frames_in, mc.frames_in);
    const MotionSequence pred = forward(tail, loaded.model);
    Scene out = Scene::zeros(s.persons, mc.frames_out, s.joints, s.fps, s.skeleton_tag);
    for (int p = 0; p < s.persons; ++p)
      for (int f = 0; f < mc.frames_out; ++f)
        for (int j = 0; j < s.joints; ++j)
          for (int c = 0; c < 3; ++c) out.set_coord(p, f, j, c, pred.coord(c, j, p, f));
    predicted.push_back(std::move(out));
  }
  const std::string out_manifest = save_scene_set(predicted, out_dir);
  std::cout << "wrote " << predicted.size() << " predictions to " << out_manifest << '\n';

  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw IoError("cannot write trajectories to " + csv_path);
    out << std::setprecision(17);
    out << "scene,person,frame,joint,x,y,z\n";
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      const Scene& s = predicted[i];
      for (int p = 0; p < s.persons; ++p)
        for (int f = 0; f < s.frames; ++f)
          for (int j = 0; j < s.joints; ++j)
            out << i << ',' << p << ',' << f << ',' << j << ',' << s.coord(p, f, j, 0) << ','
                << s.coord(p, f, j, 1) << ',' << s.coord(p, f, j, 2) << '\n';
    }
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Multi-person motion prediction pipeline"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate synthetic walking scenes");
  std::string synth_out;
  int synth_count = 100, synth_persons = 3, synth_frames = 60;
  double synth_fps = 15.0;
  std::uint64_t synth_seed = 7;
  bool synth_binary = false;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--count", synth_count, "number of scenes");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--persons", synth_persons, "persons per scene");
  synth->add_option("--frames", synth_frames, "frames per scene");
  synth->add_option("--fps", synth_fps, "frames per second");
  synth->add_flag("--binary", synth_binary, "write binary scene files");

  // shared model/train options
  auto add_run_options = [](CLI::App* cmd, std::string& preset, std::string& config_file) {
    cmd->add_option("--preset", preset, "model preset: 3dpw, cmu-2s, cmu-1s");
    cmd->add_option("--config", config_file, "key = value config file");
  };

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model on a scene manifest");
  std::string train_data, train_out, train_preset, train_config, train_from;
  int train_epochs = -1, train_batch = -1, train_stride = -1, train_ckpt_every = -1;
  double train_lr = -1.0;
  std::int64_t train_seed = -1;
  std::string train_augment;
  train_cmd->add_option("--data", train_data, "scene manifest")->required();
  train_cmd->add_option("--out", train_out, "output directory")->required();
  add_run_options(train_cmd, train_preset, train_config);
  train_cmd->add_option("--from-checkpoint", train_from, "resume from checkpoint");
  train_cmd->add_option("--epochs", train_epochs, "training epochs");
  train_cmd->add_option("--batch", train_batch, "batch size");
  train_cmd->add_option("--lr", train_lr, "learning rate");
  train_cmd->add_option("--seed", train_seed, "training seed");
  train_cmd->add_option("--stride", train_stride, "window stride (default T + T')");
  train_cmd->add_option("--checkpoint-every", train_ckpt_every, "checkpoint cadence in epochs");
  train_cmd->add_option("--augment", train_augment, "on/off: rotation + permutation augmentation");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  std::string eval_data, eval_ckpt, eval_scheme, eval_out;
  int eval_stride = 0;
  eval_cmd->add_option("--data", eval_data, "scene manifest")->required();
  eval_cmd->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
  eval_cmd->add_option("--scheme", eval_scheme, "frame scheme: 3dpw, cmu-2s, cmu-1s")
      ->required();
  eval_cmd->add_option("--out", eval_out, "output directory")->required();
  eval_cmd->add_option("--stride", eval_stride, "window stride (default T + T')");

  // profile
  auto* profile_cmd = app.add_subcommand("profile", "Parameter/FLOP/latency profile");
  std::string profile_preset, profile_config, profile_csv;
  std::uint64_t profile_batch = 1;
  int profile_runs = 30;
  add_run_options(profile_cmd, profile_preset, profile_config);
  profile_cmd->add_option("--batch", profile_batch, "batch size for the MAC counts");
  profile_cmd->add_option("--runs", profile_runs, "latency sample count");
  profile_cmd->add_option("--csv", profile_csv, "also write the profile as CSV");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Predict futures for manifest scenes");
  std::string predict_data, predict_ckpt, predict_out, predict_csv;
  predict_cmd->add_option("--data", predict_data, "scene manifest")->required();
  predict_cmd->add_option("--checkpoint", predict_ckpt, "model checkpoint")->required();
  predict_cmd->add_option("--out", predict_out, "output directory")->required();
  predict_cmd->add_option("--csv", predict_csv, "also write trajectories as CSV");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("empmp");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed())
      return cmd_synth(synth_out, synth_count, synth_seed, synth_persons, synth_frames,
                       synth_fps, synth_binary);

    if (train_cmd->parsed()) {
      RunConfig cfg;
      if (!train_preset.empty()) {
        cfg.model = ModelConfig::preset(train_preset);
        cfg.preset = train_preset;
      }
      if (!train_config.empty()) cfg.apply_file(train_config);
      if (train_epochs >= 0) cfg.plan.epochs = train_epochs;
      if (train_batch >= 0) cfg.plan.batch_size = train_batch;
      if (train_lr >= 0.0) cfg.plan.lr = train_lr;
      if (train_seed >= 0) cfg.plan.seed = static_cast<std::uint64_t>(train_seed);
      if (train_stride >= 0) cfg.stride = train_stride;
      if (train_ckpt_every >= 0) cfg.plan.checkpoint_every = train_ckpt_every;
      if (!train_augment.empty()) cfg.plan.augment = parse_bool("--augment", train_augment);
      return cmd_train(std::move(cfg), train_data, train_out, train_from);
    }

    if (eval_cmd->parsed())
      return cmd_eval(eval_data, eval_ckpt, eval_scheme, eval_out, eval_stride);

    if (profile_cmd->parsed()) {
      RunConfig cfg;
      if (!profile_preset.empty()) {
        cfg.model = ModelConfig::preset(profile_preset);
        cfg.preset = profile_preset;
      }
      if (!profile_config.empty()) cfg.apply_file(profile_config);
      return cmd_profile(cfg, profile_batch, profile_runs, profile_csv);
    }

    if (predict_cmd->parsed())
      return cmd_predict(predict_data, predict_ckpt, predict_out, predict_csv);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const TapeError& e) {
    std::cerr << "internal failure: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << '\n';
    return 3;
  }
  return 2;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace empmp::cli
