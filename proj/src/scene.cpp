#include "empmp/scene.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>

namespace empmp {

static_assert(std::endian::native == std::endian::little,
              "binary scene payload assumes a little-endian host");

namespace {

std::size_t coord_index(const Scene& s, int person, int frame, int joint, int axis) {
  if (person < 0 || person >= s.persons) throw DimensionError("scene person out of range");
  if (frame < 0 || frame >= s.frames) throw DimensionError("scene frame out of range");
  if (joint < 0 || joint >= s.joints) throw DimensionError("scene joint out of range");
  if (axis < 0 || axis >= 3) throw DimensionError("scene axis out of range");
  return ((static_cast<std::size_t>(person) * static_cast<std::size_t>(s.frames) +
           static_cast<std::size_t>(frame)) *
              static_cast<std::size_t>(s.joints) +
          static_cast<std::size_t>(joint)) *
             3 +
         static_cast<std::size_t>(axis);
}

}  // namespace

Scene Scene::zeros(int persons, int frames, int joints, double fps, std::string tag) {
  Scene s;
  s.persons = persons;
  s.frames = frames;
  s.joints = joints;
  s.fps = fps;
  s.skeleton_tag = std::move(tag);
  s.coords.assign(static_cast<std::size_t>(persons) * static_cast<std::size_t>(frames) *
                      static_cast<std::size_t>(joints) * 3,
                  0.0);
  s.validate();
  return s;
}

double Scene::coord(int person, int frame, int joint, int axis) const {
  return coords[coord_index(*this, person, frame, joint, axis)];
}

void Scene::set_coord(int person, int frame, int joint, int axis, double value) {
  coords[coord_index(*this, person, frame, joint, axis)] = value;
}

void Scene::validate() const {
  if (persons < 1 || frames < 1 || joints < 1)
    throw ContractError("scene dimensions must be >= 1 (P=" + std::to_string(persons) +
                        ", F=" + std::to_string(frames) + ", J=" + std::to_string(joints) +
                        ")");
  if (!(fps > 0.0)) throw ContractError("scene fps must be positive");
  const std::size_t expect = static_cast<std::size_t>(persons) *
                             static_cast<std::size_t>(frames) *
                             static_cast<std::size_t>(joints) * 3;
  if (coords.size() != expect)
    throw ContractError("scene holds " + std::to_string(coords.size()) +
                        " coordinates, expected " + std::to_string(expect));
  for (double v : coords)
    if (!std::isfinite(v)) throw NumericError("scene contains a non-finite coordinate");
}

MotionSequence Scene::slice(int start, int count) const {
  if (count < 1 || start < 0 || start + count > frames)
    throw ContractError("scene slice [" + std::to_string(start) + ", " +
                        std::to_string(start + count) + ") outside 0.." +
                        std::to_string(frames));
  MotionSequence m = MotionSequence::zeros(joints, persons, count);
  for (int j = 0; j < joints; ++j)
    for (int c = 0; c < 3; ++c)
      for (int p = 0; p < persons; ++p)
        for (int t = 0; t < count; ++t)
          m.set_coord(c, j, p, t, coord(p, start + t, j, c));
  return m;
}

int skeleton_hip_index(const std::string& tag) {
  if (tag == "walker15") return 0;
  return 0;
}

namespace {

std::string header_line(const Scene& s) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "EMPMP-SCENE v1 P=" << s.persons << " F=" << s.frames << " J=" << s.joints
      << " FPS=" << s.fps << " TAG=" << s.skeleton_tag;
  return out.str();
}

Scene parse_header(const std::string& line, const std::string& path) {
  std::istringstream in(line);
  std::string magic, version;
  in >> magic >> version;
  if (magic != "EMPMP-SCENE" || version != "v1")
    throw ParseError(path + ": not an EMPMP-SCENE v1 header");
  Scene s;
  std::string field;
  bool have_p = false, have_f = false, have_j = false, have_fps = false;
  while (in >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ParseError(path + ": malformed header field " + field);
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    try {
      if (key == "P") {
        s.persons = std::stoi(value);
        have_p = true;
      } else if (key == "F") {
        s.frames = std::stoi(value);
        have_f = true;
      } else if (key == "J") {
        s.joints = std::stoi(value);
        have_j = true;
      } else if (key == "FPS") {
        s.fps = std::stod(value);
        have_fps = true;
      } else if (key == "TAG") {
        s.skeleton_tag = value;
      } else {
        throw ParseError(path + ": unknown header field " + key);
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError(path + ": malformed header value " + field);
    }
  }
  if (!have_p || !have_f || !have_j || !have_fps)
    throw ParseError(path + ": header is missing P/F/J/FPS");
  if (s.persons < 1 || s.frames < 1 || s.joints < 1 || !(s.fps > 0.0))
    throw ParseError(path + ": header has non-positive dimensions");
  s.coords.assign(static_cast<std::size_t>(s.persons) * static_cast<std::size_t>(s.frames) *
                      static_cast<std::size_t>(s.joints) * 3,
                  0.0);
  return s;
}

bool is_binary_path(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0;
}

}  // namespace

void save_scene_text(const Scene& scene, const std::string& path) {
  scene.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scene to " + path);
  out << header_line(scene) << '\n';
  out << std::setprecision(17);
  for (int p = 0; p < scene.persons; ++p)
    for (int f = 0; f < scene.frames; ++f)
      for (int j = 0; j < scene.joints; ++j)
        out << p << ' ' << f << ' ' << j << ' ' << scene.coord(p, f, j, 0) << ' '
            << scene.coord(p, f, j, 1) << ' ' << scene.coord(p, f, j, 2) << '\n';
  if (!out) throw IoError("failed writing scene to " + path);
}

void save_scene_binary(const Scene& scene, const std::string& path) {
  scene.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write scene to " + path);
  out << header_line(scene) << '\n';
  std::vector<float> payload(scene.coords.size());
  for (std::size_t i = 0; i < scene.coords.size(); ++i)
    payload[i] = static_cast<float>(scene.coords[i]);
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!out) throw IoError("failed writing scene to " + path);
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read scene from " + path);
  std::string header;
  if (!std::getline(in, header)) throw ParseError(path + ": empty file");
  Scene s = parse_header(header, path);

  if (is_binary_path(path)) {
    std::vector<float> payload(s.coords.size());
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(payload.size() * sizeof(float)))
      throw ParseError(path + ": truncated binary payload");
    char extra;
    if (in.read(&extra, 1)) throw ParseError(path + ": trailing bytes after payload");
    for (std::size_t i = 0; i < payload.size(); ++i)
      s.coords[i] = static_cast<double>(payload[i]);
  } else {
    std::string line;
    long lineno = 1;
    for (int p = 0; p < s.persons; ++p)
      for (int f = 0; f < s.frames; ++f)
        for (int j = 0; j < s.joints; ++j) {
          if (!std::getline(in, line))
            throw ParseError(path + ": unexpected end of file at line " +
                             std::to_string(lineno + 1));
          ++lineno;
          std::istringstream row(line);
          int rp, rf, rj;
          double x, y, z;
          if (!(row >> rp >> rf >> rj >> x >> y >> z))
            throw ParseError(path + ":" + std::to_string(lineno) + ": malformed row");
          if (rp != p || rf != f || rj != j)
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": row indices out of order (expected " + std::to_string(p) +
                             " " + std::to_string(f) + " " + std::to_string(j) + ")");
          s.set_coord(p, f, j, 0, x);
          s.set_coord(p, f, j, 1, y);
          s.set_coord(p, f, j, 2, z);
        }
    while (std::getline(in, line))
      if (!line.empty())
        throw ParseError(path + ": trailing content after coordinate rows");
  }
  s.validate();
  return s;
}

std::vector<Scene> load_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot read manifest " + manifest_path);
  const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
  std::vector<Scene> scenes;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::filesystem::path p(line);
    if (p.is_relative()) p = base / p;
    scenes.push_back(load_scene(p.string()));
  }
  if (scenes.empty()) throw ParseError("manifest " + manifest_path + " lists no scenes");
  return scenes;
}

std::string save_scene_set(const std::vector<Scene>& scenes, const std::string& dir,
                           bool binary) {
  if (scenes.empty()) throw ContractError("refusing to write an empty scene set");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  const std::filesystem::path base(dir);
  std::ostringstream manifest;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    std::ostringstream name;
    name << "scene_" << std::setw(5) << std::setfill('0') << i
         << (binary ? ".bin" : ".txt");
    const std::string file = name.str();
    const std::string full = (base / file).string();
    if (binary)
      save_scene_binary(scenes[i], full);
    else
      save_scene_text(scenes[i], full);
    manifest << file << '\n';
  }
  const std::string manifest_path = (base / "manifest.txt").string();
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot write manifest " + manifest_path);
  out << manifest.str();
  if (!out) throw IoError("failed writing manifest " + manifest_path);
  return manifest_path;
}

namespace {

void set_joint(Scene& s, int f, int j, double x, double y, double z) {
  s.set_coord(0, f, j, 0, x);
  s.set_coord(0, f, j, 1, y);
  s.set_coord(0, f, j, 2, z);
}

}  // namespace

// Joint layout (z up, meters): 0 pelvis, 1 spine, 2 chest, 3 neck, 4 head,
// 5/6/7 left shoulder/elbow/wrist, 8/9/10 right shoulder/elbow/wrist,
// 11/12 left knee/ankle, 13/14 right knee/ankle.
Scene make_walker(const WalkerParams& w, double fps, int frames) {
  Scene s = Scene::zeros(1, frames, 15, fps, "walker15");
  for (int f = 0; f < frames; ++f) {
    const double t = static_cast<double>(f) / fps;
    const double phi = 2.0 * std::numbers::pi * w.gait_hz * t + w.phase;
    const double fwd = w.speed * t;
    const double sway = 0.02 * std::sin(phi);
    const double bob = 0.02 * std::cos(2.0 * phi);
    const double px = fwd, py = sway, pz = w.hip_height + bob;

    set_joint(s, f, 0, px, py, pz);
    set_joint(s, f, 1, px, py * 0.6, pz + 0.20);
    set_joint(s, f, 2, px, py * 0.4, pz + 0.40);
    set_joint(s, f, 3, px, py * 0.3, pz + 0.55);
    set_joint(s, f, 4, px + 0.02 * std::sin(phi), py * 0.3, pz + 0.70);

    const double arm_l = w.arm * std::sin(phi + std::numbers::pi);
    const double arm_r = w.arm * std::sin(phi);
    set_joint(s, f, 5, px, py + 0.18, pz + 0.52);
    set_joint(s, f, 6, px + 0.5 * arm_l, py + 0.20, pz + 0.26);
    set_joint(s, f, 7, px + arm_l, py + 0.21, pz + 0.04);
    set_joint(s, f, 8, px, py - 0.18, pz + 0.52);
    set_joint(s, f, 9, px + 0.5 * arm_r, py - 0.20, pz + 0.26);
    set_joint(s, f, 10, px + arm_r, py - 0.21, pz + 0.04);

    const double leg_l = w.stride * std::sin(phi);
    const double leg_r = w.stride * std::sin(phi + std::numbers::pi);
    const double lift_l =
        0.25 * w.stride * std::max(0.0, std::sin(phi + 0.5 * std::numbers::pi));
    const double lift_r =
        0.25 * w.stride * std::max(0.0, std::sin(phi + 1.5 * std::numbers::pi));
    set_joint(s, f, 11, px + 0.5 * leg_l, py + 0.09, pz - 0.45);
    set_joint(s, f, 12, px + leg_l, py + 0.10, 0.05 + lift_l);
    set_joint(s, f, 13, px + 0.5 * leg_r, py - 0.09, pz - 0.45);
    set_joint(s, f, 14, px + leg_r, py - 0.10, 0.05 + lift_r);
  }
  return s;
}

namespace {

Scene resample(const Scene& src, double out_fps) {
  const int out_frames =
      static_cast<int>(std::floor(static_cast<double>(src.frames - 1) * out_fps / src.fps)) + 1;
  Scene out = Scene::zeros(src.persons, out_frames, src.joints, out_fps, src.skeleton_tag);
  for (int f = 0; f < out_frames; ++f) {
    const double pos = static_cast<double>(f) * src.fps / out_fps;
    int f0 = static_cast<int>(std::floor(pos));
    if (f0 > src.frames - 1) f0 = src.frames - 1;
    const int f1 = std::min(f0 + 1, src.frames - 1);
    const double w = pos - static_cast<double>(f0);
    for (int p = 0; p < src.persons; ++p)
      for (int j = 0; j < src.joints; ++j)
        for (int c = 0; c < 3; ++c)
          out.set_coord(p, f, j, c, (1.0 - w) * src.coord(p, f0, j, c) +
                                        w * src.coord(p, f1, j, c));
  }
  return out;
}

}  // namespace

std::vector<Scene> walker_templates(double fps, int frames) {
  if (!(fps > 0.0) || frames < 2) throw ContractError("walker templates need fps > 0, frames >= 2");
  const WalkerParams table[] = {
      {0.90, 1.00, 0.30, 0.25, 0.0, 0.95},
      {1.20, 1.20, 0.35, 0.30, 1.3, 1.00},
      {0.60, 0.90, 0.22, 0.18, 2.6, 0.90},
      {0.05, 0.70, 0.08, 0.10, 4.0, 0.97},
  };
  std::vector<Scene> out;
  for (const WalkerParams& w : table) out.push_back(make_walker(w, fps, frames));
  return out;
}

std::vector<Scene> synth_scenes(int count, std::uint64_t seed,
                                const std::vector<Scene>& templates, int persons,
                                double out_fps, int out_frames) {
  if (count < 1) throw ContractError("synth_scenes: count must be >= 1");
  if (persons < 1) throw ContractError("synth_scenes: persons must be >= 1");
  if (templates.empty()) throw ContractError("synth_scenes: no templates given");
  const int joints = templates.front().joints;
  for (const Scene& t : templates) {
    t.validate();
    if (t.persons != 1) throw ContractError("synth templates must be single-person clips");
    if (t.joints != joints) throw ContractError("synth templates disagree on joint count");
  }

  std::vector<Scene> resampled;
  resampled.reserve(templates.size());
  for (const Scene& t : templates) {
    Scene r = resample(t, out_fps);
    if (r.frames < out_frames)
      throw ContractError("template too short: " + std::to_string(r.frames) +
                          " frames after resampling, need " + std::to_string(out_frames));
    resampled.push_back(std::move(r));
  }

  std::vector<Scene> scenes;
  scenes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(i)));
    Scene scene = Scene::zeros(persons, out_frames, joints,
                               out_fps, resampled.front().skeleton_tag);
    for (int p = 0; p < persons; ++p) {
      const Scene& clip = resampled[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(resampled.size())))];
      const int max_start = clip.frames - out_frames;
      const int start = max_start > 0 ? rng.uniform_int(max_start + 1) : 0;
      const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double disc_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double disc_r = 2.0 * std::sqrt(rng.uniform());
      const double cx = disc_r * std::cos(disc_angle);
      const double cy = disc_r * std::sin(disc_angle);

      // Pivot on the first-frame hip so rotation changes heading, then place
      // that hip inside the disc.
      const int hip = skeleton_hip_index(clip.skeleton_tag);
      const double hx = clip.coord(0, start, hip, 0);
      const double hy = clip.coord(0, start, hip, 1);
      const double ct = std::cos(theta), st = std::sin(theta);
      for (int f = 0; f < out_frames; ++f)
        for (int j = 0; j < joints; ++j) {
          const double x = clip.coord(0, start + f, j, 0) - hx;
          const double y = clip.coord(0, start + f, j, 1) - hy;
          const double z = clip.coord(0, start + f, j, 2);
          scene.set_coord(p, f, j, 0, ct * x - st * y + cx);
          scene.set_coord(p, f, j, 1, st * x + ct * y + cy);
          scene.set_coord(p, f, j, 2, z);
        }
    }
    scene.validate();
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

std::vector<TrainWindow> window_split(const Scene& scene, int frames_in, int frames_out,
                                      int stride, int scene_id) {
  if (frames_in < 1 || frames_out < 1) throw ContractError("window sizes must be >= 1");
  if (stride < 1) throw ContractError("window stride must be >= 1");
  const int span = frames_in + frames_out;
  std::vector<TrainWindow> windows;
  for (int start = 0; start + span <= scene.frames; start += stride) {
    TrainWindow w;
    w.input = scene.slice(start, frames_in);
    w.target = scene.slice(start + frames_in, frames_out);
    w.scene_id = scene_id;
    w.start = start;
    windows.push_back(std::move(w));
  }
  return windows;
}

TrainWindow sample_window(const Scene& scene, int frames_in, int frames_out, Rng& rng,
                          int scene_id) {
  const int span = frames_in + frames_out;
  if (span > scene.frames)
    throw ContractError("scene has " + std::to_string(scene.frames) + " frames, window needs " +
                        std::to_string(span));
  const int start = rng.uniform_int(scene.frames - span + 1);
  TrainWindow w;
  w.input = scene.slice(start, frames_in);
  w.target = scene.slice(start + frames_in, frames_out);
  w.scene_id = scene_id;
  w.start = start;
  return w;
}

TrainWindow augment(const TrainWindow& w, Rng& rng, int vertical_axis) {
  const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
  std::vector<int> order(static_cast<std::size_t>(w.input.persons));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  TrainWindow out;
  out.input = permute_persons(rotate_about_axis(w.input, vertical_axis, theta), order);
  out.target = permute_persons(rotate_about_axis(w.target, vertical_axis, theta), order);
  out.scene_id = w.scene_id;
  out.start = w.start;
  return out;
}

}  // namespace empmp
