#pragma once

#include <string>
#include <vector>

#include "empmp/motion.hpp"
#include "empmp/rng.hpp"

namespace empmp {

// A recorded or synthesized multi-person clip in meters. Coordinates are laid
// out (person, frame, joint, xyz) row-major.
struct Scene {
  int persons = 0;  // P
  int frames = 0;   // F
  int joints = 0;   // J
  double fps = 0.0;
  std::string skeleton_tag;
  std::vector<double> coords;  // P * F * J * 3

  static Scene zeros(int persons, int frames, int joints, double fps, std::string tag);
  double coord(int person, int frame, int joint, int axis) const;
  void set_coord(int person, int frame, int joint, int axis, double value);
  void validate() const;

  // Frames [start, start + count) as a (3J, P, count) motion sequence.
  MotionSequence slice(int start, int count) const;
};

// Hip joint index for a known skeleton tag; unknown tags default to joint 0.
int skeleton_hip_index(const std::string& tag);

// Text format: header "EMPMP-SCENE v1 P=<p> F=<f> J=<j> FPS=<fps> TAG=<tag>"
// followed by P*F*J lines "p f j x y z" (full f64 precision). The binary
// variant (".bin" suffix convention) has the same header line followed by the
// coordinates as little-endian f32, person-major. See docs/FORMATS.md.
void save_scene_text(const Scene& scene, const std::string& path);
void save_scene_binary(const Scene& scene, const std::string& path);
Scene load_scene(const std::string& path);

// A manifest lists one scene path per line, relative to its own directory.
std::vector<Scene> load_manifest(const std::string& manifest_path);
// Writes scenes plus a manifest into dir; returns the manifest path.
std::string save_scene_set(const std::vector<Scene>& scenes, const std::string& dir,
                           bool binary = false);

// Gait parameters of the procedural walker (skeleton "walker15", 15 joints,
// hip joint 0, z up).
struct WalkerParams {
  double speed = 0.9;        // m/s along +x
  double gait_hz = 1.0;      // stride cycles per second
  double stride = 0.3;       // ankle swing amplitude
  double arm = 0.25;         // wrist swing amplitude
  double phase = 0.0;        // initial gait phase
  double hip_height = 0.95;  // pelvis z
};

// One single-person walking clip driven by sinusoidal gait curves.
Scene make_walker(const WalkerParams& params, double fps, int frames);

// Four stock walkers used as default synthesis templates.
std::vector<Scene> walker_templates(double fps = 30.0, int frames = 240);

// Deterministic multi-person scene synthesis: each scene picks templates,
// random heading rotations and planar offsets within a 2 m disc, resamples to
// out_fps and crops to out_frames.
std::vector<Scene> synth_scenes(int count, std::uint64_t seed,
                                const std::vector<Scene>& templates, int persons = 3,
                                double out_fps = 15.0, int out_frames = 60);

// One training example: T input frames and the following T' target frames.
struct TrainWindow {
  MotionSequence input;
  MotionSequence target;
  int scene_id = 0;
  int start = 0;
};

// Deterministic enumeration at the given stride.
std::vector<TrainWindow> window_split(const Scene& scene, int frames_in, int frames_out,
                                      int stride, int scene_id = 0);
// Uniformly random start index.
TrainWindow sample_window(const Scene& scene, int frames_in, int frames_out, Rng& rng,
                          int scene_id = 0);

// Random rotation about the vertical axis plus a random person permutation,
// applied identically to input and target.
TrainWindow augment(const TrainWindow& w, Rng& rng, int vertical_axis = 2);

}  // namespace empmp
