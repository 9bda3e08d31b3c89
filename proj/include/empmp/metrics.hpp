#pragma once

#include <span>
#include <string>
#include <vector>

#include "empmp/motion.hpp"

namespace empmp {

// All metrics take sequences in meters and report millimeters. Frame
// arguments are 1-based prediction-frame indices.

// Mean per-joint position error over all persons, frames and joints.
double mpjpe_mm(const MotionSequence& pred, const MotionSequence& gt);

// Per-person root of the summed squared error over all joint coordinates at
// one frame, averaged over persons.
double vim_at_mm(const MotionSequence& pred, const MotionSequence& gt, int frame);

// Mean joint position error at one frame.
double jpe_at_mm(const MotionSequence& pred, const MotionSequence& gt, int frame);

// Same as JPE after subtracting each person's hip from its joints (aligned
// pose error).
double ape_at_mm(const MotionSequence& pred, const MotionSequence& gt, int frame,
                 int hip_index);

// Final displacement error: mean over persons of the hip position error at
// one frame.
double fde_at_mm(const MotionSequence& pred, const MotionSequence& gt, int frame,
                 int hip_index);

// Which frames each benchmark reports (1-based).
struct FrameScheme {
  std::string dataset_tag;
  std::vector<int> vim_frames;
  std::vector<int> jaf_frames;  // JPE / APE / FDE frames
};

// Known tags: "3dpw", "cmu-2s", "cmu-1s".
FrameScheme frame_scheme(const std::string& tag);

struct FrameValue {
  int frame = 0;
  double value_mm = 0.0;
};

struct MetricReport {
  std::string dataset_tag;
  int sequences = 0;
  double mpjpe_mm = 0.0;
  std::vector<FrameValue> vim, jpe, ape, fde;
  double vim_avg_mm = 0.0, jpe_avg_mm = 0.0, ape_avg_mm = 0.0, fde_avg_mm = 0.0;
};

// Mean metrics over matched prediction/target pairs. Pairs must agree in
// shape; the scheme's frames must fit the sequences.
MetricReport evaluate(std::span<const MotionSequence> preds,
                      std::span<const MotionSequence> gts, const FrameScheme& scheme,
                      int hip_index);

void write_report_csv(const MetricReport& report, const std::string& path);
void write_report_json(const MetricReport& report, const std::string& path);
MetricReport read_report_csv(const std::string& path);

}  // namespace empmp
