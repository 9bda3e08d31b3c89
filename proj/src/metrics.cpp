#include "empmp/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "empmp/error.hpp"

namespace empmp {

namespace {

void check_pair(const MotionSequence& pred, const MotionSequence& gt) {
  if (pred.joints != gt.joints || pred.persons != gt.persons || pred.frames != gt.frames)
    throw DimensionError("metric: prediction (J=" + std::to_string(pred.joints) + ", P=" +
                         std::to_string(pred.persons) + ", T=" + std::to_string(pred.frames) +
                         ") and target (J=" + std::to_string(gt.joints) + ", P=" +
                         std::to_string(gt.persons) + ", T=" + std::to_string(gt.frames) +
                         ") differ");
}

int frame_to_index(const MotionSequence& pred, int frame) {
  if (frame < 1 || frame > pred.frames)
    throw ContractError("metric frame " + std::to_string(frame) +
                        " outside 1.." + std::to_string(pred.frames));
  return frame - 1;
}

double joint_err(const MotionSequence& pred, const MotionSequence& gt, int j, int p, int t) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double d = pred.coord(c, j, p, t) - gt.coord(c, j, p, t);
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

double mpjpe_mm(const MotionSequence& pred, const MotionSequence& gt) {
  check_pair(pred, gt);
  double s = 0.0;
  for (int p = 0; p < pred.persons; ++p)
    for (int t = 0; t < pred.frames; ++t)
      for (int j = 0; j < pred.joints; ++j) s += joint_err(pred, gt, j, p, t);
  return 1000.0 * s /
         (static_cast<double>(pred.persons) * static_cast<double>(pred.frames) *
          static_cast<double>(pred.joints));
}

double vim_at_mm(const MotionSequence& pred, const MotionSequence& gt, int frame) {
  check_pair(pred, gt);
  const int t = frame_to_index(pred, frame);
  double s = 0.0;
  for (int p = 0; p < pred.persons; ++p) {
    double sq = 0.0;
    for (int j = 0; j < pred.joints; ++j)
      for (int c = 0; c < 3; ++c) {
        const double d = pred.coord(c, j, p, t) - gt.coord(c, j, p, t);
        sq += d * d;
      }
    s += std::sqrt(sq);
  }
  return 1000.0 * s / static_cast<double>(pred.persons);
}

double jpe_at_mm(const MotionSequence& pred, const MotionSequence& gt, int frame) {
  check_pair(pred, gt);
  const int t = frame_to_index(pred, frame);
  double s = 0.0;
  for (int p = 0; p < pred.persons; ++p)
    for (int j = 0; j < pred.joints; ++j) s += joint_err(pred, gt, j, p, t);
  return 1000.0 * s /
         (static_cast<double>(pred.persons) * static_cast<double>(pred.joints));
}

double ape_at_mm(const MotionSequence& pred, const MotionSequence& gt, int frame,
                 int hip_index) {
  check_pair(pred, gt);
  if (hip_index < 0 || hip_index >= pred.joints) throw ContractError("hip index out of range");
  const int t = frame_to_index(pred, frame);
  double s = 0.0;
  for (int p = 0; p < pred.persons; ++p) {
    const auto hp = pred.hip(p, t, hip_index);
    const auto hg = gt.hip(p, t, hip_index);
    for (int j = 0; j < pred.joints; ++j) {
      double sq = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double a = pred.coord(c, j, p, t) - hp[static_cast<std::size_t>(c)];
        const double b = gt.coord(c, j, p, t) - hg[static_cast<std::size_t>(c)];
        sq += (a - b) * (a - b);
      }
      s += std::sqrt(sq);
    }
  }
  return 1000.0 * s /
         (static_cast<double>(pred.persons) * static_cast<double>(pred.joints));
}

double fde_at_mm(const MotionSequence& pred, const MotionSequence& gt, int frame,
                 int hip_index) {
  check_pair(pred, gt);
  if (hip_index < 0 || hip_index >= pred.joints) throw ContractError("hip index out of range");
  const int t = frame_to_index(pred, frame);
  double s = 0.0;
  for (int p = 0; p < pred.persons; ++p) {
    const auto hp = pred.hip(p, t, hip_index);
    const auto hg = gt.hip(p, t, hip_index);
    double sq = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double d = hp[static_cast<std::size_t>(c)] - hg[static_cast<std::size_t>(c)];
      sq += d * d;
    }
    s += std::sqrt(sq);
  }
  return 1000.0 * s / static_cast<double>(pred.persons);
}

FrameScheme frame_scheme(const std::string& tag) {
  FrameScheme s;
  s.dataset_tag = tag;
  if (tag == "3dpw") {
    s.vim_frames = {2, 4, 8, 10, 14};
    s.jaf_frames = {7, 14};
  } else if (tag == "cmu-2s") {
    s.vim_frames = {2, 6, 11, 21, 30};
    s.jaf_frames = {10, 20, 30};
  } else if (tag == "cmu-1s") {
    s.vim_frames = {2, 4, 8, 10, 15};
    s.jaf_frames = {3, 9, 15};
  } else {
    throw ConfigError("unknown frame scheme '" + tag + "' (expected 3dpw, cmu-2s or cmu-1s)");
  }
  return s;
}

MetricReport evaluate(std::span<const MotionSequence> preds,
                      std::span<const MotionSequence> gts, const FrameScheme& scheme,
                      int hip_index) {
  if (preds.empty()) throw ContractError("evaluate: no sequences given");
  if (preds.size() != gts.size())
    throw ContractError("evaluate: " + std::to_string(preds.size()) + " predictions vs " +
                        std::to_string(gts.size()) + " targets");

  MetricReport r;
  r.dataset_tag = scheme.dataset_tag;
  r.sequences = static_cast<int>(preds.size());
  for (int f : scheme.vim_frames) r.vim.push_back({f, 0.0});
  for (int f : scheme.jaf_frames) {
    r.jpe.push_back({f, 0.0});
    r.ape.push_back({f, 0.0});
    r.fde.push_back({f, 0.0});
  }

  const double inv = 1.0 / static_cast<double>(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const MotionSequence& pred = preds[i];
    const MotionSequence& gt = gts[i];
    r.mpjpe_mm += inv * mpjpe_mm(pred, gt);
    for (std::size_t k = 0; k < r.vim.size(); ++k)
      r.vim[k].value_mm += inv * vim_at_mm(pred, gt, r.vim[k].frame);
    for (std::size_t k = 0; k < r.jpe.size(); ++k) {
      const int f = r.jpe[k].frame;
      r.jpe[k].value_mm += inv * jpe_at_mm(pred, gt, f);
      r.ape[k].value_mm += inv * ape_at_mm(pred, gt, f, hip_index);
      r.fde[k].value_mm += inv * fde_at_mm(pred, gt, f, hip_index);
    }
  }

  auto mean_of = [](const std::vector<FrameValue>& v) {
    double s = 0.0;
    for (const FrameValue& fv : v) s += fv.value_mm;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  r.vim_avg_mm = mean_of(r.vim);
  r.jpe_avg_mm = mean_of(r.jpe);
  r.ape_avg_mm = mean_of(r.ape);
  r.fde_avg_mm = mean_of(r.fde);
  return r;
}

namespace {

void write_rows(std::ostream& out, const char* metric, const std::vector<FrameValue>& v,
                double avg) {
  for (const FrameValue& fv : v)
    out << metric << ',' << fv.frame << ',' << fv.value_mm << '\n';
  if (!v.empty()) out << metric << ",avg," << avg << '\n';
}

}  // namespace

void write_report_csv(const MetricReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report to " + path);
  out << std::setprecision(17);
  out << "# dataset=" << report.dataset_tag << " sequences=" << report.sequences << '\n';
  out << "metric,frame,value_mm\n";
  out << "mpjpe,all," << report.mpjpe_mm << '\n';
  write_rows(out, "vim", report.vim, report.vim_avg_mm);
  write_rows(out, "jpe", report.jpe, report.jpe_avg_mm);
  write_rows(out, "ape", report.ape, report.ape_avg_mm);
  write_rows(out, "fde", report.fde, report.fde_avg_mm);
  if (!out) throw IoError("failed writing report to " + path);
}

void write_report_json(const MetricReport& report, const std::string& path) {
  nlohmann::json j;
  j["dataset"] = report.dataset_tag;
  j["sequences"] = report.sequences;
  j["mpjpe_mm"] = report.mpjpe_mm;
  auto fill = [](const std::vector<FrameValue>& v, double avg) {
    nlohmann::json m;
    for (const FrameValue& fv : v) m[std::to_string(fv.frame)] = fv.value_mm;
    if (!v.empty()) m["avg"] = avg;
    return m;
  };
  j["vim_mm"] = fill(report.vim, report.vim_avg_mm);
  j["jpe_mm"] = fill(report.jpe, report.jpe_avg_mm);
  j["ape_mm"] = fill(report.ape, report.ape_avg_mm);
  j["fde_mm"] = fill(report.fde, report.fde_avg_mm);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report to " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing report to " + path);
}

MetricReport read_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read report from " + path);
  MetricReport r;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto dpos = line.find("dataset=");
      if (dpos != std::string::npos) {
        const auto end = line.find(' ', dpos);
        r.dataset_tag = line.substr(dpos + 8, end - dpos - 8);
      }
      const auto spos = line.find("sequences=");
      if (spos != std::string::npos) r.sequences = std::stoi(line.substr(spos + 10));
      continue;
    }
    if (line.rfind("metric,", 0) == 0) continue;
    std::istringstream row(line);
    std::string metric, frame, value;
    if (!std::getline(row, metric, ',') || !std::getline(row, frame, ',') ||
        !std::getline(row, value))
      throw ParseError("malformed report row: " + line);
    double v = 0.0;
    try {
      v = std::stod(value);
    } catch (const std::exception&) {
      throw ParseError("malformed report value: " + line);
    }
    if (metric == "mpjpe") {
      r.mpjpe_mm = v;
    } else {
      std::vector<FrameValue>* list = nullptr;
      double* avg = nullptr;
      if (metric == "vim") {
        list = &r.vim;
        avg = &r.vim_avg_mm;
      } else if (metric == "jpe") {
        list = &r.jpe;
        avg = &r.jpe_avg_mm;
      } else if (metric == "ape") {
        list = &r.ape;
        avg = &r.ape_avg_mm;
      } else if (metric == "fde") {
        list = &r.fde;
        avg = &r.fde_avg_mm;
      } else {
        throw ParseError("unknown metric in report: " + metric);
      }
      if (frame == "avg")
        *avg = v;
      else
        list->push_back({std::stoi(frame), v});
    }
  }
  return r;
}

}  // namespace empmp
