#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "empmp/metrics.hpp"
#include "empmp/motion.hpp"
#include "empmp/rng.hpp"

using namespace empmp;

namespace {

MotionSequence random_motion(int joints, int persons, int frames, Rng& rng) {
  MotionSequence m = MotionSequence::zeros(joints, persons, frames);
  for (double& v : m.data.values_mut()) v = rng.uniform(-2.0, 2.0);
  return m;
}

double joint_err(const MotionSequence& a, const MotionSequence& b, int j, int p, int t) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double d = a.coord(c, j, p, t) - b.coord(c, j, p, t);
    s += d * d;
  }
  return std::sqrt(s);
}

struct TempPath {
  std::string path;
  explicit TempPath(const std::string& name)
      : path("/tmp/empmp_metrics_" + name + "_" + std::to_string(::getpid())) {}
  ~TempPath() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE("metrics") {

  TEST_CASE("a 3-4-5 offset scores exactly five thousand millimeters") {
    Rng rng(1);
    MotionSequence gt = random_motion(5, 2, 4, rng);
    MotionSequence pred = translate(gt, {3.0, 0.0, 4.0});
    CHECK(mpjpe_mm(pred, gt) == doctest::Approx(5000.0).epsilon(1e-12));
    CHECK(jpe_at_mm(pred, gt, 2) == doctest::Approx(5000.0).epsilon(1e-12));
    // pose alignment removes the shared offset entirely
    CHECK(ape_at_mm(pred, gt, 2, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fde_at_mm(pred, gt, 2, 0) == doctest::Approx(5000.0).epsilon(1e-12));
  }

  TEST_CASE("the whole-pose frame metric accumulates before the root") {
    Rng rng(2);
    MotionSequence gt = random_motion(4, 1, 3, rng);
    MotionSequence pred = translate(gt, {1.0, 2.0, 2.0});
    // four joints, each squared error 9 -> sqrt(36) meters
    for (int f = 1; f <= 3; ++f)
      CHECK(vim_at_mm(pred, gt, f) == doctest::Approx(6000.0).epsilon(1e-12));
  }

  TEST_CASE("metric frames are one-based") {
    Rng rng(3);
    MotionSequence gt = random_motion(3, 2, 4, rng);
    MotionSequence pred = MotionSequence::from_tensor(3, gt.data.deep_copy());
    pred.set_coord(0, 1, 0, 0, pred.coord(0, 1, 0, 0) + 0.5);  // frame index 0 only
    CHECK(vim_at_mm(pred, gt, 1) > 0.0);
    CHECK(vim_at_mm(pred, gt, 2) == 0.0);
    CHECK_THROWS_AS(vim_at_mm(pred, gt, 0), ContractError);
    CHECK_THROWS_AS(vim_at_mm(pred, gt, 5), ContractError);
    CHECK_THROWS_AS(ape_at_mm(pred, gt, 1, 3), ContractError);
    CHECK_THROWS_AS(fde_at_mm(pred, gt, 1, -1), ContractError);
  }

  TEST_CASE("all five metrics match brute-force loops on random pairs") {
    Rng rng(4);
    for (int rep = 0; rep < 40; ++rep) {
      const int joints = 2 + rng.uniform_int(4);
      const int persons = 1 + rng.uniform_int(3);
      const int frames = 2 + rng.uniform_int(5);
      const int hip = rng.uniform_int(joints);
      const int frame = 1 + rng.uniform_int(frames);
      const int t = frame - 1;
      MotionSequence pred = random_motion(joints, persons, frames, rng);
      MotionSequence gt = random_motion(joints, persons, frames, rng);

      double mp = 0.0;
      for (int p = 0; p < persons; ++p)
        for (int f = 0; f < frames; ++f)
          for (int j = 0; j < joints; ++j) mp += joint_err(pred, gt, j, p, f);
      mp *= 1000.0 / (persons * frames * joints);
      CHECK(mpjpe_mm(pred, gt) == doctest::Approx(mp).epsilon(1e-9));

      double vim = 0.0;
      for (int p = 0; p < persons; ++p) {
        double sq = 0.0;
        for (int j = 0; j < joints; ++j)
          for (int c = 0; c < 3; ++c) {
            const double d = pred.coord(c, j, p, t) - gt.coord(c, j, p, t);
            sq += d * d;
          }
        vim += std::sqrt(sq);
      }
      vim *= 1000.0 / persons;
      CHECK(vim_at_mm(pred, gt, frame) == doctest::Approx(vim).epsilon(1e-9));

      double jpe = 0.0;
      for (int p = 0; p < persons; ++p)
        for (int j = 0; j < joints; ++j) jpe += joint_err(pred, gt, j, p, t);
      jpe *= 1000.0 / (persons * joints);
      CHECK(jpe_at_mm(pred, gt, frame) == doctest::Approx(jpe).epsilon(1e-9));

      double ape = 0.0;
      for (int p = 0; p < persons; ++p)
        for (int j = 0; j < joints; ++j) {
          double sq = 0.0;
          for (int c = 0; c < 3; ++c) {
            const double a = pred.coord(c, j, p, t) - pred.coord(c, hip, p, t);
            const double b = gt.coord(c, j, p, t) - gt.coord(c, hip, p, t);
            sq += (a - b) * (a - b);
          }
          ape += std::sqrt(sq);
        }
      ape *= 1000.0 / (persons * joints);
      CHECK(ape_at_mm(pred, gt, frame, hip) == doctest::Approx(ape).epsilon(1e-9));

      // final displacement: literal mean over persons of the hip error
      double fde = 0.0;
      for (int p = 0; p < persons; ++p) {
        double sq = 0.0;
        for (int c = 0; c < 3; ++c) {
          const double d = pred.coord(c, hip, p, t) - gt.coord(c, hip, p, t);
          sq += d * d;
        }
        fde += std::sqrt(sq);
      }
      fde *= 1000.0 / persons;
      CHECK(std::fabs(fde_at_mm(pred, gt, frame, hip) - fde) <= 1e-12 * (1.0 + fde));
    }
  }

  TEST_CASE("pose alignment ignores a per-sequence translation") {
    Rng rng(5);
    MotionSequence gt = random_motion(5, 3, 4, rng);
    MotionSequence pred = random_motion(5, 3, 4, rng);
    const double base = ape_at_mm(pred, gt, 3, 1);
    const double moved = ape_at_mm(translate(pred, {0.7, -1.1, 0.4}), gt, 3, 1);
    CHECK(moved == doctest::Approx(base).epsilon(1e-9));
    CHECK(jpe_at_mm(translate(pred, {0.7, -1.1, 0.4}), gt, 3) !=
          doctest::Approx(jpe_at_mm(pred, gt, 3)).epsilon(1e-6));
  }

  TEST_CASE("mismatched sequences are rejected") {
    Rng rng(6);
    MotionSequence a = random_motion(3, 2, 4, rng);
    MotionSequence b = random_motion(3, 2, 5, rng);
    MotionSequence c = random_motion(4, 2, 4, rng);
    CHECK_THROWS_AS(mpjpe_mm(a, b), DimensionError);
    CHECK_THROWS_AS(vim_at_mm(a, c, 1), DimensionError);
  }

  TEST_CASE("benchmark frame tables are pinned") {
    const FrameScheme pw = frame_scheme("3dpw");
    CHECK(pw.vim_frames == std::vector<int>{2, 4, 8, 10, 14});
    CHECK(pw.jaf_frames == std::vector<int>{7, 14});
    const FrameScheme c2 = frame_scheme("cmu-2s");
    CHECK(c2.vim_frames == std::vector<int>{2, 6, 11, 21, 30});
    CHECK(c2.jaf_frames == std::vector<int>{10, 20, 30});
    const FrameScheme c1 = frame_scheme("cmu-1s");
    CHECK(c1.vim_frames == std::vector<int>{2, 4, 8, 10, 15});
    CHECK(c1.jaf_frames == std::vector<int>{3, 9, 15});
    CHECK_THROWS_AS(frame_scheme("h36m"), ConfigError);
  }

  TEST_CASE("evaluation averages the per-pair metrics") {
    Rng rng(7);
    std::vector<MotionSequence> preds, gts;
    for (int i = 0; i < 3; ++i) {
      preds.push_back(random_motion(4, 2, 15, rng));
      gts.push_back(random_motion(4, 2, 15, rng));
    }
    const FrameScheme scheme = frame_scheme("cmu-1s");
    MetricReport r = evaluate(preds, gts, scheme, 0);
    CHECK(r.dataset_tag == "cmu-1s");
    CHECK(r.sequences == 3);
    REQUIRE(r.vim.size() == scheme.vim_frames.size());
    REQUIRE(r.jpe.size() == scheme.jaf_frames.size());

    double mp = 0.0;
    for (int i = 0; i < 3; ++i) mp += mpjpe_mm(preds[i], gts[i]);
    CHECK(r.mpjpe_mm == doctest::Approx(mp / 3.0).epsilon(1e-12));

    for (std::size_t k = 0; k < r.vim.size(); ++k) {
      CHECK(r.vim[k].frame == scheme.vim_frames[k]);
      double v = 0.0;
      for (int i = 0; i < 3; ++i) v += vim_at_mm(preds[i], gts[i], r.vim[k].frame);
      CHECK(r.vim[k].value_mm == doctest::Approx(v / 3.0).epsilon(1e-12));
    }
    double vim_avg = 0.0;
    for (const FrameValue& fv : r.vim) vim_avg += fv.value_mm;
    CHECK(r.vim_avg_mm == doctest::Approx(vim_avg / r.vim.size()).epsilon(1e-12));

    for (std::size_t k = 0; k < r.fde.size(); ++k) {
      double v = 0.0;
      for (int i = 0; i < 3; ++i) v += fde_at_mm(preds[i], gts[i], r.fde[k].frame, 0);
      CHECK(r.fde[k].value_mm == doctest::Approx(v / 3.0).epsilon(1e-12));
    }

    std::vector<MotionSequence> fewer(preds.begin(), preds.begin() + 2);
    CHECK_THROWS_AS(evaluate(fewer, gts, scheme, 0), ContractError);
    CHECK_THROWS_AS(evaluate(std::vector<MotionSequence>{},
                             std::vector<MotionSequence>{}, scheme, 0),
                    ContractError);
  }

  TEST_CASE("csv reports round-trip exactly") {
    Rng rng(8);
    std::vector<MotionSequence> preds{random_motion(4, 2, 15, rng)};
    std::vector<MotionSequence> gts{random_motion(4, 2, 15, rng)};
    MetricReport r = evaluate(preds, gts, frame_scheme("cmu-1s"), 0);

    TempPath tmp("report.csv");
    write_report_csv(r, tmp.path);
    MetricReport back = read_report_csv(tmp.path);
    CHECK(back.dataset_tag == r.dataset_tag);
    CHECK(back.sequences == r.sequences);
    CHECK(back.mpjpe_mm == r.mpjpe_mm);
    REQUIRE(back.vim.size() == r.vim.size());
    for (std::size_t k = 0; k < r.vim.size(); ++k) {
      CHECK(back.vim[k].frame == r.vim[k].frame);
      CHECK(back.vim[k].value_mm == r.vim[k].value_mm);
    }
    CHECK(back.vim_avg_mm == r.vim_avg_mm);
    CHECK(back.jpe_avg_mm == r.jpe_avg_mm);
    CHECK(back.ape_avg_mm == r.ape_avg_mm);
    CHECK(back.fde_avg_mm == r.fde_avg_mm);

    CHECK_THROWS_AS(read_report_csv("/nonexistent/report.csv"), IoError);
  }

  TEST_CASE("json reports carry the same numbers") {
    Rng rng(9);
    std::vector<MotionSequence> preds{random_motion(4, 2, 14, rng)};
    std::vector<MotionSequence> gts{random_motion(4, 2, 14, rng)};
    MetricReport r = evaluate(preds, gts, frame_scheme("3dpw"), 0);

    TempPath tmp("report.json");
    write_report_json(r, tmp.path);
    std::ifstream in(tmp.path);
    REQUIRE(in.good());
    nlohmann::json j;
    in >> j;
    CHECK(j["dataset"] == "3dpw");
    CHECK(j["sequences"] == 1);
    CHECK(j["mpjpe_mm"].get<double>() == doctest::Approx(r.mpjpe_mm).epsilon(1e-12));
    CHECK(j["vim_mm"]["14"].get<double>() ==
          doctest::Approx(r.vim.back().value_mm).epsilon(1e-12));
    CHECK(j["fde_mm"]["avg"].get<double>() ==
          doctest::Approx(r.fde_avg_mm).epsilon(1e-12));
  }
}
