#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "empmp/scene.hpp"

using namespace empmp;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("empmp_scene_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

Scene random_scene(int persons, int frames, int joints, Rng& rng) {
  Scene s = Scene::zeros(persons, frames, joints, 15.0, "walker15");
  for (double& v : s.coords) v = rng.uniform(-3.0, 3.0);
  return s;
}

}  // namespace

TEST_SUITE("scene") {

  TEST_CASE("coordinate accessors address person, frame, joint, axis") {
    Scene s = Scene::zeros(2, 3, 4, 30.0, "walker15");
    CHECK(s.coords.size() == 2u * 3u * 4u * 3u);
    s.set_coord(1, 2, 3, 0, 7.0);
    CHECK(s.coord(1, 2, 3, 0) == 7.0);
    CHECK(s.coord(0, 0, 0, 0) == 0.0);
    // flat layout is person-major, then frame, joint, axis
    CHECK(s.coords[((1 * 3 + 2) * 4 + 3) * 3 + 0] == 7.0);
    CHECK_THROWS_AS(s.coord(2, 0, 0, 0), DimensionError);
    CHECK_THROWS_AS(s.coord(0, 3, 0, 0), DimensionError);
    CHECK_THROWS_AS(s.coord(0, 0, 4, 0), DimensionError);
    CHECK_THROWS_AS(s.coord(0, 0, 0, 3), DimensionError);
  }

  TEST_CASE("validation checks dimensions, size and finiteness") {
    Scene s = Scene::zeros(1, 2, 3, 15.0, "tag");
    CHECK_NOTHROW(s.validate());
    s.coords.push_back(0.0);
    CHECK_THROWS_AS(s.validate(), ContractError);
    s.coords.pop_back();
    s.coords[0] = std::nan("");
    CHECK_THROWS_AS(s.validate(), NumericError);
    s.coords[0] = 0.0;
    s.fps = 0.0;
    CHECK_THROWS_AS(s.validate(), ContractError);
    CHECK_THROWS_AS(Scene::zeros(0, 2, 3, 15.0, "t"), ContractError);
  }

  TEST_CASE("slices are (3J, P, count) views of a frame range") {
    Rng rng(21);
    Scene s = random_scene(2, 6, 3, rng);
    MotionSequence m = s.slice(2, 3);
    CHECK(m.joints == 3);
    CHECK(m.persons == 2);
    CHECK(m.frames == 3);
    for (int p = 0; p < 2; ++p)
      for (int t = 0; t < 3; ++t)
        for (int j = 0; j < 3; ++j)
          for (int c = 0; c < 3; ++c)
            CHECK(m.coord(c, j, p, t) == s.coord(p, 2 + t, j, c));
    CHECK_THROWS_AS(s.slice(4, 3), ContractError);
    CHECK_THROWS_AS(s.slice(-1, 2), ContractError);
    CHECK_THROWS_AS(s.slice(0, 0), ContractError);
  }

  TEST_CASE("hip lookup knows the walker skeleton and defaults to joint 0") {
    CHECK(skeleton_hip_index("walker15") == 0);
    CHECK(skeleton_hip_index("something-else") == 0);
  }

  TEST_CASE("text scenes round-trip every double exactly") {
    Rng rng(22);
    Scene s = random_scene(2, 4, 3, rng);
    s.coords[0] = 1.0 / 3.0;
    s.coords[1] = -0.1;
    s.coords[2] = 1e-17;
    TempDir tmp;
    const std::string path = tmp.file("scene.txt");
    save_scene_text(s, path);
    Scene back = load_scene(path);
    CHECK(back.persons == s.persons);
    CHECK(back.frames == s.frames);
    CHECK(back.joints == s.joints);
    CHECK(back.fps == s.fps);
    CHECK(back.skeleton_tag == s.skeleton_tag);
    REQUIRE(back.coords.size() == s.coords.size());
    std::size_t diffs = 0;
    for (std::size_t i = 0; i < s.coords.size(); ++i)
      if (back.coords[i] != s.coords[i]) ++diffs;
    CHECK(diffs == 0);
  }

  TEST_CASE("binary scenes round-trip at single precision") {
    Rng rng(23);
    Scene s = random_scene(3, 5, 4, rng);
    TempDir tmp;
    const std::string path = tmp.file("scene.bin");
    save_scene_binary(s, path);
    Scene back = load_scene(path);
    CHECK(back.fps == s.fps);
    REQUIRE(back.coords.size() == s.coords.size());
    for (std::size_t i = 0; i < s.coords.size(); ++i)
      CHECK(back.coords[i] == static_cast<double>(static_cast<float>(s.coords[i])));

    const std::string text_path = tmp.file("scene.txt");
    save_scene_text(s, text_path);
    CHECK(std::filesystem::file_size(path) < std::filesystem::file_size(text_path));
  }

  TEST_CASE("malformed scene files are rejected with parse errors") {
    TempDir tmp;
    CHECK_THROWS_AS(load_scene(tmp.file("missing.txt")), IoError);

    auto write = [&](const std::string& name, const std::string& content) {
      std::ofstream out(tmp.file(name));
      out << content;
      return tmp.file(name);
    };
    CHECK_THROWS_AS(load_scene(write("empty.txt", "")), ParseError);
    CHECK_THROWS_AS(load_scene(write("magic.txt", "NOT-A-SCENE v1 P=1 F=1 J=1 FPS=15\n")),
                    ParseError);
    CHECK_THROWS_AS(load_scene(write("nofps.txt", "EMPMP-SCENE v1 P=1 F=1 J=1\n")),
                    ParseError);
    CHECK_THROWS_AS(
        load_scene(write("short.txt", "EMPMP-SCENE v1 P=1 F=2 J=1 FPS=15 TAG=t\n"
                                      "0 0 0 1 2 3\n")),
        ParseError);
    CHECK_THROWS_AS(
        load_scene(write("order.txt", "EMPMP-SCENE v1 P=1 F=2 J=1 FPS=15 TAG=t\n"
                                      "0 1 0 1 2 3\n"
                                      "0 0 0 1 2 3\n")),
        ParseError);
    CHECK_THROWS_AS(
        load_scene(write("trail.txt", "EMPMP-SCENE v1 P=1 F=1 J=1 FPS=15 TAG=t\n"
                                      "0 0 0 1 2 3\n"
                                      "0 0 0 1 2 3\n")),
        ParseError);

    // binary with a truncated payload
    Scene s = Scene::zeros(1, 2, 2, 15.0, "t");
    const std::string bin = tmp.file("trunc.bin");
    save_scene_binary(s, bin);
    std::filesystem::resize_file(bin, std::filesystem::file_size(bin) - 4);
    CHECK_THROWS_AS(load_scene(bin), ParseError);
  }

  TEST_CASE("scene sets write a manifest that loads back in order") {
    Rng rng(24);
    std::vector<Scene> scenes;
    for (int i = 0; i < 3; ++i) scenes.push_back(random_scene(2, 4, 3, rng));

    for (bool binary : {false, true}) {
      CAPTURE(binary);
      TempDir tmp;
      const std::string manifest = save_scene_set(scenes, tmp.file("data"), binary);
      std::vector<Scene> back = load_manifest(manifest);
      REQUIRE(back.size() == scenes.size());
      for (std::size_t i = 0; i < scenes.size(); ++i) {
        CHECK(back[i].persons == scenes[i].persons);
        double worst = 0.0;
        for (std::size_t k = 0; k < scenes[i].coords.size(); ++k)
          worst = std::max(worst, std::fabs(back[i].coords[k] - scenes[i].coords[k]));
        if (binary)
          CHECK(worst <= 1e-6);  // f32 payload
        else
          CHECK(worst == 0.0);
      }
    }

    CHECK_THROWS_AS(save_scene_set({}, "/tmp/unused", false), ContractError);
    CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.txt"), IoError);

    TempDir tmp;
    std::ofstream out(tmp.file("manifest.txt"));
    out << "# only a comment\n";
    out.close();
    CHECK_THROWS_AS(load_manifest(tmp.file("manifest.txt")), ParseError);
  }

  TEST_CASE("window enumeration counts and offsets are exact") {
    Rng rng(25);
    Scene s = random_scene(3, 60, 4, rng);

    std::vector<TrainWindow> one = window_split(s, 30, 30, 30, 9);
    REQUIRE(one.size() == 1);
    CHECK(one[0].scene_id == 9);
    CHECK(one[0].start == 0);

    std::vector<TrainWindow> dense = window_split(s, 15, 15, 1);
    CHECK(dense.size() == 31);
    for (std::size_t i = 0; i < dense.size(); ++i)
      CHECK(dense[i].start == static_cast<int>(i));

    const TrainWindow& w = dense[4];
    CHECK(w.input.frames == 15);
    CHECK(w.target.frames == 15);
    for (int t = 0; t < 15; ++t) {
      CHECK(w.input.coord(0, 2, 1, t) == s.coord(1, 4 + t, 2, 0));
      CHECK(w.target.coord(0, 2, 1, t) == s.coord(1, 19 + t, 2, 0));
    }

    CHECK(window_split(s, 31, 30, 1).empty());
    CHECK_THROWS_AS(window_split(s, 0, 30, 1), ContractError);
    CHECK_THROWS_AS(window_split(s, 30, 30, 0), ContractError);
  }

  TEST_CASE("random window sampling stays in range and is seed-deterministic") {
    Rng rng(26);
    Scene s = random_scene(2, 40, 3, rng);
    Rng a(7), b(7);
    for (int i = 0; i < 20; ++i) {
      TrainWindow wa = sample_window(s, 10, 5, a);
      TrainWindow wb = sample_window(s, 10, 5, b);
      CHECK(wa.start == wb.start);
      CHECK(wa.start >= 0);
      CHECK(wa.start <= 25);
    }
    Scene tiny = random_scene(1, 10, 3, rng);
    CHECK_THROWS_AS(sample_window(tiny, 8, 3, a), ContractError);
  }

  TEST_CASE("the procedural walker obeys its parameters") {
    WalkerParams w;
    w.speed = 1.1;
    w.gait_hz = 0.9;
    w.stride = 0.2;
    w.hip_height = 0.93;
    Scene s = make_walker(w, 30.0, 61);
    CHECK(s.persons == 1);
    CHECK(s.joints == 15);
    CHECK(s.skeleton_tag == "walker15");
    CHECK(s.fps == 30.0);

    // hip advances at the configured speed; frame 30 is exactly t = 1 s
    CHECK(s.coord(0, 30, 0, 0) == doctest::Approx(1.1).epsilon(1e-12));
    for (int f = 0; f < s.frames; ++f) {
      CHECK(std::fabs(s.coord(0, f, 0, 2) - w.hip_height) <= 0.02 + 1e-12);
      // ankles stay on or above the ground plane
      CHECK(s.coord(0, f, 12, 2) >= 0.05 - 1e-12);
      CHECK(s.coord(0, f, 14, 2) >= 0.05 - 1e-12);
      CHECK(s.coord(0, f, 12, 2) <= 0.05 + 0.25 * w.stride + 1e-12);
    }

    // deterministic: same parameters, same clip
    Scene again = make_walker(w, 30.0, 61);
    CHECK(std::equal(s.coords.begin(), s.coords.end(), again.coords.begin()));
  }

  TEST_CASE("stock templates are four valid single-person walkers") {
    std::vector<Scene> t = walker_templates();
    REQUIRE(t.size() == 4);
    for (const Scene& s : t) {
      CHECK_NOTHROW(s.validate());
      CHECK(s.persons == 1);
      CHECK(s.frames == 240);
      CHECK(s.fps == 30.0);
      CHECK(s.joints == 15);
    }
    CHECK_THROWS_AS(walker_templates(0.0, 240), ContractError);
    CHECK_THROWS_AS(walker_templates(30.0, 1), ContractError);
  }

  TEST_CASE("scene synthesis is a pure function of the seed") {
    std::vector<Scene> t = walker_templates();
    std::vector<Scene> a = synth_scenes(3, 5, t, 3, 15.0, 60);
    std::vector<Scene> b = synth_scenes(3, 5, t, 3, 15.0, 60);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].persons == 3);
      CHECK(a[i].frames == 60);
      CHECK(a[i].fps == 15.0);
      CHECK(std::equal(a[i].coords.begin(), a[i].coords.end(), b[i].coords.begin()));
      for (std::size_t k = 2; k < a[i].coords.size(); k += 3) {
        CHECK(a[i].coords[k] >= 0.0);  // z stays above ground
        CHECK(a[i].coords[k] <= 2.0);
      }
    }
    std::vector<Scene> c = synth_scenes(3, 6, t, 3, 15.0, 60);
    bool differs = false;
    for (std::size_t k = 0; k < a[0].coords.size(); ++k)
      differs |= (a[0].coords[k] != c[0].coords[k]);
    CHECK(differs);

    CHECK_THROWS_AS(synth_scenes(0, 5, t), ContractError);
    CHECK_THROWS_AS(synth_scenes(2, 5, {}), ContractError);
    CHECK_THROWS_AS(synth_scenes(2, 5, t, 0), ContractError);
    CHECK_THROWS_AS(synth_scenes(2, 5, t, 3, 15.0, 1000), ContractError);
  }

  TEST_CASE("augmentation applies one rigid transform to input and target") {
    Rng rng(27);
    Scene s = random_scene(3, 30, 4, rng);
    TrainWindow w;
    w.input = s.slice(0, 10);
    w.target = s.slice(10, 10);
    w.scene_id = 3;
    w.start = 0;

    Rng aug_rng(99);
    TrainWindow out = augment(w, aug_rng);
    CHECK(out.scene_id == 3);
    CHECK(out.input.persons == 3);

    // rotation about the vertical axis leaves z untouched (up to relabeling)
    auto z_multiset = [](const MotionSequence& m) {
      std::vector<double> z;
      for (int p = 0; p < m.persons; ++p)
        for (int t = 0; t < m.frames; ++t)
          for (int j = 0; j < m.joints; ++j) z.push_back(m.coord(2, j, p, t));
      std::sort(z.begin(), z.end());
      return z;
    };
    CHECK(z_multiset(out.input) == z_multiset(w.input));

    // pairwise hip distances per frame survive rotation plus relabeling
    auto dist_multiset = [](const MotionSequence& m, int t) {
      std::vector<double> d;
      for (int p = 0; p < m.persons; ++p)
        for (int q = p + 1; q < m.persons; ++q) {
          double sq = 0.0;
          for (int c = 0; c < 3; ++c) {
            const double diff = m.coord(c, 0, p, t) - m.coord(c, 0, q, t);
            sq += diff * diff;
          }
          d.push_back(std::sqrt(sq));
        }
      std::sort(d.begin(), d.end());
      return d;
    };
    for (int t = 0; t < 10; ++t) {
      auto da = dist_multiset(w.input, t);
      auto db = dist_multiset(out.input, t);
      REQUIRE(da.size() == db.size());
      for (std::size_t k = 0; k < da.size(); ++k)
        CHECK(da[k] == doctest::Approx(db[k]).epsilon(1e-9));
    }

    // same transform on both halves: identical halves stay identical
    TrainWindow same;
    same.input = s.slice(5, 10);
    same.target = s.slice(5, 10);
    Rng rng2(1234);
    TrainWindow tsame = augment(same, rng2);
    std::size_t diffs = 0;
    auto iv = tsame.input.data.values();
    auto tv = tsame.target.data.values();
    for (std::size_t k = 0; k < iv.size(); ++k)
      if (iv[k] != tv[k]) ++diffs;
    CHECK(diffs == 0);

    // deterministic given the generator state
    Rng r1(55), r2(55);
    TrainWindow o1 = augment(w, r1);
    TrainWindow o2 = augment(w, r2);
    auto v1 = o1.input.data.values();
    auto v2 = o2.input.data.values();
    std::size_t mism = 0;
    for (std::size_t k = 0; k < v1.size(); ++k)
      if (v1[k] != v2[k]) ++mism;
    CHECK(mism == 0);
  }
}
