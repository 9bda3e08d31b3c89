#include <doctest.h>

#include <array>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "empmp/model.hpp"
#include "empmp/motion.hpp"
#include "empmp/rng.hpp"

using namespace empmp;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values_mut()) v = rng.uniform(lo, hi);
  return t;
}

MotionSequence random_motion(int joints, int persons, int frames, Rng& rng) {
  MotionSequence m = MotionSequence::zeros(joints, persons, frames);
  for (double& v : m.data.values_mut()) v = rng.uniform(-0.5, 0.5);
  // spread the hips so canonical person keys are distinct
  for (int p = 0; p < persons; ++p)
    for (int t = 0; t < frames; ++t)
      m.set_coord(0, 0, p, t, m.coord(0, 0, p, t) + 1.5 * p);
  return m;
}

void expect_same(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  auto av = a.values();
  auto bv = b.values();
  std::size_t diffs = 0;
  for (std::size_t i = 0; i < av.size(); ++i)
    if (av[i] != bv[i]) ++diffs;
  CHECK(diffs == 0);
}

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.joints = 2;
  cfg.persons = 2;
  cfg.frames_in = 5;
  cfg.frames_out = 3;
  cfg.channels = 4;
  cfg.stages = 1;
  cfg.local_iters = 2;
  cfg.global_iters = 1;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_SUITE("model") {

  TEST_CASE("presets pin the benchmark dimensions and parameter counts") {
    const ModelConfig pw = ModelConfig::preset("3dpw");
    CHECK(pw.joints == 13);
    CHECK(pw.persons == 2);
    CHECK(pw.frames_in == 16);
    CHECK(pw.frames_out == 14);
    CHECK(pw.channels == 39);
    CHECK(count_params(pw) == 40034);
    CHECK(count_params(pw) >= 35000);
    CHECK(count_params(pw) <= 45000);

    const ModelConfig c2 = ModelConfig::preset("cmu-2s");
    CHECK(c2.joints == 15);
    CHECK(c2.persons == 3);
    CHECK(c2.frames_in == 30);
    CHECK(c2.frames_out == 30);
    CHECK(count_params(c2) == 160590);
    CHECK(count_params(c2) >= 160000);
    CHECK(count_params(c2) <= 180000);

    const ModelConfig c1 = ModelConfig::preset("cmu-1s");
    CHECK(c1.frames_in == 15);
    CHECK(c1.frames_out == 15);
    CHECK(count_params(c1) == 49740);

    // shared defaults
    for (const ModelConfig& c : {pw, c2, c1}) {
      CHECK(c.stages == 4);
      CHECK(c.local_iters == 16);
      CHECK(c.global_iters == 1);
      CHECK(c.alpha == 0.2);
      CHECK(c.hip_index == 0);
    }
    CHECK_THROWS_AS(ModelConfig::preset("amass"), ConfigError);
  }

  TEST_CASE("config validation rejects out-of-range fields") {
    auto bad = [](auto&& tweak) {
      ModelConfig cfg = tiny_config();
      tweak(cfg);
      CHECK_THROWS_AS(cfg.validate(), ConfigError);
      CHECK_THROWS_AS(EmpmpModel{cfg}, ConfigError);
    };
    bad([](ModelConfig& c) { c.joints = 0; });
    bad([](ModelConfig& c) { c.persons = 0; });
    bad([](ModelConfig& c) { c.frames_in = 0; });
    bad([](ModelConfig& c) { c.frames_out = 0; });
    bad([](ModelConfig& c) { c.channels = 0; });
    bad([](ModelConfig& c) { c.stages = 0; });
    bad([](ModelConfig& c) { c.local_iters = -1; });
    bad([](ModelConfig& c) { c.alpha = -0.1; });
    bad([](ModelConfig& c) { c.hip_index = c.joints; });
    bad([](ModelConfig& c) { c.norm_eps = 0.0; });
    CHECK_NOTHROW(tiny_config().validate());
  }

  TEST_CASE("enumerated parameters agree with the closed-form count") {
    // hand count for the tiny configuration: embedding 6*4+4 = 28,
    // stage 2*(25+5+8) + 1*(100+10+20) = 206,
    // interaction 2*(50+5)+8 + (8+4)+8 + (100+10)+20 = 268,
    // head 5*3+3 + 4*6+6 = 48  ->  28 + 206 + 268 + 48 = 550
    const ModelConfig tiny = tiny_config();
    CHECK(count_params(tiny) == 550);

    for (ModelConfig cfg : {tiny, ModelConfig::preset("cmu-1s")}) {
      CAPTURE(cfg.channels);
      EmpmpModel m(cfg);
      CHECK(m.parameter_count() == count_params(cfg));

      cfg.spatial_update = true;
      EmpmpModel ms(cfg);
      CHECK(ms.parameter_count() == count_params(cfg));
      CHECK(ms.parameter_count() > m.parameter_count());
    }

    // the embedding block of the cmu presets: 45*45 weights + 45 biases
    EmpmpModel cmu(ModelConfig::preset("cmu-1s"));
    std::size_t embed = 0;
    cmu.for_each_parameter([&](const std::string& name, const Tensor& t) {
      if (name.rfind("embed.", 0) == 0) embed += t.size();
    });
    CHECK(embed == 2070);
  }

  TEST_CASE("parameter names are unique and ordered embedding, stages, head") {
    ModelConfig cfg = tiny_config();
    cfg.spatial_update = true;
    EmpmpModel m(cfg);
    std::vector<std::string> names;
    m.for_each_parameter(
        [&](const std::string& n, const Tensor&) { names.push_back(n); });
    REQUIRE(!names.empty());
    CHECK(names.front() == "embed.weight");
    CHECK(names[1] == "embed.bias");
    CHECK(names.back() == "head.channel.bias");
    CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());

    auto has = [&](const std::string& n) {
      return std::find(names.begin(), names.end(), n) != names.end();
    };
    CHECK(has("stage0.local0.weight"));
    CHECK(has("stage0.local1.norm.gain"));
    CHECK(has("stage0.local_spatial0.weight"));
    CHECK(has("stage0.global0.bias"));
    CHECK(has("stage0.ci.scale.weight"));
    CHECK(has("stage0.ci.translate.bias"));
    CHECK(has("head.time.weight"));
  }

  TEST_CASE("initialization is a pure function of the seed") {
    ModelConfig cfg = tiny_config();
    EmpmpModel a(cfg), b(cfg);
    std::vector<const Tensor*> pa, pb;
    a.for_each_parameter([&](const std::string&, const Tensor& t) { pa.push_back(&t); });
    b.for_each_parameter([&](const std::string&, const Tensor& t) { pb.push_back(&t); });
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) expect_same(*pa[i], *pb[i]);

    cfg.seed = 12;
    EmpmpModel c(cfg);
    bool any_diff = false;
    auto av = a.embed_weight.values();
    auto cv = c.embed_weight.values();
    for (std::size_t i = 0; i < av.size(); ++i) any_diff |= (av[i] != cv[i]);
    CHECK(any_diff);
  }

  TEST_CASE("plain copies share weight storage, clones do not") {
    EmpmpModel m(tiny_config());
    EmpmpModel shallow = m;
    shallow.embed_weight.values_mut()[0] = 42.0;
    CHECK(m.embed_weight.values()[0] == 42.0);

    EmpmpModel deep = m.clone();
    deep.embed_weight.values_mut()[0] = -7.0;
    CHECK(m.embed_weight.values()[0] == 42.0);
  }

  TEST_CASE("watched copies reuse the values and collect gradients") {
    ModelConfig cfg = tiny_config();
    EmpmpModel m(cfg);
    Rng rng(5);
    Tensor x = random_tensor({cfg.coord_rows(), cfg.persons, cfg.frames_in}, rng);

    Tape tape;
    EmpmpModel wm = m.watched(tape);
    expect_same(joint_embed(x, wm), joint_embed(x, m));

    Tensor loss = sum_all(joint_embed(x, wm));
    tape.backward(loss);
    auto g = tape.grad(wm.embed_bias);
    REQUIRE(g.size() == static_cast<std::size_t>(cfg.channels));
    const double pt = static_cast<double>(cfg.persons * cfg.frames_in);
    for (double v : g) CHECK(v == doctest::Approx(pt).epsilon(1e-12));
  }

  TEST_CASE("distance matrix matches a brute-force oracle") {
    Rng rng(83);
    MotionSequence m = random_motion(3, 4, 6, rng);
    const int hip = 1;
    DistanceMatrix d = distance_matrix(m, hip);
    REQUIRE(d.values.shape() == Shape{4, 4, 6});
    for (int p = 0; p < 4; ++p)
      for (int q = 0; q < 4; ++q)
        for (int t = 0; t < 6; ++t) {
          double sq = 0.0;
          for (int c = 0; c < 3; ++c) {
            const double diff = m.coord(c, hip, p, t) - m.coord(c, hip, q, t);
            sq += diff * diff;
          }
          CHECK(d.values.at({p, q, t}) == doctest::Approx(std::sqrt(sq)).epsilon(1e-12));
          CHECK(d.values.at({p, q, t}) == d.values.at({q, p, t}));
        }
    for (int p = 0; p < 4; ++p)
      for (int t = 0; t < 6; ++t) CHECK(d.values.at({p, p, t}) == 0.0);
    CHECK_THROWS_AS(distance_matrix(m, 3), ContractError);
  }

  TEST_CASE("distance matrix is invariant to rigid motion") {
    Rng rng(84);
    MotionSequence m = random_motion(4, 3, 5, rng);
    DistanceMatrix base = distance_matrix(m, 0);
    MotionSequence moved = translate(rotate_about_axis(m, 2, 0.7), {0.3, -0.2, 0.5});
    DistanceMatrix after = distance_matrix(moved, 0);
    auto a = base.values.values();
    auto b = after.values.values();
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
  }

  TEST_CASE("local stream update is the residual chain, in parameter order") {
    ModelConfig cfg = tiny_config();
    EmpmpModel m(cfg);
    const StageParams& sp = m.stages[0];
    Rng rng(7);
    Tensor z = random_tensor({cfg.channels, cfg.persons, cfg.frames_in}, rng);

    Tensor cur = z;
    for (int i = 0; i < cfg.local_iters; ++i) {
      Tensor u = linear_along_axis(cur, 2, sp.local_weights[i], sp.local_biases[i]);
      cur = add(cur, layer_norm(u, sp.local_norms[i]));
    }
    expect_same(me_local_update(z, sp, cfg), cur);

    expect_same(me_local_update(z, sp, cfg, 0), z);
    CHECK_THROWS_AS(me_local_update(z, sp, cfg, cfg.local_iters + 1), ContractError);
  }

  TEST_CASE("global stream update runs on the merged person-time view") {
    ModelConfig cfg = tiny_config();
    EmpmpModel m(cfg);
    const StageParams& sp = m.stages[0];
    Rng rng(8);
    Tensor z = random_tensor({cfg.channels, cfg.persons, cfg.frames_in}, rng);

    Tensor cur = merge_axes(z, 1, 2);
    for (int j = 0; j < cfg.global_iters; ++j) {
      Tensor u = linear_along_axis(cur, 1, sp.global_weights[j], sp.global_biases[j]);
      cur = add(cur, layer_norm(u, sp.global_norms[j]));
    }
    Tensor got = me_global_update(z, sp, cfg);
    REQUIRE(got.shape() == Shape{cfg.channels, cfg.merged()});
    expect_same(got, cur);
  }

  TEST_CASE("zeroed spatial blocks are exact identities") {
    ModelConfig cfg = tiny_config();
    cfg.spatial_update = true;
    EmpmpModel m(cfg);
    StageParams& sp = m.stages[0];
    for (Tensor* t : {&sp.local_spatial_weights[0], &sp.local_spatial_weights[1],
                      &sp.local_spatial_biases[0], &sp.local_spatial_biases[1],
                      &sp.global_spatial_weights[0], &sp.global_spatial_biases[0]})
      for (double& v : t->values_mut()) v = 0.0;

    Rng rng(9);
    Tensor z = random_tensor({cfg.channels, cfg.persons, cfg.frames_in}, rng);
    expect_same(spatial_update_local(z, sp, cfg), z);
    Tensor zg = merge_axes(z, 1, 2);
    expect_same(spatial_update_global(zg, sp, cfg), zg);
  }

  TEST_CASE("interaction block follows its documented formula") {
    ModelConfig cfg = tiny_config();
    EmpmpModel m(cfg);
    const StageParams& sp = m.stages[0];
    Rng rng(10);
    Tensor zl = random_tensor({cfg.channels, cfg.persons, cfg.frames_in}, rng);
    Tensor zg = random_tensor({cfg.channels, cfg.merged()}, rng);
    DistanceMatrix dist;
    dist.persons = cfg.persons;
    dist.frames = cfg.frames_in;
    dist.values = random_tensor({cfg.persons, cfg.persons, cfg.frames_in}, rng, 0.0, 3.0);

    CiOutput got = ci_block(zl, zg, dist, sp, cfg);

    Tensor s = linear_along_axis(zg, 1, sp.scale_weight, sp.scale_bias);
    Tensor h = linear_along_axis(zg, 1, sp.shift_weight, sp.shift_bias);
    Tensor modulated = hadamard(zl, add_scalar(s, 1.0));
    modulated = add(modulated, repeat_axis(h, 1, cfg.persons));
    Tensor refined = layer_norm(modulated, sp.refine_norm);
    Tensor tau = linear_along_axis(dist.values, 0, sp.dist_weight, sp.dist_bias);
    Tensor local_star = add(zl, layer_norm(add(refined, tau), sp.fuse_norm));
    Tensor g = linear_along_axis(merge_axes(zl, 1, 2), 1, sp.translate_weight,
                                 sp.translate_bias);
    Tensor global_star = add(zg, layer_norm(add(zg, g), sp.global_refine_norm));
    Tensor fused = add(local_star,
                       scale(split_axes(global_star, 1, cfg.persons, cfg.frames_in),
                             cfg.alpha));

    expect_same(got.fused, fused);
    expect_same(got.global_refined, global_star);

    CHECK_THROWS_AS(ci_block(zg, zg, dist, sp, cfg), DimensionError);
    CHECK_THROWS_AS(ci_block(zl, zl, dist, sp, cfg), DimensionError);
    DistanceMatrix wrong = dist;
    wrong.frames = cfg.frames_in - 1;
    CHECK_THROWS_AS(ci_block(zl, zg, wrong, sp, cfg), DimensionError);
  }

  TEST_CASE("interaction with zeroed maps reduces to norm residuals") {
    ModelConfig cfg = tiny_config();
    EmpmpModel m(cfg);
    StageParams& sp = m.stages[0];
    for (Tensor* t : {&sp.scale_weight, &sp.scale_bias, &sp.shift_weight,
                      &sp.shift_bias, &sp.dist_weight, &sp.dist_bias,
                      &sp.translate_weight, &sp.translate_bias})
      for (double& v : t->values_mut()) v = 0.0;

    Rng rng(12);
    Tensor zl = random_tensor({cfg.channels, cfg.persons, cfg.frames_in}, rng);
    Tensor zg = random_tensor({cfg.channels, cfg.merged()}, rng);
    DistanceMatrix dist;
    dist.persons = cfg.persons;
    dist.frames = cfg.frames_in;
    dist.values = random_tensor({cfg.persons, cfg.persons, cfg.frames_in}, rng, 0.0, 3.0);

    CiOutput got = ci_block(zl, zg, dist, sp, cfg);

    // straight-line reduction: distances and the global modulation drop out
    Tensor local_star =
        add(zl, layer_norm(layer_norm(zl, sp.refine_norm), sp.fuse_norm));
    Tensor global_star = add(zg, layer_norm(zg, sp.global_refine_norm));
    Tensor fused = add(local_star,
                       scale(split_axes(global_star, 1, cfg.persons, cfg.frames_in),
                             cfg.alpha));
    expect_same(got.fused, fused);
    expect_same(got.global_refined, global_star);
  }

  TEST_CASE("alpha zero with modulation off hides the global stream") {
    ModelConfig cfg = tiny_config();
    cfg.alpha = 0.0;
    EmpmpModel m(cfg);
    StageParams& sp = m.stages[0];
    for (Tensor* t : {&sp.scale_weight, &sp.scale_bias, &sp.shift_weight, &sp.shift_bias})
      for (double& v : t->values_mut()) v = 0.0;

    Rng rng(13);
    Tensor zl = random_tensor({cfg.channels, cfg.persons, cfg.frames_in}, rng);
    Tensor zg1 = random_tensor({cfg.channels, cfg.merged()}, rng);
    Tensor zg2 = random_tensor({cfg.channels, cfg.merged()}, rng);
    DistanceMatrix dist;
    dist.persons = cfg.persons;
    dist.frames = cfg.frames_in;
    dist.values = random_tensor({cfg.persons, cfg.persons, cfg.frames_in}, rng, 0.0, 3.0);

    CiOutput a = ci_block(zl, zg1, dist, sp, cfg);
    CiOutput b = ci_block(zl, zg2, dist, sp, cfg);
    expect_same(a.fused, b.fused);

    auto g1 = a.global_refined.values();
    auto g2 = b.global_refined.values();
    bool differs = false;
    for (std::size_t i = 0; i < g1.size(); ++i) differs |= (g1[i] != g2[i]);
    CHECK(differs);
  }

  TEST_CASE("stage forward composes the two streams and the interaction") {
    ModelConfig cfg = tiny_config();
    EmpmpModel m(cfg);
    const StageParams& sp = m.stages[0];
    Rng rng(14);
    Tensor z = random_tensor({cfg.channels, cfg.persons, cfg.frames_in}, rng);
    DistanceMatrix dist;
    dist.persons = cfg.persons;
    dist.frames = cfg.frames_in;
    dist.values = random_tensor({cfg.persons, cfg.persons, cfg.frames_in}, rng, 0.0, 3.0);

    Tensor expected =
        ci_block(me_local_update(z, sp, cfg), me_global_update(z, sp, cfg), dist, sp, cfg)
            .fused;
    expect_same(stage_forward(z, dist, sp, cfg), expected);
  }

  TEST_CASE("network output shape follows the config and a zero head gives zeros") {
    ModelConfig cfg = tiny_config();
    cfg.stages = 2;
    EmpmpModel m(cfg);
    Rng rng(15);
    Tensor x = random_tensor({cfg.coord_rows(), cfg.persons, cfg.frames_in}, rng);
    DistanceMatrix dist;
    dist.persons = cfg.persons;
    dist.frames = cfg.frames_in;
    dist.values = random_tensor({cfg.persons, cfg.persons, cfg.frames_in}, rng, 0.0, 3.0);

    Tensor y = predict_sorted(m, x, dist);
    CHECK(y.shape() == Shape{cfg.coord_rows(), cfg.persons, cfg.frames_out});

    for (Tensor* t : {&m.head_time_weight, &m.head_time_bias, &m.head_channel_weight,
                      &m.head_channel_bias})
      for (double& v : t->values_mut()) v = 0.0;
    Tensor zero = predict_sorted(m, x, dist);
    for (double v : zero.values()) CHECK(v == 0.0);

    Tensor bad = random_tensor({cfg.coord_rows(), cfg.persons, cfg.frames_in + 1}, rng);
    CHECK_THROWS_AS(predict_sorted(m, bad, dist), DimensionError);
    CHECK_THROWS_AS(joint_embed(random_tensor({5, 2, 5}, rng), m), DimensionError);
  }

  TEST_CASE("forward rejects sequences that do not match the config") {
    ModelConfig cfg = tiny_config();
    EmpmpModel m(cfg);
    Rng rng(16);
    CHECK_THROWS_AS(forward(random_motion(cfg.joints + 1, cfg.persons, cfg.frames_in, rng), m),
                    DimensionError);
    CHECK_THROWS_AS(forward(random_motion(cfg.joints, cfg.persons + 1, cfg.frames_in, rng), m),
                    DimensionError);
    CHECK_THROWS_AS(forward(random_motion(cfg.joints, cfg.persons, cfg.frames_in - 1, rng), m),
                    DimensionError);
  }

  TEST_CASE("forward is exactly equivariant to person relabeling") {
    ModelConfig cfg;
    cfg.joints = 3;
    cfg.persons = 3;
    cfg.frames_in = 5;
    cfg.frames_out = 4;
    cfg.channels = 6;
    cfg.stages = 2;
    cfg.local_iters = 2;
    cfg.global_iters = 1;
    cfg.seed = 21;
    EmpmpModel m(cfg);

    Rng rng(99);
    for (int rep = 0; rep < 10; ++rep) {
      MotionSequence x = random_motion(cfg.joints, cfg.persons, cfg.frames_in, rng);
      std::vector<int> order{0, 1, 2};
      rng.shuffle(order);

      MotionSequence lhs = forward(permute_persons(x, order), m);
      MotionSequence rhs = permute_persons(forward(x, m), order);
      expect_same(lhs.data, rhs.data);
    }
  }

  TEST_CASE("flop table pins the dense contraction counts") {
    const FlopBreakdown one = count_flops(ModelConfig::preset("cmu-2s"), 1);
    auto macs = [&](const std::string& label) -> std::uint64_t {
      for (const auto& it : one.items)
        if (it.label == label) return it.macs;
      return 0;
    };
    CHECK(macs("dct") == 121500);
    CHECK(macs("embed") == 182250);
    CHECK(macs("local_temporal") == 7776000);
    CHECK(macs("global_temporal") == 1458000);
    CHECK(macs("ci_scale_shift") == 972000);
    CHECK(macs("ci_distance") == 48600);
    CHECK(macs("ci_translate") == 1458000);
    CHECK(macs("head_time") == 121500);
    CHECK(macs("head_channel") == 182250);
    CHECK(macs("idct") == 121500);
    CHECK(one.items.size() == 10);  // spatial entries absent when disabled
    CHECK(one.total == 12441600);

    CHECK(count_flops(ModelConfig::preset("cmu-1s"), 1).total == 3213675);
    CHECK(count_flops(ModelConfig::preset("3dpw"), 1).total == 1911156);

    const FlopBreakdown batch = count_flops(ModelConfig::preset("cmu-2s"), 128);
    CHECK(batch.total == 128ull * 12441600ull);

    ModelConfig sp = ModelConfig::preset("cmu-2s");
    sp.spatial_update = true;
    const FlopBreakdown with_spatial = count_flops(sp, 1);
    CHECK(with_spatial.items.size() == 12);
    CHECK(with_spatial.total > one.total);
  }
}
