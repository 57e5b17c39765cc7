#include <doctest.h>

#include <fstream>
#include <set>

#include "anchorframe/error.hpp"
#include "anchorframe/synth.hpp"
#include "support.hpp"

using namespace anchorframe;

namespace {

SceneSpec occluded_scene() {
  SceneSpec s = testing::static_scene(160, 120, 50);
  OccluderSpec occ;
  occ.size = {60, 60};
  occ.texture = {TextureKind::kFlat, 1, {0, 0, 200}, {0, 0, 200}};
  occ.path.start = {50, 30};
  occ.active_interval = {20, 40};
  s.occluder = occ;
  return s;
}

// Independent recount: repaint the target footprint with a sentinel and
// compare against the occluder footprint directly.
double recount_visibility(const SceneSpec& s, std::size_t t) {
  const auto [tx, ty] = s.target.path.position(t);
  long visible = 0;
  for (int y = ty; y < ty + s.target.size[1]; ++y) {
    for (int x = tx; x < tx + s.target.size[0]; ++x) {
      if (x < 0 || y < 0 || x >= s.width || y >= s.height) continue;
      bool covered = false;
      if (s.occluder && t >= s.occluder->active_interval[0] &&
          t <= s.occluder->active_interval[1]) {
        const auto [ox, oy] = s.occluder->path.position(t);
        covered = x >= ox && x < ox + s.occluder->size[0] && y >= oy &&
                  y < oy + s.occluder->size[1];
      }
      visible += covered ? 0 : 1;
    }
  }
  return static_cast<double>(visible) / (s.target.size[0] * s.target.size[1]);
}

}  // namespace

TEST_CASE("SplitMix64 is deterministic and well spread") {
  SplitMix64 a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  SplitMix64 r(1);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double z = r.normal();
    sum += z;
    sum_sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sum_sq / n - 1.0) < 0.05);
  CHECK(SplitMix64::hash(1, 2, 3) != SplitMix64::hash(1, 3, 2));
}

TEST_CASE("scene without an active occluder is fully visible") {
  SceneSpec s = testing::static_scene();
  const auto [video, truth] = generate_scene(s);
  REQUIRE(video.size() == s.num_frames);
  REQUIRE(truth.size() == s.num_frames);
  for (const auto& f : truth.frames) CHECK(f.visibility == 1.0);
  CHECK(truth[0].box == BoundingBox{60, 40, 100, 80});
}

TEST_CASE("scripted total occlusion") {
  const SceneSpec s = occluded_scene();
  const auto [video, truth] = generate_scene(s);
  for (std::size_t t = 0; t < s.num_frames; ++t) {
    CHECK(truth[t].visibility == ((t >= 20 && t <= 40) ? 0.0 : 1.0));
  }
  // occluder pixels are painted over the target
  CHECK(video[30].at(80, 60, 2) == 200);
}

TEST_CASE("half occlusion is counted exactly") {
  SceneSpec s = testing::static_scene(160, 120, 3);
  OccluderSpec occ;
  occ.size = {20, 40};
  occ.texture = {TextureKind::kFlat, 1, {0, 0, 0}, {0, 0, 0}};
  occ.path.start = {60, 40};
  occ.active_interval = {0, 2};
  s.occluder = occ;
  const auto [video, truth] = generate_scene(s);
  CHECK(truth[1].visibility == 0.5);
}

TEST_CASE("visibility matches an independent recount on the corpus") {
  const auto corpus = load_scene_corpus(testing::corpus_dir());
  REQUIRE(corpus.size() >= 20);
  for (const auto& spec : corpus) {
    const auto [video, truth] = generate_scene(spec);
    for (std::size_t t = 0; t < spec.num_frames; t += 7) {
      INFO(spec.name << " frame " << t);
      CHECK(truth[t].visibility == recount_visibility(spec, t));
    }
  }
}

TEST_CASE("attribute patch visibility and window") {
  SceneSpec s = testing::static_scene(160, 120, 10);
  AttributePatchSpec patch;
  patch.box = {0.0, 0.0, 0.5, 0.5};
  patch.texture = {TextureKind::kFlat, 1, {250, 0, 0}, {250, 0, 0}};
  patch.visible_interval = std::array<std::size_t, 2>{3, 6};
  s.target.attribute_patch = patch;
  OccluderSpec occ;
  occ.size = {10, 20};
  occ.texture = {TextureKind::kFlat, 1, {0, 0, 0}, {0, 0, 0}};
  occ.path.start = {60, 40};
  occ.active_interval = {5, 5};
  s.occluder = occ;
  const auto [video, truth] = generate_scene(s);
  CHECK(truth[0].attribute_visibility == 0.0);
  CHECK(truth[4].attribute_visibility == 1.0);
  CHECK(truth[5].attribute_visibility == 0.5);
  CHECK(truth[7].attribute_visibility == 0.0);
  REQUIRE(truth[4].attribute_box.has_value());
  CHECK(*truth[4].attribute_box == BoundingBox{60, 40, 80, 60});
  CHECK(video[4].at(65, 45, 0) == 250);
  CHECK(video[0].at(65, 45, 0) != 250);
}

TEST_CASE("generation is bit deterministic") {
  const SceneSpec s = occluded_scene();
  const auto a = generate_scene(s);
  const auto b = generate_scene(s);
  for (std::size_t t = 0; t < s.num_frames; ++t) CHECK(a.first[t] == b.first[t]);
  SceneSpec other = s;
  other.seed = 12;
  CHECK_FALSE(generate_scene(other).first[0] == a.first[0]);
}

TEST_CASE("dynamic noise changes every frame, static textures do not") {
  SceneSpec s = testing::static_scene(64, 64, 3);
  s.target.size = {20, 20};
  s.target.path.start = {20, 20};
  const auto still = generate_scene(s).first;
  CHECK(still[0] == still[1]);
  s.background.kind = TextureKind::kDynamicNoise;
  const auto moving = generate_scene(s).first;
  CHECK_FALSE(moving[0] == moving[1]);
}

TEST_CASE("invalid specs are rejected") {
  auto expect_spec_error = [](const SceneSpec& s) {
    try {
      s.validate();
      FAIL("expected kSpec");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kSpec);
    }
  };
  SceneSpec s = testing::static_scene();
  s.num_frames = 0;
  expect_spec_error(s);
  s = testing::static_scene();
  s.target.path.start = {500, 500};
  expect_spec_error(s);
  s = testing::static_scene();
  s.target.path.kind = PathKind::kLinear;
  s.target.path.velocity = {10, 0};
  expect_spec_error(s);  // leaves the frame
  s = testing::static_scene();
  OccluderSpec occ;
  occ.active_interval = {5, 2};
  s.occluder = occ;
  expect_spec_error(s);
  s.occluder->active_interval = {0, 30};
  expect_spec_error(s);
  s = testing::static_scene();
  s.target.texture.cell = 0;
  expect_spec_error(s);
}

TEST_CASE("scene JSON round trip and unknown keys") {
  const SceneSpec s = occluded_scene();
  nlohmann::json j = s;
  const SceneSpec back = j.get<SceneSpec>();
  CHECK(nlohmann::json(back) == j);
  j["bogus"] = 1;
  CHECK_THROWS_AS(j.get<SceneSpec>(), Error);
  nlohmann::json bad = s;
  bad["target"]["texture"]["kind"] = "plaid";
  CHECK_THROWS_AS(bad.get<SceneSpec>(), Error);
}

TEST_CASE("ground truth file round trip") {
  const auto [video, truth] = generate_scene(occluded_scene());
  testing::TempDir dir("truth");
  write_ground_truth(dir / "truth.json", truth);
  const GroundTruth back = read_ground_truth(dir / "truth.json");
  REQUIRE(back.size() == truth.size());
  CHECK(back.width == truth.width);
  for (std::size_t t = 0; t < truth.size(); ++t) {
    CHECK(back[t].box == truth[t].box);
    CHECK(back[t].visibility == truth[t].visibility);
  }
}

TEST_CASE("the shipped corpus covers the canonical categories") {
  const auto corpus = load_scene_corpus(testing::corpus_dir());
  std::set<std::string> names;
  for (const auto& s : corpus) names.insert(s.name);
  for (const char* n : {"static_clear", "linear_clear_h", "sinusoidal_clear", "linear_occ_early",
                        "linear_occ_mid", "linear_occ_late", "border_exit",
                        "never_visible_attribute"}) {
    CHECK(names.contains(n));
  }
}
