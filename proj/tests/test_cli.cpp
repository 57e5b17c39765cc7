#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <nlohmann/json.hpp>

#include "anchorframe/scoring.hpp"
#include "anchorframe/synth.hpp"
#include "cli.hpp"
#include "support.hpp"

using namespace anchorframe;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
  json line() const { return json::parse(out.substr(0, out.find('\n'))); }
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_spec(const fs::path& p, const SceneSpec& s) { std::ofstream(p) << json(s).dump(2); }

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({"select", "--prompt", "remove the car"}).code == cli::kExitUsage);
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("synth writes frames, truth and the spec copy") {
  testing::TempDir dir("cli_synth");
  const SceneSpec spec = testing::static_scene(64, 48, 4);
  SceneSpec small = spec;
  small.target.size = {20, 20};
  small.target.path.start = {20, 10};
  write_spec(dir / "scene.json", small);
  const Run r = run({"synth", "--spec", (dir / "scene.json").string(), "--out", (dir / "a").string()});
  REQUIRE(r.code == 0);
  CHECK(r.line()["frames"] == 4);
  for (int t = 0; t < 4; ++t) CHECK(fs::exists(dir / ("a/frame_00000" + std::to_string(t) + ".ppm")));
  CHECK(fs::exists(dir / "a/truth.json"));
  CHECK(slurp(dir / "a/scene.json") == slurp(dir / "scene.json"));

  REQUIRE(run({"synth", "--spec", (dir / "scene.json").string(), "--out", (dir / "b").string()}).code == 0);
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    CHECK(slurp(e.path()) == slurp(dir / "b" / e.path().filename()));
  }
}

TEST_CASE("synth failure leaves nothing behind") {
  testing::TempDir dir("cli_synth_bad");
  std::ofstream(dir / "bad.json") << R"({"name": "x", "width": -4})";
  std::ofstream(dir / "broken.json") << "{";
  CHECK(run({"synth", "--spec", (dir / "bad.json").string(), "--out", (dir / "o").string()}).code ==
        cli::kExitUsage);
  CHECK(run({"synth", "--spec", (dir / "broken.json").string(), "--out", (dir / "o").string()}).code ==
        cli::kExitUsage);
  CHECK(run({"synth", "--spec", (dir / "none.json").string(), "--out", (dir / "o").string()}).code ==
        cli::kExitUsage);
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path())) ++entries;
  CHECK(entries == 2);
}

TEST_CASE("select with an override on a static scene picks frame 0") {
  testing::TempDir dir("cli_select");
  write_spec(dir / "scene.json", testing::static_scene(160, 120, 21));
  REQUIRE(run({"synth", "--spec", (dir / "scene.json").string(), "--out", (dir / "f").string()}).code == 0);
  std::ofstream(dir / "cfg.json") << R"({"selector": {"lambda_c": 0, "lambda_p": 0}})";
  const Run r = run({"select", "--frames", (dir / "f").string(), "--prompt", "remove the box",
                     "--config", (dir / "cfg.json").string(), "--bbox", "0:10,10,50,50", "--out",
                     (dir / "r").string()});
  REQUIRE(r.code == 0);
  CHECK(r.line()["k_star"] == 0);
  CHECK(fs::exists(dir / "r/result.json"));
  CHECK(fs::exists(dir / "r/tube.json"));
  CHECK(fs::exists(dir / "r/masks/mask_000020.pgm"));

  const Run e = run({"eval", "--result", (dir / "r").string(), "--truth", (dir / "f/truth.json").string()});
  REQUIRE(e.code == 0);
  CHECK(e.line()["kf_visibility"] == 1.0);
  CHECK(e.line().contains("mean_iou"));
}

TEST_CASE("select error codes") {
  testing::TempDir dir("cli_select_err");
  CHECK(run({"select", "--frames", (dir / "missing").string(), "--prompt", "remove the car"}).code ==
        cli::kExitUsage);

  SceneSpec spec = testing::static_scene(64, 48, 3);
  spec.target.size = {20, 20};
  spec.target.path.start = {20, 10};
  OccluderSpec occ;
  occ.size = {64, 48};
  occ.texture = {TextureKind::kFlat, 1, {0, 0, 0}, {0, 0, 0}};
  occ.active_interval = {0, 2};
  spec.occluder = occ;
  write_spec(dir / "scene.json", spec);
  REQUIRE(run({"synth", "--spec", (dir / "scene.json").string(), "--out", (dir / "f").string()}).code == 0);
  const std::string frames = (dir / "f").string();
  const std::string out = (dir / "r").string();
  CHECK(run({"select", "--frames", frames, "--prompt", "remove the car", "--out", out}).code ==
        cli::kExitNoTarget);
  CHECK(run({"select", "--frames", frames, "--prompt", "remove the car", "--bbox", "nonsense"}).code ==
        cli::kExitUsage);
  CHECK(run({"select", "--frames", frames, "--prompt", "remove the car", "--bbox", "9:1,1,5,5"}).code ==
        cli::kExitUsage);
  CHECK(run({"select", "--frames", frames, "--prompt", "remove the car", "--bbox", "1:1,1,10,10",
             "--out", out})
            .code == cli::kExitOk);

  std::ofstream(dir / "bad.json") << R"({"selector": {"taux": 1}})";
  CHECK(run({"select", "--frames", frames, "--prompt", "remove the car", "--config",
             (dir / "bad.json").string()})
            .code == cli::kExitUsage);

  std::ofstream(dir / "remote.json")
      << R"({"backend": "remote", "detector": {"base_url": "http://127.0.0.1:1", "max_retries": 0, "timeout_ms": 200}})";
  ::unsetenv("ANCHORFRAME_OFFLINE");
  CHECK(run({"select", "--frames", frames, "--prompt", "remove the car", "--config",
             (dir / "remote.json").string(), "--out", out})
            .code == cli::kExitService);
  ::setenv("ANCHORFRAME_OFFLINE", "1", 1);
  CHECK(run({"select", "--frames", frames, "--prompt", "remove the car", "--config",
             (dir / "remote.json").string(), "--bbox", "1:1,1,10,10", "--out", out})
            .code == cli::kExitOk);
  ::unsetenv("ANCHORFRAME_OFFLINE");
}

TEST_CASE("eval rejects mismatched lengths") {
  testing::TempDir dir("cli_eval");
  write_spec(dir / "a.json", testing::static_scene(160, 120, 6));
  write_spec(dir / "b.json", testing::static_scene(160, 120, 7));
  REQUIRE(run({"synth", "--spec", (dir / "a.json").string(), "--out", (dir / "fa").string()}).code == 0);
  REQUIRE(run({"synth", "--spec", (dir / "b.json").string(), "--out", (dir / "fb").string()}).code == 0);
  REQUIRE(run({"select", "--frames", (dir / "fa").string(), "--prompt", "remove the box", "--out",
               (dir / "r").string()})
              .code == 0);
  CHECK(run({"eval", "--result", (dir / "r").string(), "--truth", (dir / "fb/truth.json").string()}).code ==
        cli::kExitUsage);
  const Run ok = run({"eval", "--result", (dir / "r").string(), "--truth", (dir / "fa/truth.json").string()});
  REQUIRE(ok.code == 0);
  CHECK(ok.line()["mean_iou"] == 1.0);
}

TEST_CASE("loss command") {
  testing::TempDir dir("cli_loss");
  const Tensor pred{{2, 2}, {1, 2, 3, 4}};
  const Tensor target{{2, 2}, {0, 2, 3, 6}};
  const Tensor ones{{2, 2}, {1, 1, 1, 1}};
  write_tensor(dir / "p", pred);
  write_tensor(dir / "t", target);
  write_tensor(dir / "m", ones);
  write_tensor(dir / "s", Tensor{{4}, {1, 1, 1, 1}});
  const auto loss = [&](const std::string& p, const std::string& t, const std::string& m,
                        const std::string& g) {
    return run({"loss", "--pred", (dir / p).string(), "--target", (dir / t).string(), "--mask",
                (dir / m).string(), "--gamma", g});
  };
  const double mse = (1.0 + 4.0) / 4.0;
  CHECK(loss("p", "t", "m", "0").line()["loss"] == mse);
  CHECK(loss("p", "t", "m", "2").line()["loss"] == 3.0 * mse);
  CHECK(loss("p", "p", "m", "5").line()["loss"] == 0.0);
  CHECK(loss("p", "t", "s", "1").code == cli::kExitUsage);
  CHECK(loss("p", "t", "m", "-1").code == cli::kExitUsage);
}
