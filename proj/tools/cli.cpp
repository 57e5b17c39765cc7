#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "anchorframe/bench.hpp"
#include "anchorframe/clients.hpp"
#include "anchorframe/config.hpp"
#include "anchorframe/error.hpp"
#include "anchorframe/pipeline.hpp"
#include "anchorframe/synth.hpp"

namespace anchorframe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNoTargetFound:
      return kExitNoTarget;
    case ErrorCode::kServiceUnavailable:
    case ErrorCode::kProtocol:
      return kExitService;
    default:
      return kExitUsage;
  }
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

/// Parses "t:x1,y1,x2,y2".
UserBoxOverride parse_bbox(const std::string& text) {
  const auto fail = [&]() -> UserBoxOverride {
    throw Error(ErrorCode::kInput, "--bbox expects t:x1,y1,x2,y2, got '" + text + "'");
  };
  const auto colon = text.find(':');
  if (colon == std::string::npos) return fail();
  UserBoxOverride o;
  std::size_t frame = 0;
  double v[4];
  char c1 = 0, c2 = 0, c3 = 0;
  std::istringstream head(text.substr(0, colon));
  if (!(head >> frame) || !head.eof()) return fail();
  std::istringstream tail(text.substr(colon + 1));
  if (!(tail >> v[0] >> c1 >> v[1] >> c2 >> v[2] >> c3 >> v[3]) || c1 != ',' || c2 != ',' ||
      c3 != ',') {
    return fail();
  }
  tail >> std::ws;
  if (!tail.eof()) return fail();
  o.frame = frame;
  o.box = {v[0], v[1], v[2], v[3]};
  if (!o.box.valid()) {
    throw Error(ErrorCode::kInput, "--bbox box must satisfy x1 < x2 and y1 < y2");
  }
  return o;
}

json box_json(const BoundingBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

int cmd_synth(const fs::path& spec_path, const fs::path& out_dir, std::ostream& out,
              std::ostream& err) {
  const std::string spec_bytes = read_bytes(spec_path);
  const SceneSpec spec = read_scene_spec(spec_path);
  auto [video, truth] = generate_scene(spec);

  // Stage next to the destination so a failure never leaves partial output.
  const fs::path parent = out_dir.has_parent_path() ? out_dir.parent_path() : fs::path(".");
  fs::create_directories(parent);
  const fs::path staging = parent / ("." + out_dir.filename().string() + ".partial");
  fs::remove_all(staging);
  try {
    write_sequence(staging, video);
    write_ground_truth(staging / "truth.json", truth);
    write_bytes(staging / "scene.json", spec_bytes);
    if (!fs::exists(out_dir)) {
      fs::rename(staging, out_dir);
    } else {
      for (const auto& entry : fs::directory_iterator(staging)) {
        fs::rename(entry.path(), out_dir / entry.path().filename());
      }
      fs::remove_all(staging);
    }
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }

  out << json{{"command", "synth"},
              {"scene", spec.name},
              {"frames", video.size()},
              {"out", out_dir.string()}}
             .dump()
      << "\n";
  err << "synth: wrote " << video.size() << " frames of '" << spec.name << "' to "
      << out_dir.string() << "\n";
  return kExitOk;
}

struct SelectArgs {
  fs::path frames;
  std::string prompt;
  std::optional<fs::path> config;
  std::optional<std::string> bbox;
  fs::path out = "anchorframe_out";
};

int cmd_select(const SelectArgs& a, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!fs::is_directory(a.frames)) {
    throw Error(ErrorCode::kInput, "frames directory not found: " + a.frames.string());
  }
  RunConfig cfg = a.config ? load_run_config(*a.config) : RunConfig{};
  cfg.validate();
  std::optional<UserBoxOverride> override_box;
  if (a.bbox) override_box = parse_bbox(*a.bbox);

  const VideoSequence video = read_sequence(a.frames);
  if (override_box && override_box->frame >= video.size()) {
    throw Error(ErrorCode::kInput, "--bbox frame " + std::to_string(override_box->frame) +
                                       " is outside the sequence");
  }

  const KeywordTables keywords =
      cfg.keywords ? KeywordTables::load(*cfg.keywords) : KeywordTables::builtin();
  std::unique_ptr<Detector> detector;
  std::unique_ptr<AttributeScorer> scorer;
  const Backend backend = cfg.effective_backend();
  if (backend == Backend::kMock) {
    const fs::path truth_path = cfg.mock_truth.value_or(a.frames / "truth.json");
    if (!fs::exists(truth_path)) {
      throw Error(ErrorCode::kInput,
                  "mock backend needs a ground-truth sidecar: " + truth_path.string());
    }
    GroundTruth truth = read_ground_truth(truth_path);
    detector = std::make_unique<MockDetector>(truth, cfg.mock_detector);
    scorer = std::make_unique<MockAttributeScorer>(std::move(truth));
  } else {
    detector = std::make_unique<RemoteDetector>(cfg.detector);
    scorer = std::make_unique<RemoteAttributeScorer>(
        cfg.vlm, cfg.prompts ? PromptTemplates::load(*cfg.prompts) : PromptTemplates::builtin());
  }
  const KcfTracker tracker(cfg.tracker);
  const SelectionInputs inputs{*detector, *scorer, tracker, &keywords};

  const KeyframeResult result =
      select_keyframe(video, a.prompt, cfg.selector, inputs, override_box);
  const MaskTube tube = propagate_masks(video, result.k_star, result.box, tracker);

  json cfg_json = to_json(cfg);
  cfg_json["backend"] = backend == Backend::kMock ? "mock" : "remote";
  write_result(result, tube, a.out, cfg_json);

  double s_final = 0.0;
  for (const auto& c : result.all_candidates) {
    if (c.frame == result.k_star) s_final = c.s_final;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out << json{{"command", "select"},
              {"k_star", result.k_star},
              {"s_final", s_final},
              {"box", box_json(result.box)},
              {"candidates", result.all_candidates.size()},
              {"out", a.out.string()}}
             .dump()
      << "\n";
  err << "select: k* = " << result.k_star << " (s_final " << s_final << ") from "
      << result.all_candidates.size() << " candidates over " << video.size() << " frames in "
      << secs << " s; wrote " << a.out.string() << "\n";
  return kExitOk;
}

int cmd_eval(const fs::path& result_dir, const fs::path& truth_path, double floor,
             std::ostream& out, std::ostream& err) {
  const GroundTruth truth = read_ground_truth(truth_path);
  const KeyframeResult result = read_result(result_dir / "result.json");
  const MaskTube tube = tube_from_json(json::parse(read_bytes(result_dir / "tube.json")));
  const SelectionReport sel = evaluate_selection(result, truth, tube.size());
  const TubeReport tr = evaluate_tube(tube, truth, floor);

  out << json{{"command", "eval"},
              {"k_star", result.k_star},
              {"kf_visibility", sel.kf_visibility},
              {"kf_attr_visibility", sel.kf_attr_visibility},
              {"is_complete", sel.is_complete},
              {"mean_iou", tr.mean_iou ? json(*tr.mean_iou) : json(nullptr)},
              {"frames_counted", tr.frames_counted},
              {"visibility_floor", floor}}
             .dump()
      << "\n";
  err << "eval: k* = " << result.k_star << ", visibility " << sel.kf_visibility
      << ", complete " << (sel.is_complete ? "yes" : "no") << ", mean IoU ";
  if (tr.mean_iou) {
    err << *tr.mean_iou << " over " << tr.frames_counted << " frames\n";
  } else {
    err << "n/a (no frame reaches visibility " << floor << ")\n";
  }
  return kExitOk;
}

int cmd_loss(const fs::path& pred, const fs::path& target, const fs::path& mask, double gamma,
             std::ostream& out, std::ostream& err) {
  const double loss =
      region_weighted_mse(read_tensor(pred), read_tensor(target), read_tensor(mask), gamma);
  out << json{{"command", "loss"}, {"loss", loss}, {"gamma", gamma}}.dump() << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", loss);
  err << "loss: " << buf << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Occlusion-aware keyframe selection and mask propagation", "anchorframe"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "anchorframe 0.1.0");

  fs::path spec_path, synth_out;
  auto* synth = app.add_subcommand("synth", "Render a synthetic scene to a frame directory");
  synth->add_option("--spec", spec_path, "scene.json")->required();
  synth->add_option("--out", synth_out, "output directory")->required();

  SelectArgs sel;
  std::string config_path, bbox;
  auto* select = app.add_subcommand("select", "Select a keyframe and propagate its mask");
  select->add_option("--frames", sel.frames, "directory of frame_NNNNNN.pgm|ppm")->required();
  select->add_option("--prompt", sel.prompt, "editing instruction")->required();
  auto* config_opt = select->add_option("--config", config_path, "run configuration JSON");
  auto* bbox_opt = select->add_option("--bbox", bbox, "user box override t:x1,y1,x2,y2");
  select->add_option("--out", sel.out, "output directory")->capture_default_str();

  fs::path result_dir, truth_path;
  double floor = 0.8;
  auto* eval = app.add_subcommand("eval", "Score a selection run against ground truth");
  eval->add_option("--result", result_dir, "directory written by select")->required();
  eval->add_option("--truth", truth_path, "truth.json")->required();
  eval->add_option("--visibility-floor", floor, "minimum truth visibility for tube IoU")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));

  fs::path pred, target, mask;
  double gamma = 0.0;
  auto* loss = app.add_subcommand("loss", "Region-weighted MSE of AFT1 tensors");
  loss->add_option("--pred", pred, "prediction tensor")->required();
  loss->add_option("--target", target, "target tensor")->required();
  loss->add_option("--mask", mask, "binary mask tensor")->required();
  loss->add_option("--gamma", gamma, "region weight")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "anchorframe: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(spec_path, synth_out, out, err);
    if (select->parsed()) {
      if (config_opt->count() > 0) sel.config = config_path;
      if (bbox_opt->count() > 0) sel.bbox = bbox;
      return cmd_select(sel, out, err);
    }
    if (eval->parsed()) return cmd_eval(result_dir, truth_path, floor, out, err);
    if (loss->parsed()) {
      if (!(gamma >= 0.0)) throw Error(ErrorCode::kInput, "--gamma must be >= 0");
      return cmd_loss(pred, target, mask, gamma, out, err);
    }
  } catch (const Error& e) {
    err << "anchorframe: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    err << "anchorframe: malformed JSON: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "anchorframe: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "anchorframe: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace anchorframe::cli
