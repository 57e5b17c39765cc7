#include "anchorframe/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>

#include "anchorframe/error.hpp"
#include "json_util.hpp"

namespace anchorframe {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<Candidate> propose_candidates(const VideoSequence& video,
                                          const EditPrompt& prompt,
                                          const Detector& detector,
                                          const SelectorConfig& cfg) {
  cfg.validate();
  const double w = video.width();
  const double h = video.height();
  bool any_detection = false;
  std::vector<Candidate> survivors;
  for (FrameIndex t = 0; t < video.size(); ++t) {
    const auto dets = detector.detect_boxes(video[t], t, prompt.object_prompt);
    any_detection = any_detection || !dets.empty();
    std::optional<Candidate> best;
    for (const auto& d : dets) {
      if (!d.box.valid()) continue;
      BoundingBox box;
      try {
        box = clamp_box(d.box, w, h);
      } catch (const Error&) {
        continue;
      }
      const double s_text = d.s_text * spatial_prior_factor(box, prompt.spatial_prior, w, h,
                                                            cfg.spatial_penalty);
      if (!best || s_text > best->detection.s_text) {
        best = Candidate{t, Detection{box, s_text}, 0.0, 0.0};
      }
    }
    if (!best) continue;
    best->s_comp = completeness_score(best->detection.box, w, h, cfg.tau);
    best->s_base = base_score(best->detection.s_text, best->s_comp);
    if (best->s_base > 0.0) survivors.push_back(*best);
  }
  if (!any_detection) {
    throw Error(ErrorCode::kNoTargetFound,
                "detector found no '" + prompt.object_prompt + "' in any of " +
                    std::to_string(video.size()) +
                    " frames; check the prompt or supply a box with --bbox");
  }
  std::stable_sort(survivors.begin(), survivors.end(),
                   [](const Candidate& a, const Candidate& b) { return a.s_base > b.s_base; });
  if (survivors.size() > cfg.top_m) survivors.resize(cfg.top_m);
  return survivors;
}

std::size_t argmax_candidate(const std::vector<CandidateScore>& scores) {
  if (scores.empty()) throw Error(ErrorCode::kNoTargetFound, "no scored candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    const auto& c = scores[i];
    const auto& b = scores[best];
    if (c.s_final > b.s_final || (c.s_final == b.s_final && c.frame < b.frame)) best = i;
  }
  return best;
}

KeyframeResult select_keyframe(const VideoSequence& video, std::string_view raw_prompt,
                               const SelectorConfig& cfg, const SelectionInputs& inputs,
                               const std::optional<UserBoxOverride>& override_box) {
  cfg.validate();
  KeyframeResult result;
  result.prompt = parse_prompt(raw_prompt, inputs.keywords != nullptr
                                               ? *inputs.keywords
                                               : KeywordTables::builtin());
  const double w = video.width();
  const double h = video.height();

  std::optional<Candidate> user;
  if (override_box) {
    if (override_box->frame >= video.size()) {
      throw Error(ErrorCode::kInput, "override frame " + std::to_string(override_box->frame) +
                                         " outside sequence of length " +
                                         std::to_string(video.size()));
    }
    require_valid(override_box->box);
    const BoundingBox box = clamp_box(override_box->box, w, h);
    const double s_comp = completeness_score(box, w, h, cfg.tau);
    user = Candidate{override_box->frame, Detection{box, 1.0}, s_comp,
                     base_score(1.0, s_comp)};
  }

  std::vector<Candidate> pool;
  try {
    pool = propose_candidates(video, result.prompt, inputs.detector, cfg);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoTargetFound || !user) throw;
  }
  if (user) {
    std::erase_if(pool, [&](const Candidate& c) { return c.frame == user->frame; });
    pool.push_back(*user);
  }
  if (pool.empty()) {
    throw Error(ErrorCode::kNoTargetFound,
                "every detection of '" + result.prompt.object_prompt +
                    "' touches the frame border; supply a box with --bbox");
  }

  const Attribute attribute = result.prompt.attribute;
  std::vector<std::future<CandidateScore>> jobs;
  jobs.reserve(pool.size());
  for (const Candidate& c : pool) {
    jobs.push_back(std::async(std::launch::async, [&video, &cfg, &inputs, attribute, c] {
      CandidateScore s;
      s.frame = c.frame;
      s.box = c.detection.box;
      s.s_text = c.detection.s_text;
      s.s_comp = c.s_comp;
      s.s_base = c.s_base;
      // A single-frame video has no motion evidence either way.
      s.s_cyc = cycle_consistency_score(video, c.frame, c.detection.box, cfg.delta_t,
                                        inputs.tracker)
                    .value_or(1.0);
      s.s_attr = inputs.scorer.attribute_visibility(crop(video[c.frame], c.detection.box),
                                                    attribute, {c.frame, c.detection.box});
      s.s_final = utility(s.s_base, s.s_cyc, s.s_attr, cfg);
      return s;
    }));
  }
  for (auto& j : jobs) result.all_candidates.push_back(j.get());
  std::sort(result.all_candidates.begin(), result.all_candidates.end(),
            [](const CandidateScore& a, const CandidateScore& b) { return a.frame < b.frame; });
  const auto& best = result.all_candidates[argmax_candidate(result.all_candidates)];
  result.k_star = best.frame;
  result.box = best.box;
  return result;
}

Frame rasterize_mask(const BoundingBox& box, int width, int height) {
  Frame mask(width, height, 1, 0);
  const PixelRect r = rasterize(box, width, height);
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) mask.at(x, y) = 255;
  }
  return mask;
}

MaskTube propagate_masks(const VideoSequence& video, FrameIndex keyframe,
                         const BoundingBox& box, const SegmentTracker& tracker) {
  require_valid(box);
  if (keyframe >= video.size()) {
    throw Error(ErrorCode::kInput, "keyframe " + std::to_string(keyframe) +
                                       " outside sequence of length " +
                                       std::to_string(video.size()));
  }
  const BoundingBox start = clamp_box(box, video.width(), video.height());
  const std::size_t n_fwd = video.size() - 1 - keyframe;
  const std::size_t n_bwd = keyframe;
  auto fwd = std::async(std::launch::async, [&] {
    return tracker.track_segment(video, keyframe, start, Direction::kForward, n_fwd);
  });
  auto bwd = std::async(std::launch::async, [&] {
    return tracker.track_segment(video, keyframe, start, Direction::kBackward, n_bwd);
  });
  const auto forward = fwd.get();
  const auto backward = bwd.get();

  std::vector<std::optional<TrackStep>> steps(video.size());
  steps[keyframe] = TrackStep{start, 0.0, false};
  for (std::size_t i = 0; i < forward.size() && i < n_fwd; ++i) {
    steps[keyframe + 1 + i] = forward[i];
  }
  for (std::size_t i = 0; i < backward.size() && i < n_bwd; ++i) {
    steps[keyframe - 1 - i] = backward[i];
  }
  // A tracker that stopped early leaves gaps; coast the nearest box
  // outwards so the tube stays dense.
  for (FrameIndex t = keyframe + 1; t < video.size(); ++t) {
    if (!steps[t]) steps[t] = TrackStep{steps[t - 1]->box, 0.0, true};
  }
  for (FrameIndex t = keyframe; t-- > 0;) {
    if (!steps[t]) steps[t] = TrackStep{steps[t + 1]->box, 0.0, true};
  }

  MaskTube tube;
  tube.entries.reserve(video.size());
  for (FrameIndex t = 0; t < video.size(); ++t) {
    const TrackStep& s = *steps[t];
    tube.entries.push_back(MaskTubeEntry{
        t, s.box, s.occluded, rasterize_mask(s.box, video.width(), video.height())});
  }
  return tube;
}

// ---- serialization -------------------------------------------------------------

namespace {

json box_json(const BoundingBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

BoundingBox box_from(const json& j) {
  const auto v = j.get<std::array<double, 4>>();
  return {v[0], v[1], v[2], v[3]};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

}  // namespace

json result_to_json(const KeyframeResult& result, const json& config) {
  json candidates = json::array();
  for (const auto& c : result.all_candidates) {
    candidates.push_back(json{{"frame", c.frame},   {"box", box_json(c.box)},
                              {"s_text", c.s_text}, {"s_comp", c.s_comp},
                              {"s_base", c.s_base}, {"s_cyc", c.s_cyc},
                              {"s_attr", c.s_attr}, {"s_final", c.s_final}});
  }
  return json{{"k_star", result.k_star},
              {"box", box_json(result.box)},
              {"prompt",
               {{"raw", result.prompt.raw},
                {"object", result.prompt.object_prompt},
                {"spatial", std::string(to_string(result.prompt.spatial_prior))},
                {"attribute", std::string(to_string(result.prompt.attribute))}}},
              {"candidates", candidates},
              {"config", config}};
}

KeyframeResult result_from_json(const json& j) {
  try {
    detail::check_keys(j, {"k_star", "box", "prompt", "candidates", "config"}, "result",
                       ErrorCode::kInput);
    KeyframeResult r;
    j.at("k_star").get_to(r.k_star);
    r.box = box_from(j.at("box"));
    const json& p = j.at("prompt");
    p.at("raw").get_to(r.prompt.raw);
    p.at("object").get_to(r.prompt.object_prompt);
    r.prompt.spatial_prior = spatial_prior_from_string(p.at("spatial").get<std::string>());
    r.prompt.attribute = attribute_from_string(p.at("attribute").get<std::string>());
    for (const auto& cj : j.at("candidates")) {
      CandidateScore c;
      cj.at("frame").get_to(c.frame);
      c.box = box_from(cj.at("box"));
      cj.at("s_text").get_to(c.s_text);
      cj.at("s_comp").get_to(c.s_comp);
      cj.at("s_base").get_to(c.s_base);
      cj.at("s_cyc").get_to(c.s_cyc);
      cj.at("s_attr").get_to(c.s_attr);
      cj.at("s_final").get_to(c.s_final);
      r.all_candidates.push_back(c);
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInput, std::string("malformed result.json: ") + e.what());
  }
}

json tube_to_json(const MaskTube& tube) {
  json frames = json::array();
  int w = 0;
  int h = 0;
  for (const auto& e : tube.entries) {
    w = e.mask.width();
    h = e.mask.height();
    frames.push_back(json{{"frame", e.frame}, {"box", box_json(e.box)}, {"occluded", e.occluded}});
  }
  return json{{"width", w}, {"height", h}, {"frames", frames}};
}

MaskTube tube_from_json(const json& j) {
  try {
    const int w = j.at("width").get<int>();
    const int h = j.at("height").get<int>();
    MaskTube tube;
    for (const auto& fj : j.at("frames")) {
      MaskTubeEntry e;
      fj.at("frame").get_to(e.frame);
      e.box = box_from(fj.at("box"));
      fj.at("occluded").get_to(e.occluded);
      e.mask = rasterize_mask(e.box, w, h);
      tube.entries.push_back(std::move(e));
    }
    return tube;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInput, std::string("malformed tube.json: ") + e.what());
  }
}

KeyframeResult read_result(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInput, path.string() + ": " + e.what());
  }
  return result_from_json(j);
}

std::vector<ManifestEntry> write_result(const KeyframeResult& result, const MaskTube& tube,
                                        const fs::path& out_dir, const json& config) {
  std::error_code ec;
  fs::create_directories(out_dir / "masks", ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create " + (out_dir / "masks").string() + ": " +
                                    ec.message());
  }
  std::vector<fs::path> written;
  written.push_back(out_dir / "result.json");
  write_text(written.back(), result_to_json(result, config).dump(2) + "\n");
  written.push_back(out_dir / "tube.json");
  write_text(written.back(), tube_to_json(tube).dump(2) + "\n");
  for (const auto& e : tube.entries) {
    char name[32];
    std::snprintf(name, sizeof(name), "mask_%06zu.pgm", e.frame);
    written.push_back(out_dir / "masks" / name);
    write_netpbm_file(written.back(), e.mask);
  }
  std::vector<ManifestEntry> manifest;
  for (const auto& p : written) manifest.push_back({p, fs::file_size(p)});
  return manifest;
}

}  // namespace anchorframe
