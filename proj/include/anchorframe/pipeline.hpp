#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "anchorframe/clients.hpp"
#include "anchorframe/geometry.hpp"
#include "anchorframe/image.hpp"
#include "anchorframe/kcf.hpp"
#include "anchorframe/scoring.hpp"

namespace anchorframe {

/// A frame that survived proposal: its best detection and base score.
struct Candidate {
  FrameIndex frame = 0;
  Detection detection;  // s_text already includes the spatial-prior factor
  double s_comp = 0.0;
  double s_base = 0.0;
};

struct CandidateScore {
  FrameIndex frame = 0;
  BoundingBox box;
  double s_text = 0.0;
  double s_comp = 0.0;
  double s_base = 0.0;
  double s_cyc = 0.0;
  double s_attr = 0.0;
  double s_final = 0.0;

  friend bool operator==(const CandidateScore&, const CandidateScore&) = default;
};

struct KeyframeResult {
  FrameIndex k_star = 0;
  BoundingBox box;
  std::vector<CandidateScore> all_candidates;  // in frame order
  EditPrompt prompt;

  friend bool operator==(const KeyframeResult&, const KeyframeResult&) = default;
};

struct UserBoxOverride {
  FrameIndex frame = 0;
  BoundingBox box;
};

struct MaskTubeEntry {
  FrameIndex frame = 0;
  BoundingBox box;
  bool occluded = false;
  Frame mask;  // 1 channel, 255 inside the box
};

struct MaskTube {
  std::vector<MaskTubeEntry> entries;  // one per frame, in order

  std::size_t size() const { return entries.size(); }
};

/// Top-M frames by s_base (ties to the lower index). Frames without a
/// detection or with s_base = 0 are dropped. Throws kNoTargetFound when no
/// frame yields any detection.
std::vector<Candidate> propose_candidates(const VideoSequence& video,
                                          const EditPrompt& prompt,
                                          const Detector& detector,
                                          const SelectorConfig& cfg);

struct SelectionInputs {
  const Detector& detector;
  const AttributeScorer& scorer;
  const SegmentTracker& tracker;
  const KeywordTables* keywords = nullptr;  // builtin when null
};

/// Physics- and semantic-driven keyframe selection. Candidate scoring runs
/// in parallel; the argmax is order independent (ties to the lower index).
KeyframeResult select_keyframe(const VideoSequence& video, std::string_view raw_prompt,
                               const SelectorConfig& cfg, const SelectionInputs& inputs,
                               const std::optional<UserBoxOverride>& override_box = {});

/// Index into `scores` of the maximal s_final, lowest frame on ties.
std::size_t argmax_candidate(const std::vector<CandidateScore>& scores);

/// Rectangular mask with geometry-core rounding.
Frame rasterize_mask(const BoundingBox& box, int width, int height);

/// Bidirectional propagation from the keyframe; one entry per frame.
MaskTube propagate_masks(const VideoSequence& video, FrameIndex keyframe,
                         const BoundingBox& box, const SegmentTracker& tracker);

struct ManifestEntry {
  std::filesystem::path path;
  std::uintmax_t size = 0;
};

/// Writes result.json, tube.json and masks/mask_%06d.pgm under out_dir.
std::vector<ManifestEntry> write_result(const KeyframeResult& result, const MaskTube& tube,
                                        const std::filesystem::path& out_dir,
                                        const nlohmann::json& config = nlohmann::json::object());

nlohmann::json result_to_json(const KeyframeResult& result,
                              const nlohmann::json& config = nlohmann::json::object());
KeyframeResult result_from_json(const nlohmann::json& j);
nlohmann::json tube_to_json(const MaskTube& tube);

/// Tube entries read back from tube.json (masks are regenerated from boxes).
MaskTube tube_from_json(const nlohmann::json& j);

KeyframeResult read_result(const std::filesystem::path& path);

}  // namespace anchorframe
