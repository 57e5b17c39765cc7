#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "anchorframe/geometry.hpp"
#include "anchorframe/image.hpp"
#include "anchorframe/kcf.hpp"

namespace anchorframe {

struct SelectorConfig {
  double tau = 0.05;
  std::size_t delta_t = 5;
  std::size_t top_m = 5;
  double lambda_b = 0.5;
  double lambda_c = 0.3;
  double lambda_p = 0.2;
  /// Multiplier applied to s_text when a box violates the spatial prior.
  double spatial_penalty = 0.25;

  void validate() const;
};

enum class SpatialPrior { kNone, kLeft, kRight, kTop, kBottom, kCenter };
enum class Attribute { kColor, kMaterial, kPart, kShape, kStyle, kObjectVisibility };

std::string_view to_string(SpatialPrior prior);
std::string_view to_string(Attribute attribute);
SpatialPrior spatial_prior_from_string(std::string_view s);
Attribute attribute_from_string(std::string_view s);

struct EditPrompt {
  std::string raw;
  std::string object_prompt;
  SpatialPrior spatial_prior = SpatialPrior::kNone;
  Attribute attribute = Attribute::kObjectVisibility;

  friend bool operator==(const EditPrompt&, const EditPrompt&) = default;
};

/// Word -> category table driving parse_prompt. Categories are the spatial
/// priors (left, right, top, bottom, center), the attribute names (color,
/// material, part, shape, style), `verb` and `stop`.
class KeywordTables {
 public:
  /// The tables shipped in data/keywords.txt.
  static KeywordTables builtin();
  /// `category<TAB>word` per line; blank lines and `#` comments skipped.
  static KeywordTables load(const std::filesystem::path& path);
  static KeywordTables parse(std::string_view text);

  void add(std::string category, std::string word);
  const std::string* category_of(const std::string& word) const;
  std::size_t size() const { return words_.size(); }

  friend bool operator==(const KeywordTables&, const KeywordTables&) = default;

 private:
  std::unordered_map<std::string, std::string> words_;
};

EditPrompt parse_prompt(std::string_view text,
                        const KeywordTables& tables = KeywordTables::builtin());

/// Border-margin score: min(1, max(0, d_min / (tau * min(W,H)))).
double completeness_score(const BoundingBox& box, double width, double height,
                          double tau);

double base_score(double s_text, double s_comp);

double utility(double s_base, double s_cyc, double s_attr,
               const SelectorConfig& cfg);

/// 1.0 when the box center satisfies `prior`, otherwise `penalty`.
double spatial_prior_factor(const BoundingBox& box, SpatialPrior prior,
                            double width, double height, double penalty = 0.25);

/// One leg of the cycle: out and back.
struct CycleLeg {
  Direction direction = Direction::kForward;
  std::size_t steps = 0;
  std::size_t occluded_steps = 0;
  std::optional<BoundingBox> returned_box;
  double score = 0.0;
};

struct CycleResult {
  std::vector<CycleLeg> legs;  // computable legs only
  double score = 0.0;
};

/// Forward-backward and backward-forward tracking agreement at frame t.
/// Each leg scores IoU(box, returned box) scaled by the fraction of its
/// steps that were not flagged occluded. Returns nullopt when no leg fits
/// inside the sequence (T = 1).
std::optional<CycleResult> cycle_consistency(const VideoSequence& video,
                                             FrameIndex t, const BoundingBox& box,
                                             std::size_t delta_t,
                                             const SegmentTracker& tracker);

std::optional<double> cycle_consistency_score(const VideoSequence& video,
                                              FrameIndex t,
                                              const BoundingBox& box,
                                              std::size_t delta_t,
                                              const SegmentTracker& tracker);

std::optional<double> cycle_consistency_score(const VideoSequence& video,
                                              FrameIndex t,
                                              const BoundingBox& box,
                                              std::size_t delta_t,
                                              const TrackerConfig& tracker_cfg);

/// Dense real tensor, row-major.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// mean(r^2) + gamma * mean((r * mask)^2) with r = pred - target.
double region_weighted_mse(const Tensor& pred, const Tensor& target,
                           const Tensor& mask, double gamma);

/// "AFT1" magic, u32 rank, u32 dims..., then float64 payload, little-endian.
Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor decode_tensor(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_tensor(const Tensor& tensor);

}  // namespace anchorframe
