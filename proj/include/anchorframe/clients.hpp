#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "anchorframe/geometry.hpp"
#include "anchorframe/image.hpp"
#include "anchorframe/scoring.hpp"
#include "anchorframe/synth.hpp"

namespace anchorframe {

struct Detection {
  BoundingBox box;
  double s_text = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct ServiceEndpoint {
  std::string base_url;
  int timeout_ms = 10000;
  int max_retries = 2;
  int max_in_flight = 4;

  void validate() const;
};

/// Where a crop came from. Remote scorers only see the pixels; the mock
/// scorer answers from ground truth and needs the location.
struct CropRegion {
  FrameIndex frame = 0;
  BoundingBox box;
};

/// Open-vocabulary detector: S_text source.
class Detector {
 public:
  virtual ~Detector() = default;
  /// Detections sorted by descending s_text. An empty list is a valid answer.
  virtual std::vector<Detection> detect_boxes(const Frame& frame, FrameIndex t,
                                              std::string_view object_prompt) const = 0;
};

/// Attribute-visibility evaluator: S_attr source, in [0,1].
class AttributeScorer {
 public:
  virtual ~AttributeScorer() = default;
  virtual double attribute_visibility(const Frame& crop, Attribute attribute,
                                      const CropRegion& region) const = 0;
};

struct MockDetectorConfig {
  double jitter_sigma = 0.0;
  double score_noise = 0.0;
  double visibility_threshold = 0.25;
  std::uint64_t seed = 0;
};

/// Answers from a ground-truth sidecar. Confidence is the truth visibility
/// reduced by seeded |N(0, score_noise)| noise; frames below
/// visibility_threshold yield nothing.
class MockDetector final : public Detector {
 public:
  MockDetector(GroundTruth truth, MockDetectorConfig cfg = {});

  std::vector<Detection> detect_boxes(const Frame& frame, FrameIndex t,
                                      std::string_view object_prompt) const override;

 private:
  GroundTruth truth_;
  MockDetectorConfig cfg_;
};

/// Returns the truth attribute visibility scaled by how much of the
/// attribute patch the crop covers (0 when it misses the patch). For the
/// object-visibility category the target box and visibility are used.
class MockAttributeScorer final : public AttributeScorer {
 public:
  explicit MockAttributeScorer(GroundTruth truth);

  double attribute_visibility(const Frame& crop, Attribute attribute,
                              const CropRegion& region) const override;

 private:
  GroundTruth truth_;
};

/// Per-attribute question strings sent to the remote scorer.
class PromptTemplates {
 public:
  static PromptTemplates builtin();
  static PromptTemplates load(const std::filesystem::path& path);
  static PromptTemplates parse(std::string_view text);

  const std::string& question(Attribute attribute) const;

 private:
  std::map<Attribute, std::string> questions_;
};

namespace detail {
class HttpJsonClient;
}

/// POST {base_url}/detect
///   {"image_ppm_b64": ..., "prompt": ...}
///   -> {"boxes": [{"x1","y1","x2","y2","score"}]}
class RemoteDetector final : public Detector {
 public:
  explicit RemoteDetector(ServiceEndpoint endpoint);
  ~RemoteDetector() override;

  std::vector<Detection> detect_boxes(const Frame& frame, FrameIndex t,
                                      std::string_view object_prompt) const override;

 private:
  std::unique_ptr<detail::HttpJsonClient> http_;
};

/// POST {base_url}/score
///   {"image_ppm_b64": ..., "attribute": ..., "question": ...}
///   -> {"score": f}
class RemoteAttributeScorer final : public AttributeScorer {
 public:
  RemoteAttributeScorer(ServiceEndpoint endpoint,
                        PromptTemplates templates = PromptTemplates::builtin());
  ~RemoteAttributeScorer() override;

  double attribute_visibility(const Frame& crop, Attribute attribute,
                              const CropRegion& region) const override;

 private:
  std::unique_ptr<detail::HttpJsonClient> http_;
  PromptTemplates templates_;
};

/// True when ANCHORFRAME_OFFLINE=1 forces mock backends.
bool offline_forced();

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Parses a /detect response body. All-or-nothing: throws kProtocol on any
/// schema violation.
std::vector<Detection> parse_detect_response(std::string_view body);

/// Parses a /score response body, clamping the score into [0,1].
double parse_score_response(std::string_view body);

}  // namespace anchorframe
