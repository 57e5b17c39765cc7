#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "anchorframe/geometry.hpp"
#include "anchorframe/image.hpp"

namespace anchorframe {

/// Counter-based generator (SplitMix64). Every random draw in scene
/// generation and the mock services goes through this.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();
  /// Standard normal via Box-Muller.
  double normal();

  /// Stateless hash of (seed, a, b, c).
  static std::uint64_t hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                            std::uint64_t c = 0);

 private:
  std::uint64_t state_;
};

enum class TextureKind { kFlat, kChecker, kNoise, kDynamicNoise };

struct TextureSpec {
  TextureKind kind = TextureKind::kNoise;
  int cell = 4;
  std::array<std::uint8_t, 3> dark{0, 0, 0};
  std::array<std::uint8_t, 3> light{255, 255, 255};
};

enum class PathKind { kStatic, kLinear, kSinusoidal };

/// Top-left position over time.
struct PathSpec {
  PathKind kind = PathKind::kStatic;
  std::array<double, 2> start{0, 0};
  std::array<double, 2> velocity{0, 0};
  std::array<double, 2> amplitude{0, 0};
  double period = 40.0;

  /// Integer top-left at frame t (rounded half-up).
  std::pair<int, int> position(std::size_t t) const;
};

struct AttributePatchSpec {
  /// Sub-box relative to the target, each coordinate in [0,1].
  std::array<double, 4> box{0.25, 0.25, 0.75, 0.75};
  TextureSpec texture;
  /// Frames on which the patch faces the camera; nullopt = never.
  std::optional<std::array<std::size_t, 2>> visible_interval;
};

struct TargetSpec {
  std::array<int, 2> size{48, 48};
  TextureSpec texture;
  PathSpec path;
  std::optional<AttributePatchSpec> attribute_patch;
};

struct OccluderSpec {
  std::array<int, 2> size{64, 64};
  TextureSpec texture;
  PathSpec path;
  std::array<std::size_t, 2> active_interval{0, 0};
};

struct SceneSpec {
  std::string name;
  int width = 320;
  int height = 240;
  std::size_t num_frames = 81;
  std::uint64_t seed = 0;
  TextureSpec background;
  TargetSpec target;
  std::optional<OccluderSpec> occluder;

  /// Throws kSpec when the spec cannot be rendered.
  void validate() const;
};

struct TruthFrame {
  BoundingBox box;  // on-screen target extent
  double visibility = 0.0;
  double attribute_visibility = 0.0;
  std::optional<BoundingBox> attribute_box;  // on-screen patch extent
};

struct GroundTruth {
  int width = 0;
  int height = 0;
  std::vector<TruthFrame> frames;

  std::size_t size() const { return frames.size(); }
  const TruthFrame& operator[](FrameIndex t) const { return frames[t]; }
};

/// Pure, bit-deterministic render: background, target, attribute patch,
/// occluder. Visibility ratios come from per-pixel counts.
std::pair<VideoSequence, GroundTruth> generate_scene(const SceneSpec& spec);

void to_json(nlohmann::json& j, const TextureSpec& t);
void from_json(const nlohmann::json& j, TextureSpec& t);
void to_json(nlohmann::json& j, const PathSpec& p);
void from_json(const nlohmann::json& j, PathSpec& p);
void to_json(nlohmann::json& j, const SceneSpec& s);
void from_json(const nlohmann::json& j, SceneSpec& s);
void to_json(nlohmann::json& j, const GroundTruth& g);
void from_json(const nlohmann::json& j, GroundTruth& g);

SceneSpec read_scene_spec(const std::filesystem::path& path);
GroundTruth read_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth);

/// Specs in `dir` (*.json), sorted by file name.
std::vector<SceneSpec> load_scene_corpus(const std::filesystem::path& dir);

}  // namespace anchorframe
