#pragma once

#include <atomic>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "anchorframe/fft.hpp"
#include "anchorframe/image.hpp"
#include "anchorframe/kcf.hpp"
#include "anchorframe/synth.hpp"

namespace testing {

using namespace anchorframe;

/// Returns the start box at every step.
class IdentityTracker final : public SegmentTracker {
 public:
  std::vector<TrackStep> track_segment(const VideoSequence& video, FrameIndex start,
                                       const BoundingBox& box, Direction dir,
                                       std::size_t steps) const override {
    const std::size_t room = dir == Direction::kForward ? video.size() - 1 - start : start;
    return std::vector<TrackStep>(std::min(steps, room), TrackStep{box, 100.0, false});
  }
};

/// Moves +d per forward step and -d per backward step.
class DriftTracker final : public SegmentTracker {
 public:
  explicit DriftTracker(double d) : d_(d) {}
  std::vector<TrackStep> track_segment(const VideoSequence& video, FrameIndex start,
                                       const BoundingBox& box, Direction dir,
                                       std::size_t steps) const override {
    const std::size_t room = dir == Direction::kForward ? video.size() - 1 - start : start;
    const double d = dir == Direction::kForward ? d_ : -d_;
    std::vector<TrackStep> out;
    BoundingBox b = box;
    for (std::size_t i = 0; i < std::min(steps, room); ++i) {
      b = b.translated(d, 0.0);
      out.push_back({b, 100.0, false});
    }
    return out;
  }

 private:
  double d_;
};

/// Perfect except for backward walks that start at `origin`, which land far
/// away. Only the backward-forward leg of a cycle at `origin` fails.
class BackwardFailTracker final : public SegmentTracker {
 public:
  explicit BackwardFailTracker(FrameIndex origin = 0) : origin_(origin) {}
  std::vector<TrackStep> track_segment(const VideoSequence& video, FrameIndex start,
                                       const BoundingBox& box, Direction dir,
                                       std::size_t steps) const override {
    const std::size_t room = dir == Direction::kForward ? video.size() - 1 - start : start;
    BoundingBox b = box;
    if (dir == Direction::kBackward && start == origin_) {
      b = box.translated(10.0 * (box.width() + 1.0), 0.0);
    }
    return std::vector<TrackStep>(std::min(steps, room), TrackStep{b, 100.0, false});
  }

 private:
  FrameIndex origin_;
};

/// Counts calls; otherwise the identity tracker.
class CountingTracker final : public SegmentTracker {
 public:
  std::vector<TrackStep> track_segment(const VideoSequence& video, FrameIndex start,
                                       const BoundingBox& box, Direction dir,
                                       std::size_t steps) const override {
    ++calls;
    return IdentityTracker{}.track_segment(video, start, box, dir, steps);
  }
  mutable std::atomic<int> calls{0};
};

inline VideoSequence blank_video(std::size_t n, int w = 64, int h = 48, int channels = 1) {
  return VideoSequence(std::vector<Frame>(n, Frame(w, h, channels, 0)));
}

/// Seeded value-noise texture, smooth enough for correlation tracking.
inline Frame noise_frame(int w, int h, std::uint64_t seed, int cell = 4) {
  Frame f(w, h, 1);
  SplitMix64 rng(seed);
  const int gw = w / cell + 2;
  const int gh = h / cell + 2;
  std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
  for (auto& v : lattice) v = rng.uniform();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int gx = x / cell, gy = y / cell;
      const double fx = static_cast<double>(x % cell) / cell;
      const double fy = static_cast<double>(y % cell) / cell;
      const auto L = [&](int i, int j) { return lattice[static_cast<std::size_t>(j) * gw + i]; };
      const double top = L(gx, gy) + fx * (L(gx + 1, gy) - L(gx, gy));
      const double bot = L(gx, gy + 1) + fx * (L(gx + 1, gy + 1) - L(gx, gy + 1));
      f.at(x, y) = static_cast<std::uint8_t>(std::lround(255.0 * (top + fy * (bot - top))));
    }
  }
  return f;
}

/// Cyclic shift: out(x, y) = in(x - dx, y - dy).
inline Frame shift_cyclic(const Frame& in, int dx, int dy) {
  Frame out(in.width(), in.height(), in.channels());
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) {
      const int sx = ((x - dx) % in.width() + in.width()) % in.width();
      const int sy = ((y - dy) % in.height() + in.height()) % in.height();
      for (int c = 0; c < in.channels(); ++c) out.at(x, y, c) = in.at(sx, sy, c);
    }
  }
  return out;
}

/// O(N^4) reference DFT.
inline ComplexGrid naive_dft(const ComplexGrid& x) {
  const std::size_t n = x.n;
  ComplexGrid out(n);
  const double two_pi = 2.0 * std::acos(-1.0);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      std::complex<double> acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
          const double ang = -two_pi * static_cast<double>(u * r + v * c) / static_cast<double>(n);
          acc += x(r, c) * std::complex<double>(std::cos(ang), std::sin(ang));
        }
      }
      out(u, v) = acc;
    }
  }
  return out;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "af") {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path corpus_dir() { return ANCHORFRAME_TEST_CORPUS; }

/// Small static scene used by several pipeline and CLI tests.
inline SceneSpec static_scene(int w = 160, int h = 120, std::size_t frames = 21) {
  SceneSpec s;
  s.name = "test_static";
  s.width = w;
  s.height = h;
  s.num_frames = frames;
  s.seed = 11;
  s.background = {TextureKind::kNoise, 8, {20, 20, 20}, {90, 90, 90}};
  s.target.size = {40, 40};
  s.target.texture = {TextureKind::kNoise, 4, {0, 0, 0}, {255, 255, 255}};
  s.target.path.start = {60, 40};
  return s;
}

}  // namespace testing
