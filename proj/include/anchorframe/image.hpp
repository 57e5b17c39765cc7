#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "anchorframe/geometry.hpp"

namespace anchorframe {

/// 8-bit raster, row-major, interleaved channels (1 = gray, 3 = RGB).
class Frame {
 public:
  Frame() = default;
  Frame(int width, int height, int channels, std::uint8_t fill = 0);
  Frame(int width, int height, int channels, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels_[index(x, y, c)];
  }
  std::uint8_t& at(int x, int y, int c = 0) { return pixels_[index(x, y, c)]; }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Ordered frames sharing one geometry.
class VideoSequence {
 public:
  VideoSequence() = default;
  explicit VideoSequence(std::vector<Frame> frames);

  std::size_t size() const { return frames_.size(); }
  const Frame& operator[](FrameIndex t) const { return frames_[t]; }
  const std::vector<Frame>& frames() const { return frames_; }
  int width() const { return frames_.front().width(); }
  int height() const { return frames_.front().height(); }
  int channels() const { return frames_.front().channels(); }

 private:
  std::vector<Frame> frames_;
};

/// Decodes binary PGM (P5) or PPM (P6) with maxval 255.
Frame read_netpbm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_netpbm(const Frame& frame);

Frame read_netpbm_file(const std::filesystem::path& path);
void write_netpbm_file(const std::filesystem::path& path, const Frame& frame);

/// Reads `frame_%06d.pgm|ppm` files contiguous from index 0.
VideoSequence read_sequence(const std::filesystem::path& dir);
void write_sequence(const std::filesystem::path& dir, const VideoSequence& video);

/// ITU-R 601 luma, rounded half-up.
Frame to_grayscale(const Frame& frame);

/// Output is round(w) x round(h); pixel (i,j) samples the source at
/// (round(x1)+i, round(y1)+j), clamped into the frame (edge replication).
Frame crop(const Frame& frame, const BoundingBox& b);

/// Bilinear resampling with half-pixel center alignment.
Frame resize_bilinear(const Frame& frame, int out_w, int out_h);

}  // namespace anchorframe
