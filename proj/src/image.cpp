#include "anchorframe/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include "anchorframe/error.hpp"

namespace anchorframe {

namespace fs = std::filesystem;

Frame::Frame(int width, int height, int channels, std::uint8_t fill)
    : Frame(width, height, channels,
            std::vector<std::uint8_t>(
                static_cast<std::size_t>(std::max(width, 0)) *
                    std::max(height, 0) * std::max(channels, 0),
                fill)) {}

Frame::Frame(int width, int height, int channels,
             std::vector<std::uint8_t> pixels)
    : width_(width),
      height_(height),
      channels_(channels),
      pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kInput, "frame dimensions must be at least 1x1");
  }
  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::kInput, "frame must have 1 or 3 channels");
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw Error(ErrorCode::kInput, "pixel buffer does not match frame size");
  }
}

VideoSequence::VideoSequence(std::vector<Frame> frames)
    : frames_(std::move(frames)) {
  if (frames_.empty()) {
    throw Error(ErrorCode::kInput, "video sequence is empty");
  }
  const Frame& f0 = frames_.front();
  for (std::size_t t = 1; t < frames_.size(); ++t) {
    const Frame& f = frames_[t];
    if (f.width() != f0.width() || f.height() != f0.height() ||
        f.channels() != f0.channels()) {
      throw Error(ErrorCode::kInput,
                  "frame " + std::to_string(t) + " differs in geometry");
    }
  }
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads a decimal token.
  long read_int(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000L) fail(std::string(what) + " too large");
      ++pos_;
    }
    if (pos_ == start) fail(std::string("expected ") + what);
    return value;
  }

  void expect_single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      fail("expected whitespace after maxval");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::kParse,
                "netpbm: " + msg + " at byte offset " + std::to_string(pos_));
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint8_t round_to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

}  // namespace

Frame read_netpbm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw Error(ErrorCode::kParse,
                "netpbm: expected P5 or P6 magic at byte offset 0");
  }
  const int channels = bytes[1] == '5' ? 1 : 3;
  HeaderReader reader(bytes.subspan(2));
  const long width = reader.read_int("width");
  const long height = reader.read_int("height");
  const long maxval = reader.read_int("maxval");
  if (width < 1 || height < 1) reader.fail("zero image dimension");
  if (maxval != 255) {
    reader.fail("unsupported maxval " + std::to_string(maxval));
  }
  reader.expect_single_whitespace();
  const std::size_t offset = 2 + reader.pos();
  const std::size_t need = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - offset < need) {
    throw Error(ErrorCode::kParse,
                "netpbm: truncated payload at byte offset " +
                    std::to_string(bytes.size()) + " (expected " +
                    std::to_string(offset + need) + " bytes)");
  }
  std::vector<std::uint8_t> pixels(bytes.begin() + offset,
                                   bytes.begin() + offset + need);
  return Frame(static_cast<int>(width), static_cast<int>(height), channels,
               std::move(pixels));
}

std::vector<std::uint8_t> write_netpbm(const Frame& frame) {
  const std::string header = std::string(frame.channels() == 1 ? "P5" : "P6") +
                             "\n" + std::to_string(frame.width()) + " " +
                             std::to_string(frame.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), frame.pixels().begin(), frame.pixels().end());
  return out;
}

Frame read_netpbm_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return read_netpbm(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_netpbm_file(const fs::path& path, const Frame& frame) {
  const auto bytes = write_netpbm(frame);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

VideoSequence read_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  }
  std::vector<Frame> frames;
  for (std::size_t t = 0;; ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06zu", t);
    const fs::path pgm = dir / (std::string(name) + ".pgm");
    const fs::path ppm = dir / (std::string(name) + ".ppm");
    if (fs::exists(ppm)) {
      frames.push_back(read_netpbm_file(ppm));
    } else if (fs::exists(pgm)) {
      frames.push_back(read_netpbm_file(pgm));
    } else {
      break;
    }
  }
  if (frames.empty()) {
    throw Error(ErrorCode::kIo, "no frame_000000.pgm|ppm in " + dir.string());
  }
  return VideoSequence(std::move(frames));
}

void write_sequence(const fs::path& dir, const VideoSequence& video) {
  fs::create_directories(dir);
  const char* ext = video.channels() == 1 ? "pgm" : "ppm";
  for (std::size_t t = 0; t < video.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06zu.%s", t, ext);
    write_netpbm_file(dir / name, video[t]);
  }
}

Frame to_grayscale(const Frame& frame) {
  if (frame.channels() == 1) return frame;
  Frame out(frame.width(), frame.height(), 1);
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      const double v = 0.299 * frame.at(x, y, 0) + 0.587 * frame.at(x, y, 1) +
                       0.114 * frame.at(x, y, 2);
      out.at(x, y) = round_to_byte(v);
    }
  }
  return out;
}

Frame crop(const Frame& frame, const BoundingBox& b) {
  require_valid(b);
  const int out_w = std::max(1, static_cast<int>(std::lround(b.width())));
  const int out_h = std::max(1, static_cast<int>(std::lround(b.height())));
  const long x0 = std::lround(b.x1);
  const long y0 = std::lround(b.y1);
  const int c = frame.channels();
  Frame out(out_w, out_h, c);
  for (int j = 0; j < out_h; ++j) {
    const int sy = static_cast<int>(std::clamp<long>(y0 + j, 0, frame.height() - 1));
    for (int i = 0; i < out_w; ++i) {
      const int sx = static_cast<int>(std::clamp<long>(x0 + i, 0, frame.width() - 1));
      for (int k = 0; k < c; ++k) out.at(i, j, k) = frame.at(sx, sy, k);
    }
  }
  return out;
}

Frame resize_bilinear(const Frame& frame, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) {
    throw Error(ErrorCode::kInput, "resize target must be at least 1x1");
  }
  const int c = frame.channels();
  Frame out(out_w, out_h, c);
  const double sx_scale = static_cast<double>(frame.width()) / out_w;
  const double sy_scale = static_cast<double>(frame.height()) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double sy = std::clamp((y + 0.5) * sy_scale - 0.5, 0.0,
                                 static_cast<double>(frame.height() - 1));
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, frame.height() - 1);
    const double fy = sy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double sx = std::clamp((x + 0.5) * sx_scale - 0.5, 0.0,
                                   static_cast<double>(frame.width() - 1));
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, frame.width() - 1);
      const double fx = sx - x0;
      for (int k = 0; k < c; ++k) {
        const double top = frame.at(x0, y0, k) +
                           fx * (frame.at(x1, y0, k) - frame.at(x0, y0, k));
        const double bottom = frame.at(x0, y1, k) +
                              fx * (frame.at(x1, y1, k) - frame.at(x0, y1, k));
        out.at(x, y, k) = round_to_byte(top + fy * (bottom - top));
      }
    }
  }
  return out;
}

}  // namespace anchorframe
