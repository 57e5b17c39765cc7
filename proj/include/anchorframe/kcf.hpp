#pragma once

#include <cstddef>
#include <vector>

#include "anchorframe/fft.hpp"
#include "anchorframe/geometry.hpp"
#include "anchorframe/image.hpp"

namespace anchorframe {

struct TrackerConfig {
  std::size_t template_size = 64;
  double padding = 1.5;
  double kernel_sigma = 0.5;
  double target_sigma_factor = 0.1;
  double ridge_lambda = 1e-4;
  double interp_factor = 0.075;
  double psr_occlusion_threshold = 5.0;

  /// Throws kConfig on an out-of-range field.
  void validate() const;
};

/// Trained filter for one target. Single owner; never share between threads.
struct TrackerState {
  ComplexGrid model_alpha_spectrum;
  RealGrid model_template;
  ComplexGrid model_template_spectrum;
  double model_template_energy = 0.0;
  BoundingBox current_box;
  RealGrid window;
  ComplexGrid target_response_spectrum;
  // Unclipped target geometry. current_box is this clipped to the frame.
  double center_x = 0.0;
  double center_y = 0.0;
  double target_width = 0.0;
  double target_height = 0.0;
  TrackerConfig config;
};

struct TrackStep {
  BoundingBox box;
  double psr = 0.0;
  bool occluded = false;
};

enum class Direction { kForward, kBackward };

/// Gaussian-kernel correlation over every cyclic shift, evaluated through
/// the FFT. Both inputs must share a power-of-two shape.
RealGrid gaussian_kernel_correlation(const RealGrid& x, const RealGrid& z,
                                     double sigma);

/// Hann window of size n x n.
RealGrid cosine_window(std::size_t n);

/// Gaussian regression target with its peak at (0,0) and cyclic wrap.
RealGrid gaussian_target(std::size_t n, double sigma);

/// Zero-mean, windowed grayscale features of the padded patch around
/// (center, size).
RealGrid extract_features(const Frame& frame, double center_x, double center_y,
                          double target_width, double target_height,
                          const TrackerConfig& cfg, const RealGrid& window);

/// Peak-to-sidelobe ratio. The sidelobe excludes an 11x11 cyclic window
/// around the peak.
double peak_to_sidelobe(const RealGrid& response, std::size_t peak_row,
                        std::size_t peak_col);

TrackerState train(const Frame& frame, const BoundingBox& box,
                   const TrackerConfig& cfg);

/// Locates the target in `frame` and moves state.current_box. The model is
/// left untouched.
TrackStep detect(TrackerState& state, const Frame& frame);

/// Blends the model towards one trained at state.current_box.
void update(TrackerState& state, const Frame& frame, const TrackerConfig& cfg);

/// Pluggable forward/backward tracking operator. Implementations must be
/// safe to call concurrently on the same immutable video.
class SegmentTracker {
 public:
  virtual ~SegmentTracker() = default;

  /// One step per visited frame, start frame excluded. The walk stops at the
  /// sequence boundary, so the result may be shorter than `steps`.
  virtual std::vector<TrackStep> track_segment(const VideoSequence& video,
                                               FrameIndex start,
                                               const BoundingBox& start_box,
                                               Direction direction,
                                               std::size_t steps) const = 0;
};

/// Fixed-scale KCF. Occluded steps coast: the box holds its last position
/// and the model is frozen.
class KcfTracker final : public SegmentTracker {
 public:
  explicit KcfTracker(TrackerConfig cfg = {});

  const TrackerConfig& config() const { return cfg_; }

  std::vector<TrackStep> track_segment(const VideoSequence& video,
                                       FrameIndex start,
                                       const BoundingBox& start_box,
                                       Direction direction,
                                       std::size_t steps) const override;

 private:
  TrackerConfig cfg_;
};

std::vector<TrackStep> track_segment(const VideoSequence& video,
                                     FrameIndex start,
                                     const BoundingBox& start_box,
                                     Direction direction, std::size_t steps,
                                     const TrackerConfig& cfg);

}  // namespace anchorframe
