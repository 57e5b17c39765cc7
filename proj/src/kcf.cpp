#include "anchorframe/kcf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "anchorframe/error.hpp"

namespace anchorframe {

void TrackerConfig::validate() const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kConfig, "tracker config: " + msg);
  };
  if (!is_power_of_two(template_size) || template_size < 4) {
    fail("template_size must be a power of two >= 4");
  }
  if (!(padding > 1.0)) fail("padding must be > 1");
  if (!(kernel_sigma > 0.0)) fail("kernel_sigma must be > 0");
  if (!(target_sigma_factor > 0.0)) fail("target_sigma_factor must be > 0");
  if (!(ridge_lambda > 0.0)) fail("ridge_lambda must be > 0");
  if (!(interp_factor >= 0.0 && interp_factor <= 1.0)) {
    fail("interp_factor must lie in [0,1]");
  }
  if (!std::isfinite(psr_occlusion_threshold)) {
    fail("psr_occlusion_threshold must be finite");
  }
}

namespace {

Complex mul(Complex a, Complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(),
          a.real() * b.imag() + a.imag() * b.real()};
}

double energy(const RealGrid& g) {
  double s = 0.0;
  for (double v : g.data) s += v * v;
  return s;
}

RealGrid kernel_from_spectra(const ComplexGrid& xf, double xx,
                             const ComplexGrid& zf, double zz, double sigma) {
  ComplexGrid cross(xf.n);
  for (std::size_t i = 0; i < xf.data.size(); ++i) {
    cross.data[i] = mul(std::conj(xf.data[i]), zf.data[i]);
  }
  RealGrid k = ifft2(cross);
  const double denom = sigma * sigma * static_cast<double>(xf.n * xf.n);
  for (double& v : k.data) {
    const double dist = std::max(0.0, xx + zz - 2.0 * v);
    v = std::exp(-dist / denom);
  }
  return k;
}

struct PureModel {
  RealGrid features;
  ComplexGrid features_spectrum;
  double features_energy = 0.0;
  ComplexGrid alpha_spectrum;
};

PureModel fit(const Frame& frame, double cx, double cy, double w, double h,
              const TrackerConfig& cfg, const RealGrid& window,
              const ComplexGrid& target_spectrum) {
  PureModel m;
  m.features = extract_features(frame, cx, cy, w, h, cfg, window);
  m.features_spectrum = fft2(m.features);
  m.features_energy = energy(m.features);
  const RealGrid kxx =
      kernel_from_spectra(m.features_spectrum, m.features_energy,
                          m.features_spectrum, m.features_energy,
                          cfg.kernel_sigma);
  const ComplexGrid kf = fft2(kxx);
  m.alpha_spectrum = ComplexGrid(kf.n);
  for (std::size_t i = 0; i < kf.data.size(); ++i) {
    const Complex d = kf.data[i] + cfg.ridge_lambda;
    const double norm = std::norm(d);
    m.alpha_spectrum.data[i] = mul(target_spectrum.data[i], std::conj(d)) / norm;
  }
  return m;
}

void place(TrackerState& state, double cx, double cy, int frame_w, int frame_h) {
  state.center_x = std::clamp(cx, 0.0, static_cast<double>(frame_w));
  state.center_y = std::clamp(cy, 0.0, static_cast<double>(frame_h));
  state.current_box = clamp_box(
      BoundingBox::from_center(state.center_x, state.center_y,
                               state.target_width, state.target_height),
      frame_w, frame_h);
}

}  // namespace

RealGrid gaussian_kernel_correlation(const RealGrid& x, const RealGrid& z,
                                     double sigma) {
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::kConfig, "kernel sigma must be > 0");
  }
  if (x.n != z.n) {
    throw Error(ErrorCode::kShape, "kernel correlation inputs differ in size");
  }
  return kernel_from_spectra(fft2(x), energy(x), fft2(z), energy(z), sigma);
}

RealGrid cosine_window(std::size_t n) {
  RealGrid w(n);
  std::vector<double> line(n);
  for (std::size_t i = 0; i < n; ++i) {
    line[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                    static_cast<double>(n - 1)));
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) w(r, c) = line[r] * line[c];
  }
  return w;
}

RealGrid gaussian_target(std::size_t n, double sigma) {
  RealGrid y(n);
  const auto wrap = [n](std::size_t i) {
    const double d = static_cast<double>(i);
    return i <= n / 2 ? d : d - static_cast<double>(n);
  };
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double dr = wrap(r);
      const double dc = wrap(c);
      y(r, c) = std::exp(-0.5 * (dr * dr + dc * dc) / (sigma * sigma));
    }
  }
  return y;
}

RealGrid extract_features(const Frame& frame, double center_x, double center_y,
                          double target_width, double target_height,
                          const TrackerConfig& cfg, const RealGrid& window) {
  const std::size_t n = cfg.template_size;
  const BoundingBox patch_box = BoundingBox::from_center(
      center_x, center_y, cfg.padding * target_width, cfg.padding * target_height);
  // Grayscale conversion is per pixel, so converting the crop equals
  // cropping the converted frame.
  Frame patch = to_grayscale(crop(frame, patch_box));
  if (patch.width() != static_cast<int>(n) || patch.height() != static_cast<int>(n)) {
    patch = resize_bilinear(patch, static_cast<int>(n), static_cast<int>(n));
  }
  RealGrid f(n);
  double mean = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      f(r, c) = patch.at(static_cast<int>(c), static_cast<int>(r)) / 255.0;
      mean += f(r, c);
    }
  }
  mean /= static_cast<double>(n * n);
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    f.data[i] = (f.data[i] - mean) * window.data[i];
  }
  return f;
}

double peak_to_sidelobe(const RealGrid& response, std::size_t peak_row,
                        std::size_t peak_col) {
  const std::size_t n = response.n;
  constexpr long kHalf = 5;
  const auto cyclic_dist = [n](std::size_t a, std::size_t b) {
    const long d = std::labs(static_cast<long>(a) - static_cast<long>(b));
    return std::min<long>(d, static_cast<long>(n) - d);
  };
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (cyclic_dist(r, peak_row) <= kHalf && cyclic_dist(c, peak_col) <= kHalf) {
        continue;
      }
      const double v = response(r, c);
      sum += v;
      sum_sq += v * v;
      ++count;
    }
  }
  if (count == 0) return 0.0;
  const double mean = sum / static_cast<double>(count);
  const double var = std::max(0.0, sum_sq / static_cast<double>(count) - mean * mean);
  const double sd = std::sqrt(var);
  // A flat response carries no localisation evidence.
  if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) return 0.0;
  return (response(peak_row, peak_col) - mean) / sd;
}

TrackerState train(const Frame& frame, const BoundingBox& box,
                   const TrackerConfig& cfg) {
  cfg.validate();
  require_valid(box);
  const BoundingBox b = clamp_box(box, frame.width(), frame.height());
  TrackerState s;
  s.config = cfg;
  s.target_width = box.width();
  s.target_height = box.height();
  s.window = cosine_window(cfg.template_size);
  const double sigma_y = cfg.target_sigma_factor *
                         static_cast<double>(cfg.template_size) / cfg.padding;
  s.target_response_spectrum = fft2(gaussian_target(cfg.template_size, sigma_y));
  s.center_x = box.center_x();
  s.center_y = box.center_y();
  s.current_box = b;
  PureModel m = fit(frame, s.center_x, s.center_y, s.target_width, s.target_height,
                    cfg, s.window, s.target_response_spectrum);
  s.model_template = std::move(m.features);
  s.model_template_spectrum = std::move(m.features_spectrum);
  s.model_template_energy = m.features_energy;
  s.model_alpha_spectrum = std::move(m.alpha_spectrum);
  return s;
}

TrackStep detect(TrackerState& state, const Frame& frame) {
  const TrackerConfig& cfg = state.config;
  const std::size_t n = cfg.template_size;
  const RealGrid z = extract_features(frame, state.center_x, state.center_y,
                                      state.target_width, state.target_height,
                                      cfg, state.window);
  const ComplexGrid zf = fft2(z);
  const RealGrid kzx =
      kernel_from_spectra(state.model_template_spectrum, state.model_template_energy,
                          zf, energy(z), cfg.kernel_sigma);
  const ComplexGrid kf = fft2(kzx);
  ComplexGrid prod(n);
  for (std::size_t i = 0; i < kf.data.size(); ++i) {
    prod.data[i] = mul(state.model_alpha_spectrum.data[i], kf.data[i]);
  }
  const RealGrid response = ifft2(prod);

  std::size_t best = 0;
  for (std::size_t i = 1; i < response.data.size(); ++i) {
    if (response.data[i] > response.data[best]) best = i;
  }
  const std::size_t peak_row = best / n;
  const std::size_t peak_col = best % n;
  const auto unwrap = [n](std::size_t i) {
    const long v = static_cast<long>(i);
    return v > static_cast<long>(n / 2) ? v - static_cast<long>(n) : v;
  };
  const double scale_x = cfg.padding * state.target_width / static_cast<double>(n);
  const double scale_y = cfg.padding * state.target_height / static_cast<double>(n);
  const double dx = static_cast<double>(unwrap(peak_col)) * scale_x;
  const double dy = static_cast<double>(unwrap(peak_row)) * scale_y;

  place(state, state.center_x + dx, state.center_y + dy, frame.width(), frame.height());
  TrackStep step;
  step.box = state.current_box;
  step.psr = peak_to_sidelobe(response, peak_row, peak_col);
  step.occluded = step.psr < cfg.psr_occlusion_threshold;
  return step;
}

void update(TrackerState& state, const Frame& frame, const TrackerConfig& cfg) {
  const double eta = cfg.interp_factor;
  if (eta == 0.0) return;
  PureModel m = fit(frame, state.center_x, state.center_y,
                    state.target_width, state.target_height, state.config,
                    state.window, state.target_response_spectrum);
  if (eta == 1.0) {
    state.model_template = std::move(m.features);
    state.model_template_spectrum = std::move(m.features_spectrum);
    state.model_alpha_spectrum = std::move(m.alpha_spectrum);
  } else {
    for (std::size_t i = 0; i < m.features.data.size(); ++i) {
      state.model_template.data[i] =
          (1.0 - eta) * state.model_template.data[i] + eta * m.features.data[i];
      state.model_template_spectrum.data[i] =
          (1.0 - eta) * state.model_template_spectrum.data[i] +
          eta * m.features_spectrum.data[i];
      state.model_alpha_spectrum.data[i] =
          (1.0 - eta) * state.model_alpha_spectrum.data[i] +
          eta * m.alpha_spectrum.data[i];
    }
  }
  state.model_template_energy = energy(state.model_template);
}

KcfTracker::KcfTracker(TrackerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::vector<TrackStep> KcfTracker::track_segment(const VideoSequence& video,
                                                 FrameIndex start,
                                                 const BoundingBox& start_box,
                                                 Direction direction,
                                                 std::size_t steps) const {
  require_valid(start_box);
  if (start >= video.size()) {
    throw Error(ErrorCode::kInput, "start frame " + std::to_string(start) +
                                       " outside sequence of length " +
                                       std::to_string(video.size()));
  }
  const std::size_t available =
      direction == Direction::kForward ? video.size() - 1 - start : start;
  steps = std::min(steps, available);
  std::vector<TrackStep> out;
  if (steps == 0) return out;
  out.reserve(steps);

  TrackerState state = train(video[start], start_box, cfg_);
  for (std::size_t i = 1; i <= steps; ++i) {
    const FrameIndex t = direction == Direction::kForward ? start + i : start - i;
    const double cx = state.center_x;
    const double cy = state.center_y;
    const BoundingBox held = state.current_box;
    TrackStep step = detect(state, video[t]);
    if (step.occluded) {
      state.center_x = cx;
      state.center_y = cy;
      state.current_box = held;
      step.box = held;
    } else {
      update(state, video[t], cfg_);
    }
    out.push_back(step);
  }
  return out;
}

std::vector<TrackStep> track_segment(const VideoSequence& video,
                                     FrameIndex start,
                                     const BoundingBox& start_box,
                                     Direction direction, std::size_t steps,
                                     const TrackerConfig& cfg) {
  return KcfTracker(cfg).track_segment(video, start, start_box, direction, steps);
}

}  // namespace anchorframe
