#pragma once

#include <optional>
#include <vector>

#include "anchorframe/pipeline.hpp"
#include "anchorframe/synth.hpp"

namespace anchorframe {

struct SelectionReport {
  double kf_visibility = 0.0;
  double kf_attr_visibility = 0.0;
  bool is_complete = false;
};

/// Ground truth read at k*. The keyframe is complete when the truth box does
/// not touch the frame border.
SelectionReport evaluate_selection(const KeyframeResult& result, const GroundTruth& truth,
                                   std::size_t num_frames);
SelectionReport evaluate_selection(FrameIndex k_star, const GroundTruth& truth);

struct TubeReport {
  /// nullopt when no frame reaches the visibility floor.
  std::optional<double> mean_iou;
  std::vector<double> per_frame_iou;
  std::size_t frames_counted = 0;
};

/// IoU of tube box vs truth box per frame; the mean covers frames whose
/// truth visibility is at least `visibility_floor`.
TubeReport evaluate_tube(const MaskTube& tube, const GroundTruth& truth,
                         double visibility_floor);

}  // namespace anchorframe
