#include "anchorframe/bench.hpp"

#include "anchorframe/error.hpp"

namespace anchorframe {

SelectionReport evaluate_selection(FrameIndex k_star, const GroundTruth& truth) {
  if (k_star >= truth.size()) {
    throw Error(ErrorCode::kInput, "k* = " + std::to_string(k_star) +
                                       " outside ground truth of length " +
                                       std::to_string(truth.size()));
  }
  const TruthFrame& tf = truth[k_star];
  SelectionReport r;
  r.kf_visibility = tf.visibility;
  r.kf_attr_visibility = tf.attribute_visibility;
  r.is_complete = tf.box.x1 > 0.0 && tf.box.y1 > 0.0 && tf.box.x2 < truth.width &&
                  tf.box.y2 < truth.height;
  return r;
}

SelectionReport evaluate_selection(const KeyframeResult& result, const GroundTruth& truth,
                                   std::size_t num_frames) {
  if (num_frames != truth.size()) {
    throw Error(ErrorCode::kInput, "result covers " + std::to_string(num_frames) +
                                       " frames but ground truth has " +
                                       std::to_string(truth.size()));
  }
  return evaluate_selection(result.k_star, truth);
}

TubeReport evaluate_tube(const MaskTube& tube, const GroundTruth& truth,
                         double visibility_floor) {
  if (tube.size() != truth.size()) {
    throw Error(ErrorCode::kInput, "tube has " + std::to_string(tube.size()) +
                                       " frames but ground truth has " +
                                       std::to_string(truth.size()));
  }
  TubeReport r;
  double sum = 0.0;
  for (std::size_t t = 0; t < tube.size(); ++t) {
    const auto& box = tube.entries[t].box;
    const double v = box.valid() ? iou(box, truth[t].box) : 0.0;
    r.per_frame_iou.push_back(v);
    if (truth[t].visibility >= visibility_floor) {
      sum += v;
      ++r.frames_counted;
    }
  }
  if (r.frames_counted > 0) r.mean_iou = sum / static_cast<double>(r.frames_counted);
  return r;
}

}  // namespace anchorframe
