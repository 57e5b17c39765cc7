#include "anchorframe/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "anchorframe/error.hpp"

namespace anchorframe {

namespace {

std::string describe(const BoundingBox& b) {
  std::ostringstream os;
  os << "(" << b.x1 << ", " << b.y1 << ", " << b.x2 << ", " << b.y2 << ")";
  return os.str();
}

}  // namespace

bool BoundingBox::valid() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
         std::isfinite(y2) && x1 < x2 && y1 < y2;
}

void require_valid(const BoundingBox& b) {
  if (!b.valid()) {
    throw Error(ErrorCode::kInvalidGeometry, "invalid box " + describe(b));
  }
}

double box_area(const BoundingBox& b) {
  require_valid(b);
  return b.width() * b.height();
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  require_valid(a);
  require_valid(b);
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = box_area(a) + box_area(b) - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

BoundingBox clamp_box(const BoundingBox& b, double width, double height) {
  if (!(width > 0.0) || !(height > 0.0)) {
    throw Error(ErrorCode::kInvalidGeometry, "frame size must be positive");
  }
  BoundingBox out{std::clamp(b.x1, 0.0, width), std::clamp(b.y1, 0.0, height),
                  std::clamp(b.x2, 0.0, width), std::clamp(b.y2, 0.0, height)};
  if (!out.valid()) {
    throw Error(ErrorCode::kDegenerateBox,
                "box " + describe(b) + " has no area inside the frame");
  }
  return out;
}

PixelRect rasterize(const BoundingBox& b, int width, int height) {
  auto clip = [](double v, int hi) {
    return static_cast<int>(std::clamp(v, 0.0, static_cast<double>(hi)));
  };
  return {clip(std::floor(b.x1), width), clip(std::floor(b.y1), height),
          clip(std::ceil(b.x2), width), clip(std::ceil(b.y2), height)};
}

PixelRect intersect(const PixelRect& a, const PixelRect& b) {
  PixelRect r{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
              std::min(a.y1, b.y1)};
  if (r.empty()) return {};
  return r;
}

}  // namespace anchorframe
