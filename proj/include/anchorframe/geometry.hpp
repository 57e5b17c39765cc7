#pragma once

#include <cstddef>

namespace anchorframe {

/// 0-based frame index.
using FrameIndex = std::size_t;

/// Axis-aligned box in continuous pixel coordinates.
///
/// A box is valid when x1 < x2 and y1 < y2 and every coordinate is finite.
/// The struct itself does not enforce this so that tracker stubs and parsers
/// can carry raw values; every geometric operation validates its inputs.
struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double center_x() const { return 0.5 * (x1 + x2); }
  double center_y() const { return 0.5 * (y1 + y2); }
  bool valid() const;

  BoundingBox translated(double dx, double dy) const {
    return {x1 + dx, y1 + dy, x2 + dx, y2 + dy};
  }

  static BoundingBox from_center(double cx, double cy, double w, double h) {
    return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Half-open integer pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  long long area() const { return empty() ? 0 : 1LL * width() * height(); }

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Throws kInvalidGeometry when `b` is not a valid box.
void require_valid(const BoundingBox& b);

double box_area(const BoundingBox& b);

/// Intersection over union in [0, 1]. Throws kInvalidGeometry on a
/// degenerate input box.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Clips every coordinate into [0,width] x [0,height]. Throws kDegenerateBox
/// when nothing of the box survives.
BoundingBox clamp_box(const BoundingBox& b, double width, double height);

/// Pixels covered by `b`: x1,y1 rounded down, x2,y2 rounded up, then clipped
/// to the frame. May be empty when the box lies outside the frame.
PixelRect rasterize(const BoundingBox& b, int width, int height);

PixelRect intersect(const PixelRect& a, const PixelRect& b);

}  // namespace anchorframe
