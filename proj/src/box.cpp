#include "topotrack/box.hpp"

#include <algorithm>
#include <cmath>

#include "topotrack/errors.hpp"

namespace topotrack {

double box_distance(const BoundingBox& a, const BoundingBox& b) {
  if (a.frame_w != b.frame_w || a.frame_h != b.frame_h)
    throw DimensionError("box_distance: frame dimensions differ");
  const double dx = a.norm_cx() - b.norm_cx();
  const double dy = a.norm_cy() - b.norm_cy();
  return std::sqrt(dx * dx + dy * dy);
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double x1 = std::max(a.left, b.left);
  const double y1 = std::max(a.top, b.top);
  const double x2 = std::min(a.left + a.width, b.left + b.width);
  const double y2 = std::min(a.top + a.height, b.top + b.height);
  const double iw = std::max(0.0, x2 - x1);
  const double ih = std::max(0.0, y2 - y1);
  const double inter = iw * ih;
  const double uni = a.width * a.height + b.width * b.height - inter;
  return uni <= 0.0 ? 0.0 : inter / uni;
}

}  // namespace topotrack
