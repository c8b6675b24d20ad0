#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace topotrack {

/// Pixel-space box plus the frame dimensions it lives in. Frame dimensions
/// travel with the box so normalized quantities never mix coordinate systems.
struct BoundingBox {
  double left = 0.0;
  double top = 0.0;
  double width = 0.0;
  double height = 0.0;
  double frame_w = 1.0;
  double frame_h = 1.0;

  double center_x() const { return left + width / 2.0; }
  double center_y() const { return top + height / 2.0; }
  double norm_cx() const { return center_x() / frame_w; }
  double norm_cy() const { return center_y() / frame_h; }

  /// (cx/W, cy/H, w/W, h/H) — the 4-number normalized form fed to models.
  std::array<double, 4> normalized4() const {
    return {norm_cx(), norm_cy(), width / frame_w, height / frame_h};
  }

  bool valid() const {
    return width > 0.0 && height > 0.0 && frame_w > 0.0 && frame_h > 0.0 &&
           norm_cx() >= -0.5 && norm_cx() <= 1.5 && norm_cy() >= -0.5 && norm_cy() <= 1.5;
  }
};

/// Euclidean distance between frame-normalized centers.
double box_distance(const BoundingBox& a, const BoundingBox& b);

/// Intersection-over-union in pixel space.
double iou(const BoundingBox& a, const BoundingBox& b);

struct Detection {
  BoundingBox box;
  std::vector<double> descriptor;
  double confidence = 1.0;
  std::size_t frame = 0;  // 1-based, matching file convention
};

using FrameDetections = std::vector<Detection>;
using Sequence = std::vector<FrameDetections>;

}  // namespace topotrack
