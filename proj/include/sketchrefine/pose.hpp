#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sketchrefine/raster.hpp"
#include "sketchrefine/skeleton.hpp"

namespace sketchrefine {

/// Geometric keypoint extraction from a part mask (crop frame, placed by `box`).
///
/// Limbs use the principal axis of the foreground pixels, with endpoints at
/// the 2nd/98th percentiles along it; the endpoint nearer the torso joint it
/// attaches to (shoulder for arms, hip for legs) becomes the proximal joint,
/// and the elbow sits at the foreground centroid. When `torso` is null the
/// upper endpoint is proximal. Torso-like parts and heads use insets on the
/// mask's tight bounding box.
PartKeypointSet extract_keypoints(const Mask& mask, PartLabel label, const BoundingBox& box,
                                  const PartKeypointSet* torso = nullptr);

inline constexpr double kDefaultHeatmapSigma = 6.0;
inline constexpr int kDefaultHeatmapStride = 4;

/// One Gaussian channel. Cell (i, j) is evaluated at canvas point
/// (i * stride, j * stride).
struct Heatmap {
  JointId joint = JointId::HeadTop;
  int stride = 1;
  double sigma = kDefaultHeatmapSigma;
  Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> values;

  Point2d cell_point(Eigen::Index col, Eigen::Index row) const {
    return {static_cast<double>(col * stride), static_cast<double>(row * stride)};
  }
};

/// One channel per joint of the part, in part_joints() order.
std::vector<Heatmap> render_heatmaps(const PartKeypointSet& keypoints, int canvas_width,
                                     int canvas_height, double sigma = kDefaultHeatmapSigma,
                                     int stride = kDefaultHeatmapStride);

/// Sub-cell peak location in canvas coordinates. Each axis is refined with a
/// parabola through the log-values of the peak and its neighbours (exact for
/// a sampled Gaussian), falling back to a plain parabola, then to the cell.
Point2d heatmap_argmax(const Heatmap& heatmap);

}  // namespace sketchrefine
