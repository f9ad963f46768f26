#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "sketchrefine/affine.hpp"
#include "sketchrefine/labels.hpp"

namespace sketchrefine {

/// Ink raster, rows = height. 0 is blank paper, 1 is full ink.
using SketchRaster = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Per-pixel label codes 0..8.
using ParsingMap = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Binary part mask stored as 0/1 bytes.
using Mask = ParsingMap;

inline constexpr int kDefaultCanvasSize = 256;
inline constexpr int kDefaultPartResolution = 64;

// Canvas coordinates: pixel (x, y) covers [x, x+1) x [y, y+1); its center is
// (x + 0.5, y + 0.5). Boxes, keypoints and transforms all live in this frame.

struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double width = 1.0;
  double height = 1.0;

  bool valid() const { return width > 0.0 && height > 0.0; }
  Point2d center() const { return {x + 0.5 * width, y + 0.5 * height}; }

  /// Maps crop-frame coordinates of a `resolution`-square crop into the canvas.
  Affine2d crop_to_canvas(int resolution) const {
    return {width / resolution, 0.0, x, 0.0, height / resolution, y};
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// One body part: a square crop plus where it sits on the canvas.
/// An all-zero crop stands for an absent part.
struct PartSketch {
  PartLabel label = PartLabel::Hair;
  BoundingBox box;
  SketchRaster crop;

  int resolution() const { return static_cast<int>(crop.rows()); }
  bool present() const { return crop.size() > 0 && (crop > 0.0).any(); }
};

/// Backward-mapped bilinear warp: output pixel center q samples `src` at
/// t^-1(q). Taps falling outside `src` read `fill`.
SketchRaster warp_raster(const SketchRaster& src, const Affine2d& t, int out_width,
                         int out_height, double fill = 0.0);

/// Same contract as warp_raster with nearest-neighbour sampling, for label maps.
ParsingMap warp_labels(const ParsingMap& src, const Affine2d& t, int out_width, int out_height,
                       std::uint8_t fill = 0);

/// Bilinear resample of the box region into a resolution x resolution crop.
/// Area outside the canvas reads as 0.
SketchRaster crop_resample(const SketchRaster& global, const BoundingBox& box, int resolution);

/// Nearest-neighbour counterpart of crop_resample for label maps and masks.
ParsingMap crop_labels(const ParsingMap& global, const BoundingBox& box, int resolution);

/// Writes a crop back through its box, keeping the per-pixel maximum ink.
void paste_crop(SketchRaster& global, const SketchRaster& crop, const BoundingBox& box);

/// Nearest-neighbour paste of a crop-frame mask into a canvas-sized mask.
Mask paste_mask(const Mask& crop_mask, const BoundingBox& box, int canvas_width,
                int canvas_height);

/// Resamples an arbitrary-size raster to resolution x resolution (bilinear).
SketchRaster resample_square(const SketchRaster& src, int resolution);

template <typename Derived>
auto mirror_horizontal(const Eigen::ArrayBase<Derived>& a) {
  using Plain = typename Derived::PlainObject;
  return Plain(a.derived().rowwise().reverse());
}

/// Throws BadImage when a raster is empty or holds values outside [0, 1].
void validate_sketch(const SketchRaster& raster);

}  // namespace sketchrefine
