#include "sketchrefine/raster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sketchrefine {
namespace {

// `backward` maps output canvas coordinates to source coordinates.
SketchRaster sample_bilinear(const SketchRaster& src, const Affine2d& backward, int out_width,
                             int out_height, double fill) {
  SketchRaster out(out_height, out_width);
  const auto& m = backward.matrix();
  const Eigen::Index src_w = src.cols();
  const Eigen::Index src_h = src.rows();
  auto tap = [&](Eigen::Index ix, Eigen::Index iy) {
    if (ix < 0 || iy < 0 || ix >= src_w || iy >= src_h) return fill;
    return src(iy, ix);
  };
  for (int y = 0; y < out_height; ++y) {
    const double qy = y + 0.5;
    for (int x = 0; x < out_width; ++x) {
      const double qx = x + 0.5;
      const double u = m(0, 0) * qx + m(0, 1) * qy + m(0, 2) - 0.5;
      const double v = m(1, 0) * qx + m(1, 1) * qy + m(1, 2) - 0.5;
      const double fu = std::floor(u);
      const double fv = std::floor(v);
      const double ax = u - fu;
      const double ay = v - fv;
      const auto ix = static_cast<Eigen::Index>(fu);
      const auto iy = static_cast<Eigen::Index>(fv);
      // Zero-weight taps are skipped so integer-aligned sampling is exact.
      double value = (1.0 - ax) * (1.0 - ay) * tap(ix, iy);
      if (ax != 0.0) value += ax * (1.0 - ay) * tap(ix + 1, iy);
      if (ay != 0.0) value += (1.0 - ax) * ay * tap(ix, iy + 1);
      if (ax != 0.0 && ay != 0.0) value += ax * ay * tap(ix + 1, iy + 1);
      out(y, x) = value;
    }
  }
  return out;
}

ParsingMap sample_nearest(const ParsingMap& src, const Affine2d& backward, int out_width,
                          int out_height, std::uint8_t fill) {
  ParsingMap out(out_height, out_width);
  const auto& m = backward.matrix();
  for (int y = 0; y < out_height; ++y) {
    const double qy = y + 0.5;
    for (int x = 0; x < out_width; ++x) {
      const double qx = x + 0.5;
      const double u = m(0, 0) * qx + m(0, 1) * qy + m(0, 2);
      const double v = m(1, 0) * qx + m(1, 1) * qy + m(1, 2);
      const double fu = std::floor(u);
      const double fv = std::floor(v);
      if (fu < 0 || fv < 0 || fu >= static_cast<double>(src.cols()) ||
          fv >= static_cast<double>(src.rows())) {
        out(y, x) = fill;
      } else {
        out(y, x) = src(static_cast<Eigen::Index>(fv), static_cast<Eigen::Index>(fu));
      }
    }
  }
  return out;
}

void check_size(int w, int h) {
  if (w <= 0 || h <= 0) {
    throw Error(ErrorCode::DimensionMismatch,
                "output raster must be non-empty, got " + std::to_string(w) + "x" +
                    std::to_string(h));
  }
}

Affine2d canvas_to_crop(const BoundingBox& box, int resolution) {
  return {resolution / box.width, 0.0, -box.x * resolution / box.width,
          0.0, resolution / box.height, -box.y * resolution / box.height};
}

}  // namespace

SketchRaster warp_raster(const SketchRaster& src, const Affine2d& t, int out_width,
                         int out_height, double fill) {
  check_size(out_width, out_height);
  return sample_bilinear(src, t.inverse(), out_width, out_height, fill);
}

ParsingMap warp_labels(const ParsingMap& src, const Affine2d& t, int out_width, int out_height,
                       std::uint8_t fill) {
  check_size(out_width, out_height);
  return sample_nearest(src, t.inverse(), out_width, out_height, fill);
}

SketchRaster crop_resample(const SketchRaster& global, const BoundingBox& box, int resolution) {
  check_size(resolution, resolution);
  return sample_bilinear(global, box.crop_to_canvas(resolution), resolution, resolution, 0.0);
}

ParsingMap crop_labels(const ParsingMap& global, const BoundingBox& box, int resolution) {
  check_size(resolution, resolution);
  return sample_nearest(global, box.crop_to_canvas(resolution), resolution, resolution, 0);
}

void paste_crop(SketchRaster& global, const SketchRaster& crop, const BoundingBox& box) {
  const int resolution = static_cast<int>(crop.rows());
  const Affine2d backward = canvas_to_crop(box, resolution);
  const int x0 = std::max(0, static_cast<int>(std::floor(box.x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(box.y)));
  const int x1 = std::min(static_cast<int>(global.cols()),
                          static_cast<int>(std::ceil(box.x + box.width)));
  const int y1 = std::min(static_cast<int>(global.rows()),
                          static_cast<int>(std::ceil(box.y + box.height)));
  if (x1 <= x0 || y1 <= y0) return;
  // Sample the crop over the covered canvas window only.
  const Affine2d window_backward = backward.compose(Affine2d::translation(x0, y0));
  const SketchRaster patch = sample_bilinear(crop, window_backward, x1 - x0, y1 - y0, 0.0);
  auto region = global.block(y0, x0, y1 - y0, x1 - x0);
  region = region.max(patch);
}

Mask paste_mask(const Mask& crop_mask, const BoundingBox& box, int canvas_width,
                int canvas_height) {
  const int resolution = static_cast<int>(crop_mask.rows());
  return sample_nearest(crop_mask, canvas_to_crop(box, resolution), canvas_width, canvas_height,
                        0);
}

SketchRaster resample_square(const SketchRaster& src, int resolution) {
  if (src.rows() == resolution && src.cols() == resolution) return src;
  const BoundingBox whole{0.0, 0.0, static_cast<double>(src.cols()),
                          static_cast<double>(src.rows())};
  return crop_resample(src, whole, resolution);
}

void validate_sketch(const SketchRaster& raster) {
  if (raster.size() == 0) throw Error(ErrorCode::BadImage, "sketch raster is empty");
  if (!raster.isFinite().all() || (raster < 0.0).any() || (raster > 1.0).any()) {
    throw Error(ErrorCode::BadImage, "sketch raster values must lie in [0, 1]");
  }
}

}  // namespace sketchrefine
