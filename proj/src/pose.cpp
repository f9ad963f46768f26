#include "sketchrefine/pose.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sketchrefine {
namespace {

double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

struct TightBox {
  Point2d min;
  Point2d max;
  double width() const { return max.x() - min.x(); }
};

TightBox tight_box(const Mask& mask, const Affine2d& to_canvas) {
  Eigen::Index x0 = mask.cols(), y0 = mask.rows(), x1 = -1, y1 = -1;
  for (Eigen::Index y = 0; y < mask.rows(); ++y) {
    for (Eigen::Index x = 0; x < mask.cols(); ++x) {
      if (mask(y, x) == 0) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  return {to_canvas.apply(Point2d(double(x0), double(y0))),
          to_canvas.apply(Point2d(double(x1 + 1), double(y1 + 1)))};
}

void insets(const TightBox& b, Point2d& top_left, Point2d& top_right, Point2d& bottom_left,
            Point2d& bottom_right) {
  const double inset = 0.1 * b.width();
  top_left = {b.min.x() + inset, b.min.y()};
  top_right = {b.max.x() - inset, b.min.y()};
  bottom_left = {b.min.x() + inset, b.max.y()};
  bottom_right = {b.max.x() - inset, b.max.y()};
}

PartKeypointSet limb_keypoints(const Mask& mask, PartLabel label, const Affine2d& to_canvas,
                               const PartKeypointSet* torso) {
  std::vector<Point2d> points;
  for (Eigen::Index y = 0; y < mask.rows(); ++y) {
    for (Eigen::Index x = 0; x < mask.cols(); ++x) {
      if (mask(y, x) != 0) points.push_back(to_canvas.apply(Point2d(x + 0.5, y + 0.5)));
    }
  }
  Point2d mean = Point2d::Zero();
  for (const Point2d& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Point2d& p : points) cov += (p - mean) * (p - mean).transpose();
  cov /= static_cast<double>(points.size());

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Point2d axis = eig.eigenvectors().col(1);
  std::vector<double> along;
  along.reserve(points.size());
  for (const Point2d& p : points) along.push_back((p - mean).dot(axis));
  Point2d end_a = mean + percentile(along, 0.02) * axis;
  Point2d end_b = mean + percentile(along, 0.98) * axis;

  const bool arm = label == PartLabel::LeftArm || label == PartLabel::RightArm;
  const bool left = label == PartLabel::LeftArm || label == PartLabel::LeftLeg;
  const JointId anchor = arm ? (left ? JointId::LShoulder : JointId::RShoulder)
                             : (left ? JointId::LHip : JointId::RHip);
  bool a_is_proximal = end_a.y() <= end_b.y();
  if (torso != nullptr && torso->has(anchor)) {
    const Point2d& t = torso->at(anchor);
    a_is_proximal = (end_a - t).squaredNorm() <= (end_b - t).squaredNorm();
  }
  const Point2d proximal = a_is_proximal ? end_a : end_b;
  const Point2d distal = a_is_proximal ? end_b : end_a;

  PartKeypointSet out{label, {}};
  const auto joints = part_joints(label);
  if (arm) {
    out.joints[joints[0]] = proximal;
    out.joints[joints[1]] = mean;
    out.joints[joints[2]] = distal;
  } else {
    out.joints[joints[0]] = proximal;
    out.joints[joints[1]] = distal;
  }
  return out;
}

}  // namespace

PartKeypointSet extract_keypoints(const Mask& mask, PartLabel label, const BoundingBox& box,
                                  const PartKeypointSet* torso) {
  if (mask.size() == 0 || (mask == 0).all()) {
    throw Error(ErrorCode::EmptyMask,
                "cannot extract keypoints of " + std::string(label_name(label)) +
                    " from an empty mask");
  }
  const Affine2d to_canvas = box.crop_to_canvas(static_cast<int>(mask.rows()));
  PartKeypointSet out{label, {}};
  switch (label) {
    case PartLabel::LeftArm:
    case PartLabel::RightArm:
    case PartLabel::LeftLeg:
    case PartLabel::RightLeg:
      return limb_keypoints(mask, label, to_canvas, torso);
    case PartLabel::Hair:
    case PartLabel::Face: {
      const TightBox b = tight_box(mask, to_canvas);
      const double mid = 0.5 * (b.min.x() + b.max.x());
      out.joints[JointId::HeadTop] = {mid, b.min.y()};
      if (label == PartLabel::Face) out.joints[JointId::Neck] = {mid, b.max.y()};
      return out;
    }
    case PartLabel::TopClothes: {
      const TightBox b = tight_box(mask, to_canvas);
      Point2d tl, tr, bl, br;
      insets(b, tl, tr, bl, br);
      out.joints[JointId::Neck] = {0.5 * (b.min.x() + b.max.x()), b.min.y()};
      out.joints[JointId::LShoulder] = tl;
      out.joints[JointId::RShoulder] = tr;
      out.joints[JointId::LHip] = bl;
      out.joints[JointId::RHip] = br;
      return out;
    }
    case PartLabel::BottomClothes: {
      const TightBox b = tight_box(mask, to_canvas);
      Point2d tl, tr, bl, br;
      insets(b, tl, tr, bl, br);
      out.joints[JointId::LHip] = tl;
      out.joints[JointId::RHip] = tr;
      out.joints[JointId::LKnee] = bl;
      out.joints[JointId::RKnee] = br;
      return out;
    }
  }
  return out;
}

std::vector<Heatmap> render_heatmaps(const PartKeypointSet& keypoints, int canvas_width,
                                     int canvas_height, double sigma, int stride) {
  if (!(sigma > 0.0) || stride < 1) {
    throw Error(ErrorCode::DimensionMismatch, "heatmap sigma must be > 0 and stride >= 1");
  }
  const int cols = (canvas_width + stride - 1) / stride;
  const int rows = (canvas_height + stride - 1) / stride;
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  std::vector<Heatmap> out;
  for (JointId joint : part_joints(keypoints.label)) {
    if (!keypoints.has(joint)) continue;
    const Point2d k = keypoints.at(joint);
    Heatmap h{joint, stride, sigma, {}};
    h.values.resize(rows, cols);
    for (int r = 0; r < rows; ++r) {
      const double dy = r * stride - k.y();
      for (int c = 0; c < cols; ++c) {
        const double dx = c * stride - k.x();
        h.values(r, c) = std::exp(-(dx * dx + dy * dy) * inv_two_var);
      }
    }
    out.push_back(std::move(h));
  }
  return out;
}

namespace {

double refine_axis(double left, double center, double right) {
  if (left > 0.0 && center > 0.0 && right > 0.0) {
    const double ll = std::log(left), lc = std::log(center), lr = std::log(right);
    const double curvature = ll - 2.0 * lc + lr;
    if (curvature < 0.0) return std::clamp(0.5 * (ll - lr) / curvature, -0.5, 0.5);
  }
  const double curvature = left - 2.0 * center + right;
  if (curvature < 0.0) return std::clamp(0.5 * (left - right) / curvature, -0.5, 0.5);
  return 0.0;
}

}  // namespace

Point2d heatmap_argmax(const Heatmap& heatmap) {
  const auto& v = heatmap.values;
  if (v.size() == 0 || v.maxCoeff() == v.minCoeff()) {
    throw Error(ErrorCode::FlatHeatmap, "heatmap of " + std::string(joint_name(heatmap.joint)) +
                                            " has no peak");
  }
  Eigen::Index row = 0, col = 0;
  v.maxCoeff(&row, &col);
  const double center = v(row, col);
  double ox = 0.0, oy = 0.0;
  if (col > 0 && col + 1 < v.cols()) ox = refine_axis(v(row, col - 1), center, v(row, col + 1));
  if (row > 0 && row + 1 < v.rows()) oy = refine_axis(v(row - 1, col), center, v(row + 1, col));
  return {(static_cast<double>(col) + ox) * heatmap.stride,
          (static_cast<double>(row) + oy) * heatmap.stride};
}

}  // namespace sketchrefine
