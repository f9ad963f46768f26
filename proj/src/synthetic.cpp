#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "sketchrefine/corpus.hpp"
#include "sketchrefine/random.hpp"

namespace sketchrefine {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kStrokeHalfWidth = 0.75;  // 1.5 px contour
constexpr double kAntialias = 0.5;

double segment_distance(const Point2d& p, const Point2d& a, const Point2d& b) {
  const Point2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

double capsule_sdf(const Point2d& p, const Point2d& a, const Point2d& b, double radius) {
  return segment_distance(p, a, b) - radius;
}

double polygon_sdf(const Point2d& p, const std::vector<Point2d>& poly) {
  double dist = std::numeric_limits<double>::max();
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point2d& a = poly[i];
    const Point2d& b = poly[j];
    dist = std::min(dist, segment_distance(p, a, b));
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      inside = !inside;
    }
  }
  return inside ? -dist : dist;
}

// Seeded smooth contour noise: a few plane waves of 12-30 px wavelength.
struct ContourNoise {
  std::array<Point2d, 3> freq;
  std::array<double, 3> phase;
  std::array<double, 3> amp;
  double amplitude = 0.0;

  ContourNoise(std::uint64_t seed, double amplitude_px) : amplitude(amplitude_px) {
    Rng rng(seed);
    for (int k = 0; k < 3; ++k) {
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double wavelength = rng.uniform(12.0, 30.0);
      freq[k] = Point2d(std::cos(angle), std::sin(angle)) * (2.0 * std::numbers::pi / wavelength);
      phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
      amp[k] = rng.uniform(0.5, 1.0);
    }
  }

  double operator()(const Point2d& p) const {
    if (amplitude == 0.0) return 0.0;
    double sum = 0.0;
    for (int k = 0; k < 3; ++k) sum += amp[k] * std::sin(freq[k].dot(p) + phase[k]);
    return amplitude * sum / 2.0;
  }
};

struct Skeleton {
  std::array<Point2d, kNumJoints> joint;
  // Local frame: x relative to the figure's vertical axis.
  double axis_x = 0.0;
  Point2d head_center;
  double head_radius = 0.0;
  Point2d& operator[](JointId j) { return joint[static_cast<int>(j)]; }
  const Point2d& operator[](JointId j) const { return joint[static_cast<int>(j)]; }
};

Skeleton build_skeleton(const FigureSpec& s) {
  Skeleton sk;
  const double height = 2.0 * s.head_radius + s.torso_height + s.hemline + s.shin;
  sk.axis_x = 0.5 * s.canvas + s.translate_x;
  const double neck_y = 0.5 * s.canvas - 0.5 * height + 2.0 * s.head_radius + s.translate_y;
  const double cx = sk.axis_x;
  sk.head_radius = s.head_radius;
  sk.head_center = {cx, neck_y - s.head_radius};
  sk[JointId::Neck] = {cx, neck_y};
  sk[JointId::HeadTop] = {cx, neck_y - 2.0 * s.head_radius};
  sk[JointId::LShoulder] = {cx - 0.5 * s.shoulder_width, neck_y};
  sk[JointId::RShoulder] = {cx + 0.5 * s.shoulder_width, neck_y};
  const double hip_y = neck_y + s.torso_height;
  sk[JointId::LHip] = {cx - 0.5 * s.hip_width, hip_y};
  sk[JointId::RHip] = {cx + 0.5 * s.hip_width, hip_y};

  auto limb = [](const Point2d& root, double side, double angle_deg, double length) {
    const double a = angle_deg * kDegToRad;
    return Point2d(root.x() + side * std::sin(a) * length, root.y() + std::cos(a) * length);
  };
  sk[JointId::LElbow] = limb(sk[JointId::LShoulder], -1.0, s.shoulder_left, s.upper_arm);
  sk[JointId::RElbow] = limb(sk[JointId::RShoulder], 1.0, s.shoulder_right, s.upper_arm);
  sk[JointId::LWrist] = limb(sk[JointId::LElbow], -1.0, s.shoulder_left + s.elbow_left, s.forearm);
  sk[JointId::RWrist] = limb(sk[JointId::RElbow], 1.0, s.shoulder_right + s.elbow_right, s.forearm);
  sk[JointId::LKnee] = limb(sk[JointId::LHip], -1.0, s.hip_left, s.hemline);
  sk[JointId::RKnee] = limb(sk[JointId::RHip], 1.0, s.hip_right, s.hemline);
  sk[JointId::LAnkle] = limb(sk[JointId::LKnee], -1.0, s.hip_left - s.knee_left, s.shin);
  sk[JointId::RAnkle] = limb(sk[JointId::RKnee], 1.0, s.hip_right - s.knee_right, s.shin);
  return sk;
}

// Signed distance of every part at a canvas point. Limbs of the right side
// are evaluated in the mirrored frame of a left limb built from the right-side
// parameters, and the symmetric parts at |dx|, so that mirrored specs give
// mirrored fields exactly.
class FigureField {
 public:
  FigureField(const FigureSpec& spec, const Skeleton& sk) : spec_(spec), sk_(sk) {
    const double cx = sk.axis_x;
    auto local = [&](const Point2d& p) { return Point2d(p.x() - cx, p.y()); };
    auto mirrored = [&](const Point2d& p) { return Point2d(cx - p.x(), p.y()); };
    left_arm_ = {local(sk[JointId::LShoulder]), local(sk[JointId::LElbow]), local(sk[JointId::LWrist])};
    right_arm_ = {mirrored(sk[JointId::RShoulder]), mirrored(sk[JointId::RElbow]),
                  mirrored(sk[JointId::RWrist])};
    left_leg_ = {local(sk[JointId::LKnee]), local(sk[JointId::LAnkle])};
    right_leg_ = {mirrored(sk[JointId::RKnee]), mirrored(sk[JointId::RAnkle])};
    const double pad = 0.125 * spec.shoulder_width;
    const double hip_pad = 0.1 * spec.hip_width;
    const double shoulder_y = sk[JointId::LShoulder].y();
    const double hip_y = sk[JointId::LHip].y();
    torso_ = {{-0.5 * spec.shoulder_width - pad, shoulder_y},
              {0.5 * spec.shoulder_width + pad, shoulder_y},
              {0.5 * spec.hip_width + hip_pad, hip_y},
              {-0.5 * spec.hip_width - hip_pad, hip_y}};
    const Point2d lk = local(sk[JointId::LKnee]);
    const Point2d rk = local(sk[JointId::RKnee]);
    const double flare = 0.5 * spec.leg_width + 2.0;
    bottom_ = {{-0.5 * spec.hip_width - hip_pad, hip_y},
               {0.5 * spec.hip_width + hip_pad, hip_y},
               {rk.x() + flare, rk.y()},
               {lk.x() - flare, lk.y()}};
    head_ = {0.0, sk.head_center.y()};
    for (PartLabel label : kAllPartLabels) {
      noise_[label_index(label)] =
          ContourNoise(spec.seed * 16 + static_cast<std::uint64_t>(label_code(label)), spec.jitter);
    }
  }

  double sdf(PartLabel label, const Point2d& canvas_point) const {
    const double dx = canvas_point.x() - sk_.axis_x;
    const Point2d p(dx, canvas_point.y());
    const Point2d pm(-dx, canvas_point.y());
    const Point2d pa(std::abs(dx), canvas_point.y());
    const double r = sk_.head_radius;
    double d = 0.0;
    switch (label) {
      case PartLabel::Face:
        d = (pa - head_).norm() - r;
        break;
      case PartLabel::Hair: {
        const double rho = (pa - head_).norm();
        d = std::max({rho - 1.2 * r, 0.9 * r - rho, pa.y() - (head_.y() - 0.25 * r)});
        break;
      }
      case PartLabel::TopClothes:
        d = polygon_sdf(pa, torso_);
        break;
      case PartLabel::BottomClothes:
        d = polygon_sdf(p, bottom_);
        break;
      case PartLabel::LeftArm:
        d = std::min(capsule_sdf(p, left_arm_[0], left_arm_[1], 0.5 * spec_.arm_width),
                     capsule_sdf(p, left_arm_[1], left_arm_[2], 0.5 * spec_.arm_width));
        break;
      case PartLabel::RightArm:
        d = std::min(capsule_sdf(pm, right_arm_[0], right_arm_[1], 0.5 * spec_.arm_width),
                     capsule_sdf(pm, right_arm_[1], right_arm_[2], 0.5 * spec_.arm_width));
        break;
      case PartLabel::LeftLeg:
        d = capsule_sdf(p, left_leg_[0], left_leg_[1], 0.5 * spec_.leg_width);
        break;
      case PartLabel::RightLeg:
        d = capsule_sdf(pm, right_leg_[0], right_leg_[1], 0.5 * spec_.leg_width);
        break;
    }
    return d + noise_[label_index(label)](canvas_point);
  }

 private:
  const FigureSpec& spec_;
  const Skeleton& sk_;
  std::array<Point2d, 3> left_arm_, right_arm_;
  std::array<Point2d, 2> left_leg_, right_leg_;
  std::vector<Point2d> torso_, bottom_;
  Point2d head_;
  std::array<ContourNoise, kNumPartLabels> noise_{
      ContourNoise(0, 0), ContourNoise(0, 0), ContourNoise(0, 0), ContourNoise(0, 0),
      ContourNoise(0, 0), ContourNoise(0, 0), ContourNoise(0, 0), ContourNoise(0, 0)};
};

void check_range(const char* name, double value, double lo, double hi) {
  if (!(value >= lo && value <= hi)) {
    throw Error(ErrorCode::SpecOutOfBounds, std::string(name) + " = " + std::to_string(value) +
                                                " outside [" + std::to_string(lo) + ", " +
                                                std::to_string(hi) + "]");
  }
}

void check_positive(const char* name, double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::SpecOutOfBounds,
                std::string(name) + " = " + std::to_string(value) + " must be > 0");
  }
}

Mask dilate(const Mask& mask, int radius) {
  Mask out = Mask::Zero(mask.rows(), mask.cols());
  for (Eigen::Index y = 0; y < mask.rows(); ++y) {
    for (Eigen::Index x = 0; x < mask.cols(); ++x) {
      if (mask(y, x) == 0) continue;
      const Eigen::Index y0 = std::max<Eigen::Index>(0, y - radius);
      const Eigen::Index x0 = std::max<Eigen::Index>(0, x - radius);
      const Eigen::Index y1 = std::min<Eigen::Index>(mask.rows() - 1, y + radius);
      const Eigen::Index x1 = std::min<Eigen::Index>(mask.cols() - 1, x + radius);
      out.block(y0, x0, y1 - y0 + 1, x1 - x0 + 1).setOnes();
    }
  }
  return out;
}

}  // namespace

void validate_figure_spec(const FigureSpec& s) {
  check_range("shoulder_left", s.shoulder_left, 0.0, 150.0);
  check_range("shoulder_right", s.shoulder_right, 0.0, 150.0);
  check_range("elbow_left", s.elbow_left, 0.0, 150.0);
  check_range("elbow_right", s.elbow_right, 0.0, 150.0);
  check_range("hip_left", s.hip_left, 0.0, 45.0);
  check_range("hip_right", s.hip_right, 0.0, 45.0);
  check_range("knee_left", s.knee_left, 0.0, 90.0);
  check_range("knee_right", s.knee_right, 0.0, 90.0);
  check_positive("upper_arm", s.upper_arm);
  check_positive("forearm", s.forearm);
  check_positive("arm_width", s.arm_width);
  check_positive("shin", s.shin);
  check_positive("leg_width", s.leg_width);
  check_positive("shoulder_width", s.shoulder_width);
  check_positive("torso_height", s.torso_height);
  check_positive("hip_width", s.hip_width);
  check_positive("head_radius", s.head_radius);
  check_positive("hemline", s.hemline);
  check_range("jitter", s.jitter, 0.0, 4.0);
  check_range("translate_x", s.translate_x, -0.5 * s.canvas, 0.5 * s.canvas);
  check_range("translate_y", s.translate_y, -0.5 * s.canvas, 0.5 * s.canvas);
  if (s.canvas < 16 || s.part_resolution < 4) {
    throw Error(ErrorCode::SpecOutOfBounds, "canvas must be >= 16 and part resolution >= 4");
  }
}

const StructurePart* CorpusItem::part(PartLabel label) const {
  for (const StructurePart& p : parts) {
    if (p.sketch.label == label) return &p;
  }
  return nullptr;
}

std::optional<BoundingBox> label_box(const ParsingMap& parsing, PartLabel label) {
  const std::uint8_t code = label_code(label);
  Eigen::Index x0 = parsing.cols(), y0 = parsing.rows(), x1 = -1, y1 = -1;
  for (Eigen::Index y = 0; y < parsing.rows(); ++y) {
    for (Eigen::Index x = 0; x < parsing.cols(); ++x) {
      if (parsing(y, x) != code) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return std::nullopt;
  const double w = static_cast<double>(x1 + 1 - x0);
  const double h = static_cast<double>(y1 + 1 - y0);
  return BoundingBox{x0 - 0.08 * w, y0 - 0.08 * h, 1.16 * w, 1.16 * h};
}

std::vector<StructurePart> split_parts(const SketchRaster& sketch, const ParsingMap& parsing,
                                       int resolution) {
  if (sketch.rows() != parsing.rows() || sketch.cols() != parsing.cols()) {
    throw Error(ErrorCode::SizeMismatch, "sketch and label map dimensions differ");
  }
  std::vector<StructurePart> parts;
  for (PartLabel label : kAllPartLabels) {
    const auto box = label_box(parsing, label);
    if (!box) continue;
    const Mask region = (parsing == label_code(label)).cast<std::uint8_t>();
    const SketchRaster ink = (dilate(region, 2) != 0).select(sketch, 0.0);
    StructurePart part;
    part.sketch = {label, *box, crop_resample(ink, *box, resolution)};
    part.mask = crop_labels(region, *box, resolution);
    part.keypoints.label = label;
    parts.push_back(std::move(part));
  }
  return parts;
}

void extract_missing_keypoints(std::vector<StructurePart>& parts) {
  const PartKeypointSet* torso = nullptr;
  for (StructurePart& part : parts) {
    if (part.sketch.label != PartLabel::TopClothes) continue;
    if (part.keypoints.joints.empty() && (part.mask != 0).any()) {
      part.keypoints = extract_keypoints(part.mask, part.sketch.label, part.sketch.box);
    }
    if (!part.keypoints.joints.empty()) torso = &part.keypoints;
  }
  for (StructurePart& part : parts) {
    part.keypoints.label = part.sketch.label;
    if (!part.keypoints.joints.empty() || (part.mask == 0).all()) continue;
    part.keypoints = extract_keypoints(part.mask, part.sketch.label, part.sketch.box, torso);
  }
}

CorpusItem generate_figure(const FigureSpec& spec, std::uint64_t id) {
  validate_figure_spec(spec);
  const Skeleton sk = build_skeleton(spec);
  const FigureField field(spec, sk);
  const int size = spec.canvas;

  CorpusItem item;
  item.id = id;
  item.provenance.kind = Provenance::Kind::Synthetic;
  item.provenance.spec = spec;
  item.provenance.source = "synthetic:" + std::to_string(spec.seed);
  item.sketch = SketchRaster::Zero(size, size);
  item.parsing = ParsingMap::Zero(size, size);

  std::array<double, kNumPartLabels> d{};
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const Point2d p(x + 0.5, y + 0.5);
      for (PartLabel label : kAllPartLabels) d[label_index(label)] = field.sdf(label, p);
      // Label: the highest-priority part containing the pixel.
      for (PartLabel label : kAssemblyPriority) {
        if (d[label_index(label)] <= 0.0) {
          item.parsing(y, x) = label_code(label);
          break;
        }
      }
      // A contour is drawn unless a higher-priority part fully covers it here.
      double ink = 0.0;
      for (int rank = 0; rank < kNumPartLabels; ++rank) {
        const double dist = d[label_index(kAssemblyPriority[rank])];
        ink = std::max(ink, std::clamp(kStrokeHalfWidth + kAntialias - std::abs(dist), 0.0, 1.0));
        if (dist < -(kStrokeHalfWidth + kAntialias)) break;
      }
      // Quantized to 8 bits so the PNG export is lossless.
      item.sketch(y, x) = std::round(ink * 255.0) / 255.0;
    }
  }

  item.parts = split_parts(item.sketch, item.parsing, spec.part_resolution);
  for (StructurePart& part : item.parts) {
    part.keypoints.label = part.sketch.label;
    for (JointId joint : part_joints(part.sketch.label)) part.keypoints.joints[joint] = sk[joint];
  }
  return item;
}

std::vector<CorpusItem> sample_corpus(int n, std::uint64_t master_seed,
                                      const FigureBounds& bounds) {
  Rng rng(master_seed);
  auto draw = [&](const FigureBounds::Range& r) { return rng.uniform(r.lo, r.hi); };
  std::vector<CorpusItem> items;
  items.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) {
    FigureSpec s;
    s.seed = rng.next();
    s.shoulder_left = draw(bounds.shoulder);
    s.shoulder_right = draw(bounds.shoulder);
    s.elbow_left = draw(bounds.elbow);
    s.elbow_right = draw(bounds.elbow);
    s.hip_left = draw(bounds.hip);
    s.hip_right = draw(bounds.hip);
    s.knee_left = draw(bounds.knee);
    s.knee_right = draw(bounds.knee);
    s.upper_arm = draw(bounds.upper_arm);
    s.forearm = draw(bounds.forearm);
    s.arm_width = draw(bounds.arm_width);
    s.shin = draw(bounds.shin);
    s.leg_width = draw(bounds.leg_width);
    s.shoulder_width = draw(bounds.shoulder_width);
    s.torso_height = draw(bounds.torso_height);
    s.hip_width = draw(bounds.hip_width);
    s.head_radius = draw(bounds.head_radius);
    s.hemline = draw(bounds.hemline);
    s.translate_x = draw(bounds.translate);
    s.translate_y = draw(bounds.translate);
    s.jitter = draw(bounds.jitter);
    s.canvas = bounds.canvas;
    s.part_resolution = bounds.part_resolution;
    items.push_back(generate_figure(s, static_cast<std::uint64_t>(i)));
  }
  return items;
}

std::vector<ShapeSample> shape_samples(const std::vector<CorpusItem>& items) {
  std::vector<ShapeSample> samples;
  for (const CorpusItem& item : items) {
    for (const StructurePart& part : item.parts) {
      samples.push_back({part.sketch, part.mask, item.id});
    }
  }
  return samples;
}

}  // namespace sketchrefine
