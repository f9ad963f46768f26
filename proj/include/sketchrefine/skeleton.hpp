#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "sketchrefine/affine.hpp"
#include "sketchrefine/labels.hpp"

namespace sketchrefine {

enum class JointId : std::uint8_t {
  HeadTop = 0,
  Neck,
  LShoulder,
  RShoulder,
  LElbow,
  RElbow,
  LWrist,
  RWrist,
  LHip,
  RHip,
  LKnee,
  RKnee,
  LAnkle,
  RAnkle,
};

inline constexpr int kNumJoints = 14;

std::string_view joint_name(JointId joint);
std::optional<JointId> joint_from_name(std::string_view name);

/// Joints owned by a part, in canonical order.
std::span<const JointId> part_joints(PartLabel label);

/// A joint that two adjacent parts both predict.
struct SharedJoint {
  JointId joint;
  PartLabel first;
  PartLabel second;
};

/// HeadTop (Face/Hair), Neck (Face/TopClothes), shoulders (TopClothes/arms),
/// hips (TopClothes/BottomClothes), knees (BottomClothes/legs).
std::span<const SharedJoint> shared_joints();

/// A length-carrying joint pair within one part.
struct Bone {
  PartLabel part;
  JointId from;
  JointId to;

  friend auto operator<=>(const Bone&, const Bone&) = default;
};

std::span<const Bone> skeleton_bones();

/// Keypoints of one part in canvas coordinates.
struct PartKeypointSet {
  PartLabel label = PartLabel::Hair;
  std::map<JointId, Point2d> joints;

  bool has(JointId j) const { return joints.count(j) != 0; }
  const Point2d& at(JointId j) const { return joints.at(j); }
  Point2d centroid() const;
  PartKeypointSet transformed(const Affine2d& t) const;
};

/// Keypoint sets of a figure keyed by part.
using FigureKeypoints = std::map<PartLabel, PartKeypointSet>;

/// Mean distance between the two copies of every shared joint whose owners
/// are both present; 0 when no shared joint is available.
double mean_shared_joint_gap(const FigureKeypoints& keypoints);

}  // namespace sketchrefine
