#include "sketchrefine/skeleton.hpp"

namespace sketchrefine {
namespace {

using J = JointId;
using L = PartLabel;

constexpr std::array<std::string_view, kNumJoints> kJointNames = {
    "HeadTop", "Neck",  "LShoulder", "RShoulder", "LElbow", "RElbow", "LWrist",
    "RWrist",  "LHip",  "RHip",      "LKnee",     "RKnee",  "LAnkle", "RAnkle",
};

constexpr std::array kHairJoints = {J::HeadTop};
constexpr std::array kFaceJoints = {J::HeadTop, J::Neck};
constexpr std::array kTopJoints = {J::Neck, J::LShoulder, J::RShoulder, J::LHip, J::RHip};
constexpr std::array kBottomJoints = {J::LHip, J::RHip, J::LKnee, J::RKnee};
constexpr std::array kLeftArmJoints = {J::LShoulder, J::LElbow, J::LWrist};
constexpr std::array kRightArmJoints = {J::RShoulder, J::RElbow, J::RWrist};
constexpr std::array kLeftLegJoints = {J::LKnee, J::LAnkle};
constexpr std::array kRightLegJoints = {J::RKnee, J::RAnkle};

constexpr std::array kShared = {
    SharedJoint{J::HeadTop, L::Face, L::Hair},
    SharedJoint{J::Neck, L::Face, L::TopClothes},
    SharedJoint{J::LShoulder, L::TopClothes, L::LeftArm},
    SharedJoint{J::RShoulder, L::TopClothes, L::RightArm},
    SharedJoint{J::LHip, L::TopClothes, L::BottomClothes},
    SharedJoint{J::RHip, L::TopClothes, L::BottomClothes},
    SharedJoint{J::LKnee, L::BottomClothes, L::LeftLeg},
    SharedJoint{J::RKnee, L::BottomClothes, L::RightLeg},
};

// The first bone is the shoulder-width reference.
constexpr std::array kBones = {
    Bone{L::TopClothes, J::LShoulder, J::RShoulder},
    Bone{L::TopClothes, J::Neck, J::LShoulder},
    Bone{L::TopClothes, J::Neck, J::RShoulder},
    Bone{L::TopClothes, J::LShoulder, J::LHip},
    Bone{L::TopClothes, J::RShoulder, J::RHip},
    Bone{L::TopClothes, J::LHip, J::RHip},
    Bone{L::Face, J::HeadTop, J::Neck},
    Bone{L::LeftArm, J::LShoulder, J::LElbow},
    Bone{L::LeftArm, J::LElbow, J::LWrist},
    Bone{L::RightArm, J::RShoulder, J::RElbow},
    Bone{L::RightArm, J::RElbow, J::RWrist},
    Bone{L::BottomClothes, J::LHip, J::RHip},
    Bone{L::BottomClothes, J::LHip, J::LKnee},
    Bone{L::BottomClothes, J::RHip, J::RKnee},
    Bone{L::LeftLeg, J::LKnee, J::LAnkle},
    Bone{L::RightLeg, J::RKnee, J::RAnkle},
};

}  // namespace

std::string_view joint_name(JointId joint) { return kJointNames[static_cast<int>(joint)]; }

std::optional<JointId> joint_from_name(std::string_view name) {
  for (int i = 0; i < kNumJoints; ++i) {
    if (kJointNames[i] == name) return static_cast<JointId>(i);
  }
  return std::nullopt;
}

std::span<const JointId> part_joints(PartLabel label) {
  switch (label) {
    case L::Hair: return kHairJoints;
    case L::Face: return kFaceJoints;
    case L::TopClothes: return kTopJoints;
    case L::BottomClothes: return kBottomJoints;
    case L::LeftArm: return kLeftArmJoints;
    case L::RightArm: return kRightArmJoints;
    case L::LeftLeg: return kLeftLegJoints;
    case L::RightLeg: return kRightLegJoints;
  }
  return {};
}

std::span<const SharedJoint> shared_joints() { return kShared; }

std::span<const Bone> skeleton_bones() { return kBones; }

Point2d PartKeypointSet::centroid() const {
  Point2d sum = Point2d::Zero();
  for (const auto& [joint, p] : joints) sum += p;
  return joints.empty() ? sum : Point2d(sum / static_cast<double>(joints.size()));
}

PartKeypointSet PartKeypointSet::transformed(const Affine2d& t) const {
  PartKeypointSet out{label, {}};
  for (const auto& [joint, p] : joints) out.joints[joint] = t.apply(p);
  return out;
}

double mean_shared_joint_gap(const FigureKeypoints& keypoints) {
  double total = 0.0;
  int count = 0;
  for (const SharedJoint& s : shared_joints()) {
    const auto a = keypoints.find(s.first);
    const auto b = keypoints.find(s.second);
    if (a == keypoints.end() || b == keypoints.end()) continue;
    if (!a->second.has(s.joint) || !b->second.has(s.joint)) continue;
    total += (a->second.at(s.joint) - b->second.at(s.joint)).norm();
    ++count;
  }
  return count == 0 ? 0.0 : total / count;
}

}  // namespace sketchrefine
