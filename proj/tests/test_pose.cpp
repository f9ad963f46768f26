#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sketchrefine/pose.hpp"
#include "sketchrefine/random.hpp"

using namespace sketchrefine;

TEST_CASE("limb keypoints of an axis-aligned rectangle") {
  // 10 x 40 rectangle: columns 27..36, rows 12..51 of a 64 x 64 crop mapped
  // 1:1 onto the canvas. Its principal axis is x = 32 from y = 12 to y = 52.
  Mask mask = Mask::Zero(64, 64);
  mask.block(12, 27, 40, 10).setOnes();
  const PartKeypointSet kp = extract_keypoints(mask, PartLabel::LeftArm, {0, 0, 64, 64});
  REQUIRE(kp.joints.size() == 3);
  CHECK((kp.at(JointId::LShoulder) - Point2d(32, 12)).norm() <= 1.0);
  CHECK((kp.at(JointId::LWrist) - Point2d(32, 52)).norm() <= 1.0);
  CHECK((kp.at(JointId::LElbow) - Point2d(32, 32)).norm() <= 1e-9);

  // A torso shoulder below the rectangle flips which end is proximal.
  const PartKeypointSet torso{PartLabel::TopClothes, {{JointId::LShoulder, Point2d(32, 60)}}};
  const PartKeypointSet flipped = extract_keypoints(mask, PartLabel::LeftArm, {0, 0, 64, 64}, &torso);
  CHECK((flipped.at(JointId::LShoulder) - Point2d(32, 52)).norm() <= 1.0);
}

TEST_CASE("limb keypoints follow the box mapping") {
  Mask mask = Mask::Zero(32, 32);
  mask.block(4, 14, 24, 4).setOnes();
  const PartKeypointSet kp = extract_keypoints(mask, PartLabel::RightLeg, {100, 50, 64, 64});
  REQUIRE(kp.joints.size() == 2);
  CHECK(kp.at(JointId::RKnee).y() < kp.at(JointId::RAnkle).y());
  CHECK(kp.at(JointId::RKnee).x() == doctest::Approx(132.0));
  CHECK(kp.at(JointId::RKnee).y() == doctest::Approx(50 + 2 * 4.5));
}

TEST_CASE("head keypoints") {
  const Mask full = Mask::Ones(32, 32);
  const PartKeypointSet face = extract_keypoints(full, PartLabel::Face, {0, 0, 32, 32});
  CHECK((face.at(JointId::HeadTop) - Point2d(16, 0)).norm() <= 1.0);
  CHECK((face.at(JointId::Neck) - Point2d(16, 32)).norm() <= 1.0);
  const PartKeypointSet hair = extract_keypoints(full, PartLabel::Hair, {0, 0, 32, 32});
  CHECK(hair.joints.size() == 1);
  CHECK(hair.at(JointId::HeadTop) == face.at(JointId::HeadTop));
}

TEST_CASE("torso keypoints use insets of the tight box") {
  Mask mask = Mask::Zero(20, 20);
  mask.block(0, 0, 20, 10).setOnes();  // tight box x in [0, 10), y in [0, 20)
  const PartKeypointSet top = extract_keypoints(mask, PartLabel::TopClothes, {0, 0, 20, 20});
  CHECK(top.at(JointId::Neck) == Point2d(5, 0));
  CHECK(top.at(JointId::LShoulder) == Point2d(1, 0));
  CHECK(top.at(JointId::RShoulder) == Point2d(9, 0));
  CHECK(top.at(JointId::LHip) == Point2d(1, 20));
  CHECK(top.at(JointId::RHip) == Point2d(9, 20));
  const PartKeypointSet bottom = extract_keypoints(mask, PartLabel::BottomClothes, {0, 0, 20, 20});
  CHECK(bottom.at(JointId::LHip) == Point2d(1, 0));
  CHECK(bottom.at(JointId::RKnee) == Point2d(9, 20));
}

TEST_CASE("single-pixel masks collapse every joint onto the pixel") {
  Mask mask = Mask::Zero(16, 16);
  mask(5, 9) = 1;
  for (PartLabel label : kAllPartLabels) {
    const PartKeypointSet kp = extract_keypoints(mask, label, {0, 0, 16, 16});
    CHECK_FALSE(kp.joints.empty());
    for (const auto& [joint, p] : kp.joints) {
      CHECK(p.x() >= 9.0);
      CHECK(p.x() <= 10.0);
      CHECK(p.y() >= 5.0);
      CHECK(p.y() <= 6.0);
    }
  }
  CHECK_THROWS_AS(extract_keypoints(Mask::Zero(4, 4), PartLabel::Face, {0, 0, 4, 4}), Error);
}

TEST_CASE("heatmap rendering") {
  const PartKeypointSet kp{PartLabel::Face, {{JointId::HeadTop, Point2d(10, 20)}, {JointId::Neck, Point2d(30, 26)}}};
  const std::vector<Heatmap> maps = render_heatmaps(kp, 64, 64, 6.0, 1);
  REQUIRE(maps.size() == 2);
  CHECK(maps[0].joint == JointId::HeadTop);
  CHECK(maps[0].values(20, 10) == 1.0);
  CHECK(maps[0].values.maxCoeff() == 1.0);
  CHECK(std::abs(maps[0].values(20, 16) - std::exp(-0.5)) <= 1e-12);
  CHECK(std::abs(maps[0].values(26, 10) - std::exp(-0.5)) <= 1e-12);
  CHECK(heatmap_argmax(maps[0]) == Point2d(10, 20));
  // Both channels are the same Gaussian; only boundary truncation separates their sums.
  const double full = 2.0 * std::numbers::pi * 36.0;
  CHECK(maps[0].values.sum() < full);
  CHECK(maps[1].values.sum() < full);
  CHECK(std::abs(maps[0].values.sum() - maps[1].values.sum()) < 0.1 * full);
}

TEST_CASE("heatmap argmax recovers sub-pixel keypoints") {
  const PartKeypointSet kp{PartLabel::Hair, {{JointId::HeadTop, Point2d(10.5, 20.25)}}};
  const Heatmap h = render_heatmaps(kp, 64, 64, 6.0, 4).front();
  CHECK((heatmap_argmax(h) - Point2d(10.5, 20.25)).norm() <= 0.1);

  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    const Point2d p(rng.uniform(8, 248), rng.uniform(8, 248));
    const Heatmap hm = render_heatmaps({PartLabel::Hair, {{JointId::HeadTop, p}}}, 256, 256).front();
    CHECK((heatmap_argmax(hm) - p).norm() <= 0.1);
  }
}

TEST_CASE("heatmap argmax edge cases") {
  Heatmap single{JointId::Neck, 4, 6.0, decltype(Heatmap::values)::Zero(8, 8)};
  single.values(3, 5) = 0.7;
  CHECK(heatmap_argmax(single) == single.cell_point(5, 3));
  Heatmap flat{JointId::Neck, 4, 6.0, decltype(Heatmap::values)::Constant(8, 8, 0.2)};
  CHECK_THROWS_AS(heatmap_argmax(flat), Error);
  try {
    heatmap_argmax(flat);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FlatHeatmap);
  }
}
