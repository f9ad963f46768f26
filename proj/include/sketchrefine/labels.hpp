#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace sketchrefine {

/// Body-part labels. Codes 1..8 are stable and appear verbatim in label PNGs;
/// 0 is background.
enum class PartLabel : std::uint8_t {
  Hair = 1,
  Face = 2,
  TopClothes = 3,
  BottomClothes = 4,
  LeftArm = 5,
  RightArm = 6,
  LeftLeg = 7,
  RightLeg = 8,
};

inline constexpr std::uint8_t kBackgroundCode = 0;
inline constexpr int kNumPartLabels = 8;

inline constexpr std::array<PartLabel, kNumPartLabels> kAllPartLabels = {
    PartLabel::Hair,    PartLabel::Face,     PartLabel::TopClothes, PartLabel::BottomClothes,
    PartLabel::LeftArm, PartLabel::RightArm, PartLabel::LeftLeg,    PartLabel::RightLeg,
};

/// The reference part is never transformed during structure refinement.
inline constexpr PartLabel kReferencePart = PartLabel::TopClothes;

/// Shape classes: left and right limbs share one class through mirroring.
enum class ShapeClass : std::uint8_t {
  Hair = 0,
  Face = 1,
  TopClothes = 2,
  BottomClothes = 3,
  Arm = 4,
  Leg = 5,
};

inline constexpr int kNumShapeClasses = 6;

inline constexpr std::array<ShapeClass, kNumShapeClasses> kAllShapeClasses = {
    ShapeClass::Hair, ShapeClass::Face, ShapeClass::TopClothes,
    ShapeClass::BottomClothes, ShapeClass::Arm, ShapeClass::Leg,
};

constexpr std::uint8_t label_code(PartLabel label) { return static_cast<std::uint8_t>(label); }

constexpr std::optional<PartLabel> label_from_code(int code) {
  if (code < 1 || code > kNumPartLabels) return std::nullopt;
  return static_cast<PartLabel>(code);
}

constexpr int label_index(PartLabel label) { return static_cast<int>(label) - 1; }

constexpr ShapeClass shape_class_of(PartLabel label) {
  switch (label) {
    case PartLabel::Hair: return ShapeClass::Hair;
    case PartLabel::Face: return ShapeClass::Face;
    case PartLabel::TopClothes: return ShapeClass::TopClothes;
    case PartLabel::BottomClothes: return ShapeClass::BottomClothes;
    case PartLabel::LeftArm:
    case PartLabel::RightArm: return ShapeClass::Arm;
    case PartLabel::LeftLeg:
    case PartLabel::RightLeg: return ShapeClass::Leg;
  }
  return ShapeClass::Hair;
}

/// Right-side limbs are mirrored horizontally into their shared class.
constexpr bool is_mirrored(PartLabel label) {
  return label == PartLabel::RightArm || label == PartLabel::RightLeg;
}

constexpr std::string_view label_name(PartLabel label) {
  switch (label) {
    case PartLabel::Hair: return "Hair";
    case PartLabel::Face: return "Face";
    case PartLabel::TopClothes: return "TopClothes";
    case PartLabel::BottomClothes: return "BottomClothes";
    case PartLabel::LeftArm: return "LeftArm";
    case PartLabel::RightArm: return "RightArm";
    case PartLabel::LeftLeg: return "LeftLeg";
    case PartLabel::RightLeg: return "RightLeg";
  }
  return "?";
}

constexpr std::optional<PartLabel> label_from_name(std::string_view name) {
  for (PartLabel label : kAllPartLabels) {
    if (label_name(label) == name) return label;
  }
  return std::nullopt;
}

constexpr std::string_view shape_class_name(ShapeClass c) {
  switch (c) {
    case ShapeClass::Hair: return "hair";
    case ShapeClass::Face: return "face";
    case ShapeClass::TopClothes: return "top_clothes";
    case ShapeClass::BottomClothes: return "bottom_clothes";
    case ShapeClass::Arm: return "arm";
    case ShapeClass::Leg: return "leg";
  }
  return "?";
}

/// Parsing-map priority when part masks overlap; earlier entries win.
inline constexpr std::array<PartLabel, kNumPartLabels> kAssemblyPriority = {
    PartLabel::Face,    PartLabel::Hair,       PartLabel::LeftArm,  PartLabel::RightArm,
    PartLabel::TopClothes, PartLabel::LeftLeg, PartLabel::RightLeg, PartLabel::BottomClothes,
};

constexpr int assembly_rank(PartLabel label) {
  for (int i = 0; i < kNumPartLabels; ++i) {
    if (kAssemblyPriority[i] == label) return i;
  }
  return kNumPartLabels;
}

}  // namespace sketchrefine
