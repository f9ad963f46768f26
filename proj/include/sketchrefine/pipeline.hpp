#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "json.hpp"

#include "sketchrefine/corpus.hpp"
#include "sketchrefine/image_io.hpp"
#include "sketchrefine/shape_space.hpp"
#include "sketchrefine/structure.hpp"

namespace sketchrefine {

struct RefineOptions {
  int k = kDefaultNeighbors;
  int steps = 3;
  StructureWeights weights;
  bool skip_projection = false;
  bool skip_transformation = false;
};

struct RequestPart {
  PartSketch sketch;
  std::optional<Mask> mask;                 // crop frame; decoded from the shape space if absent
  std::optional<PartKeypointSet> keypoints;  // author annotations take precedence
};

struct RefineRequest {
  int canvas_width = kDefaultCanvasSize;
  int canvas_height = kDefaultCanvasSize;
  std::vector<RequestPart> parts;
  RefineOptions options;
};

/// Request carrying an item's crops, masks and (optionally) its keypoints.
RefineRequest request_from_item(const CorpusItem& item, bool carry_keypoints = true,
                                bool carry_masks = false);

struct StageTimings {
  double projection_ms = 0.0;
  double keypoints_ms = 0.0;
  double structure_ms = 0.0;
  double assembly_ms = 0.0;
  double preview_ms = 0.0;
};

struct PartReport {
  PartLabel label = PartLabel::Hair;
  BoundingBox box;
  std::optional<ProjectionResult> projection;
  std::vector<Affine2d> step_transforms;  // empty when transformation is skipped
};

struct RefineResponse {
  SketchRaster sketch;
  ParsingMap parsing;
  RgbImage preview;
  std::vector<PartReport> parts;  // label order
  std::vector<double> energy_trace;
  StageTimings timings;
};

RefineResponse run_pipeline(const RefineRequest& request, const ShapeSpaceIndex& index,
                            const SkeletonPrior& prior);

/// Label colours for the preview; a missing label is an error at compose time.
using Palette = std::map<std::uint8_t, std::array<std::uint8_t, 3>>;

/// Fixed palette, version 1:
///   Hair #6B3A1E, Face #F2C9A0, TopClothes #2E6FD8, BottomClothes #2D3A4A,
///   LeftArm #E8A87C, RightArm #D9906A, LeftLeg #B5835A, RightLeg #A0714B.
const Palette& default_palette();

inline constexpr double kPreviewInkOpacity = 0.85;

/// Labels filled with palette colours over white, black ink blended on top
/// at 85% opacity.
RgbImage compose_preview(const SketchRaster& sketch, const ParsingMap& parsing,
                         const Palette& palette = default_palette());

// ---- JSON wire format ---------------------------------------------------

/// Parses a RefineRequest body. Part crops are resampled to `resolution`.
RefineRequest parse_refine_request(const nlohmann::json& body, int resolution);

nlohmann::json projection_to_json(const ShapeSpace& space, const ProjectionResult& projection);

/// Response body; timings are optional so bodies can be compared byte-wise.
nlohmann::json response_to_json(const RefineResponse& response, const ShapeSpaceIndex& index,
                                bool include_timings = true);

nlohmann::json transform_to_json(const Affine2d& t);

}  // namespace sketchrefine
