#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sketchrefine/labels.hpp"
#include "sketchrefine/raster.hpp"

namespace sketchrefine {

inline constexpr int kDefaultLatentDim = 128;
inline constexpr int kDefaultNeighbors = 10;
inline constexpr double kDefaultMaskRidge = 1e-2;
/// Gram regularizer of the interpolation weights, relative to trace(C) / K.
inline constexpr double kGramRegularization = 1e-9;

struct LatentVector {
  ShapeClass shape_class = ShapeClass::Hair;
  Eigen::VectorXd coords;

  Eigen::Index dim() const { return coords.size(); }
};

/// Linear shape space of one part class.
///
/// Rows of `latents` are corpus entries; an entry's id is its row index, and
/// `item_ids` / `mirrored` record which corpus item and side it came from.
struct ShapeSpace {
  ShapeClass shape_class = ShapeClass::Hair;
  int resolution = kDefaultPartResolution;
  Eigen::VectorXd mean;            // P*P
  Eigen::MatrixXd basis;           // P*P x d, orthonormal columns
  Eigen::MatrixXd latents;         // n x d
  Eigen::MatrixXd mask_regressor;  // (d+1) x P*P, last row is the bias
  std::vector<std::uint64_t> item_ids;
  std::vector<std::uint8_t> mirrored;

  int dim() const { return static_cast<int>(basis.cols()); }
  int size() const { return static_cast<int>(latents.rows()); }
  LatentVector latent(int entry) const { return {shape_class, latents.row(entry).transpose()}; }
};

/// One shape space per class; classes without corpus samples are absent.
struct ShapeSpaceIndex {
  std::array<std::optional<ShapeSpace>, kNumShapeClasses> classes;

  bool has(ShapeClass c) const { return classes[static_cast<int>(c)].has_value(); }
  const ShapeSpace& at(ShapeClass c) const;
  ShapeSpace& at(ShapeClass c);
  const ShapeSpace& for_label(PartLabel label) const { return at(shape_class_of(label)); }
};

struct ShapeSample {
  PartSketch part;
  Mask mask;
  std::uint64_t item_id = 0;
};

struct ShapeSpaceOptions {
  int dim = kDefaultLatentDim;
  /// Every class must hold at least max(dim, min_neighbors) samples.
  int min_neighbors = kDefaultNeighbors;
  double mask_ridge = kDefaultMaskRidge;
};

/// Fits per-class PCA bases and mask regressors. Absent (blank) parts are
/// ignored; right-side limbs are mirrored into the shared class. The latent
/// dimension is clamped to the numerical rank, with a message appended to
/// `warnings` when that happens.
ShapeSpaceIndex build_shape_space(const std::vector<ShapeSample>& samples,
                                  const ShapeSpaceOptions& options = {},
                                  std::vector<std::string>* warnings = nullptr);

/// v = B^T (x - mu), x flattened row-major after optional mirroring.
LatentVector encode(const ShapeSpace& space, const SketchRaster& crop, bool mirrored = false);

/// clamp(mu + B v, 0, 1) reshaped to P x P, un-mirrored if requested.
SketchRaster decode_sketch(const ShapeSpace& space, const LatentVector& v, bool mirrored = false);

/// threshold([v; 1]^T W_m, 0.5).
Mask decode_mask(const ShapeSpace& space, const LatentVector& v, bool mirrored = false);

/// Ids of the k nearest corpus entries, ascending by distance then id.
/// `exclude` drops one entry (leave-one-out).
std::vector<int> knn_query(const ShapeSpace& space, const LatentVector& v, int k,
                           std::optional<int> exclude = std::nullopt);

/// Sum-to-one weights reconstructing `v` from the rows of `neighbors`
/// (K x d): w = (C + eps I)^-1 1 normalized, with C the local Gram matrix and
/// eps = kGramRegularization * trace(C) / K (1e-8 when the trace is 0).
Eigen::VectorXd solve_lle_weights(const Eigen::VectorXd& v, const Eigen::MatrixXd& neighbors);

struct ProjectionResult {
  LatentVector projected;
  std::vector<int> neighbor_ids;
  Eigen::VectorXd weights;
  double residual = 0.0;  // ||v - sum_k w_k v_k||
};

ProjectionResult project(const ShapeSpace& space, const LatentVector& v, int k = kDefaultNeighbors,
                         std::optional<int> exclude = std::nullopt);

/// Projection of a stored corpus entry; with leave_one_out the entry is not
/// allowed to reconstruct itself, simulating an unseen input.
ProjectionResult project_corpus_entry(const ShapeSpace& space, int entry, int k,
                                      bool leave_one_out);

struct RefinedPart {
  PartSketch sketch;
  Mask mask;
  std::optional<ProjectionResult> projection;  // empty for absent parts
};

/// encode -> project -> decode. Absent parts pass through with an empty mask.
RefinedPart refine_part(const ShapeSpace& space, const PartSketch& part, int k = kDefaultNeighbors);
RefinedPart refine_part(const ShapeSpaceIndex& index, const PartSketch& part,
                        int k = kDefaultNeighbors);

struct PartLayer {
  PartSketch sketch;
  Mask mask;  // crop frame, same resolution as sketch.crop
};

struct AssembledFigure {
  SketchRaster sketch;
  ParsingMap parsing;
};

/// Pastes every part through its box: ink by per-pixel max, labels by
/// kAssemblyPriority.
AssembledFigure assemble_global(const std::vector<PartLayer>& parts, int canvas_width,
                                int canvas_height);

}  // namespace sketchrefine
