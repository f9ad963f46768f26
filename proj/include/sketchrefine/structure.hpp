#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "sketchrefine/pose.hpp"
#include "sketchrefine/raster.hpp"
#include "sketchrefine/skeleton.hpp"

namespace sketchrefine {

struct BoneStats {
  double mean_ratio = 0.0;  // bone length / shoulder width
  double stddev = 0.0;      // population standard deviation
};

/// Corpus statistics of bone-length to shoulder-width ratios.
struct SkeletonPrior {
  std::map<Bone, BoneStats> bones;
};

/// Needs at least two figures carrying the reference shoulders; bones missing
/// from every figure are left out of the prior.
SkeletonPrior build_skeleton_prior(const std::vector<FigureKeypoints>& figures);

struct StructureWeights {
  double connectivity = 100.0;  // lambda_H
  double proportion = 1.0;      // lambda_P
  double regularizer = 1.0;     // lambda_L
};

/// Regularizer distance of a part transform, measured about the part's
/// keypoint centroid c: || [A - I | T(c) - c] ||_F. Translation-invariant,
/// unlike the canvas-origin identity distance.
double local_identity_distance(const Affine2d& t, const Point2d& centroid);

/// Connectivity + proportion + regularizer energy of a figure under per-part
/// transforms (missing entries mean identity). Absent parts contribute nothing.
double structure_energy(const FigureKeypoints& keypoints,
                        const std::map<PartLabel, Affine2d>& transforms,
                        const SkeletonPrior& prior, const StructureWeights& weights);

/// Least-squares form of structure_energy over the six parameters of every
/// non-reference part. Parameters q of one part act about its keypoint
/// centroid c: T(p) = p + [[q0, q1], [q3, q4]] (p - c) + (q2, q5).
class StructureProblem {
 public:
  StructureProblem(FigureKeypoints keypoints, const SkeletonPrior& prior,
                   const StructureWeights& weights);

  int num_params() const { return 6 * static_cast<int>(variables_.size()); }
  int num_residuals() const { return num_residuals_; }
  const std::vector<PartLabel>& variable_parts() const { return variables_; }

  Eigen::VectorXd residuals(const Eigen::VectorXd& params) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& params) const;
  double energy(const Eigen::VectorXd& params) const { return residuals(params).squaredNorm(); }

  /// Canvas-frame transform of a part for the given parameters; identity for
  /// the reference part and for parts without parameters.
  Affine2d transform(const Eigen::VectorXd& params, PartLabel label) const;

 private:
  struct BoneTerm {
    PartLabel part;
    Point2d from;
    Point2d to;
    double target;
  };
  struct LinkTerm {
    PartLabel first;
    Point2d first_point;
    PartLabel second;
    Point2d second_point;
  };

  int block_of(PartLabel label) const;
  Point2d apply(const Eigen::VectorXd& params, PartLabel label, const Point2d& p) const;
  void point_jacobian(PartLabel label, const Point2d& p, double scale,
                      Eigen::Ref<Eigen::MatrixXd> rows) const;

  FigureKeypoints keypoints_;
  StructureWeights weights_;
  std::vector<PartLabel> variables_;
  std::map<PartLabel, Point2d> centroids_;
  std::vector<LinkTerm> links_;
  std::vector<BoneTerm> bones_;
  double reference_length_ = 1.0;
  int num_residuals_ = 0;
};

struct LevenbergOptions {
  int max_iterations = 50;
  double initial_damping = 1e-3;
  double gradient_tolerance = 1e-8;
};

struct LevenbergResult {
  Eigen::VectorXd params;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  int iterations = 0;
};

/// Damped Gauss-Newton from `start`: (J^T J + mu I) dx = -J^T r, mu divided
/// by 10 on an accepted step and multiplied by 10 on a rejected one.
LevenbergResult minimize_structure(const StructureProblem& problem, const Eigen::VectorXd& start,
                                   const LevenbergOptions& options = {});

/// A part travelling through structure refinement.
struct StructurePart {
  PartSketch sketch;
  Mask mask;
  PartKeypointSet keypoints;
};

/// Applies a canvas-frame transform to a part. The box grows to the bounding
/// box of the transformed box corners; crop and mask are resampled once.
StructurePart transform_part(const StructurePart& part, const Affine2d& t);

struct StructureOptions {
  int steps = 3;
  StructureWeights weights;
  LevenbergOptions solver;
  int canvas_width = kDefaultCanvasSize;
  int canvas_height = kDefaultCanvasSize;
  double heatmap_sigma = kDefaultHeatmapSigma;
  int heatmap_stride = kDefaultHeatmapStride;
};

struct StructureSolution {
  /// Canvas-frame transform accepted in each cascade step, per part.
  std::map<PartLabel, std::vector<Affine2d>> step_transforms;
  /// Composition of all steps, per part.
  std::map<PartLabel, Affine2d> total_transforms;
  /// Parts warped once from the inputs by their total transforms.
  std::vector<StructurePart> parts;
  /// Heatmaps rendered from the final keypoints.
  std::map<PartLabel, std::vector<Heatmap>> heatmaps;
  /// Connectivity + proportion energy of the state before step 1 and after
  /// every step (steps + 1 entries).
  std::vector<double> energy_trace;
  /// Optimized objective (including the regularizer) of each step.
  std::vector<double> step_energies;
};

/// Cascaded refinement: every step solves for per-part transforms from the
/// current keypoints, composes them onto the running totals and maps the
/// keypoints forward. TopClothes is the fixed reference.
StructureSolution refine_structure(const std::vector<StructurePart>& parts,
                                   const SkeletonPrior& prior,
                                   const StructureOptions& options = {});

struct PerturbMagnitude {
  double max_translate = 10.0;  // px
  double max_rotate_deg = 15.0;
  double max_scale = 0.10;  // fraction
  double max_shear = 0.05;
};

struct PerturbResult {
  std::vector<StructurePart> parts;
  std::map<PartLabel, Affine2d> transforms;  // identity for the reference part
};

/// Random affine perturbation of every non-reference part about its keypoint
/// centroid. Draws are made in part-label order from one generator seeded by
/// `seed`.
PerturbResult perturb_parts(const std::vector<StructurePart>& parts,
                            const PerturbMagnitude& magnitude, std::uint64_t seed);

FigureKeypoints keypoints_of(const std::vector<StructurePart>& parts);

}  // namespace sketchrefine
