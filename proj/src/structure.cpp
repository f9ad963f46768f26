#include "sketchrefine/structure.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sketchrefine/random.hpp"

namespace sketchrefine {
namespace {

constexpr double kDegenerateLength = 1e-12;

double reference_width(const PartKeypointSet& top) {
  return (top.at(JointId::LShoulder) - top.at(JointId::RShoulder)).norm();
}

const PartKeypointSet& reference_keypoints(const FigureKeypoints& keypoints) {
  const auto it = keypoints.find(kReferencePart);
  if (it == keypoints.end() || !it->second.has(JointId::LShoulder) ||
      !it->second.has(JointId::RShoulder)) {
    throw Error(ErrorCode::MissingReferencePart,
                "structure refinement needs the TopClothes reference part with both shoulders");
  }
  return it->second;
}

Affine2d transform_or_identity(const std::map<PartLabel, Affine2d>& transforms, PartLabel label) {
  const auto it = transforms.find(label);
  return it == transforms.end() ? Affine2d::identity() : it->second;
}

}  // namespace

SkeletonPrior build_skeleton_prior(const std::vector<FigureKeypoints>& figures) {
  std::map<Bone, std::vector<double>> ratios;
  int usable = 0;
  for (std::size_t f = 0; f < figures.size(); ++f) {
    const auto top = figures[f].find(kReferencePart);
    if (top == figures[f].end() || !top->second.has(JointId::LShoulder) ||
        !top->second.has(JointId::RShoulder)) {
      continue;
    }
    const double ref = reference_width(top->second);
    if (ref <= kDegenerateLength) {
      throw Error(ErrorCode::DegenerateReference,
                  "figure " + std::to_string(f) + " has zero shoulder width");
    }
    ++usable;
    for (const Bone& bone : skeleton_bones()) {
      const auto part = figures[f].find(bone.part);
      if (part == figures[f].end() || !part->second.has(bone.from) || !part->second.has(bone.to)) {
        continue;
      }
      ratios[bone].push_back((part->second.at(bone.from) - part->second.at(bone.to)).norm() / ref);
    }
  }
  if (usable < 2) {
    throw Error(ErrorCode::InsufficientCorpus,
                "skeleton prior needs at least 2 figures with reference shoulders, got " +
                    std::to_string(usable));
  }
  SkeletonPrior prior;
  for (const auto& [bone, values] : ratios) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    prior.bones[bone] = {mean, std::sqrt(var)};
  }
  return prior;
}

double local_identity_distance(const Affine2d& t, const Point2d& centroid) {
  Eigen::Matrix<double, 2, 3> local;
  local.leftCols<2>() = t.linear() - Eigen::Matrix2d::Identity();
  local.col(2) = t.apply(centroid) - centroid;
  return local.norm();
}

double structure_energy(const FigureKeypoints& keypoints,
                        const std::map<PartLabel, Affine2d>& transforms,
                        const SkeletonPrior& prior, const StructureWeights& weights) {
  const PartKeypointSet& top = reference_keypoints(keypoints);
  const double ref = reference_width(top.transformed(transform_or_identity(transforms, kReferencePart)));
  if (ref <= kDegenerateLength) {
    throw Error(ErrorCode::DegenerateReference, "reference shoulder width is zero");
  }

  double connectivity = 0.0;
  for (const SharedJoint& s : shared_joints()) {
    const auto a = keypoints.find(s.first);
    const auto b = keypoints.find(s.second);
    if (a == keypoints.end() || b == keypoints.end()) continue;
    if (!a->second.has(s.joint) || !b->second.has(s.joint)) continue;
    const Point2d pa = transform_or_identity(transforms, s.first).apply(a->second.at(s.joint));
    const Point2d pb = transform_or_identity(transforms, s.second).apply(b->second.at(s.joint));
    connectivity += (pa - pb).squaredNorm();
  }

  double proportion = 0.0;
  for (const auto& [bone, stats] : prior.bones) {
    const auto part = keypoints.find(bone.part);
    if (part == keypoints.end() || !part->second.has(bone.from) || !part->second.has(bone.to)) {
      continue;
    }
    const Affine2d t = transform_or_identity(transforms, bone.part);
    const double length = (t.apply(part->second.at(bone.from)) - t.apply(part->second.at(bone.to))).norm();
    const double r = length / ref - stats.mean_ratio;
    proportion += r * r;
  }

  double regularizer = 0.0;
  for (const auto& [label, kp] : keypoints) {
    if (label == kReferencePart) continue;
    const double delta = local_identity_distance(transform_or_identity(transforms, label), kp.centroid());
    regularizer += delta * delta;
  }

  const double energy = weights.connectivity * connectivity + weights.proportion * proportion +
                        weights.regularizer * regularizer;
  if (!std::isfinite(energy)) throw Error(ErrorCode::NonFiniteEnergy, "structure energy is not finite");
  return energy;
}

StructureProblem::StructureProblem(FigureKeypoints keypoints, const SkeletonPrior& prior,
                                   const StructureWeights& weights)
    : keypoints_(std::move(keypoints)), weights_(weights) {
  const PartKeypointSet& top = reference_keypoints(keypoints_);
  reference_length_ = reference_width(top);
  if (reference_length_ <= kDegenerateLength) {
    throw Error(ErrorCode::DegenerateReference, "reference shoulder width is zero");
  }
  for (const auto& [label, kp] : keypoints_) {
    for (const auto& [joint, p] : kp.joints) {
      if (!p.allFinite()) {
        throw Error(ErrorCode::NonFiniteEnergy,
                    "keypoint " + std::string(joint_name(joint)) + " of " +
                        std::string(label_name(label)) + " is not finite");
      }
    }
    centroids_[label] = kp.centroid();
    if (label != kReferencePart && !kp.joints.empty()) variables_.push_back(label);
  }
  for (const SharedJoint& s : shared_joints()) {
    const auto a = keypoints_.find(s.first);
    const auto b = keypoints_.find(s.second);
    if (a == keypoints_.end() || b == keypoints_.end()) continue;
    if (!a->second.has(s.joint) || !b->second.has(s.joint)) continue;
    links_.push_back({s.first, a->second.at(s.joint), s.second, b->second.at(s.joint)});
  }
  for (const auto& [bone, stats] : prior.bones) {
    const auto part = keypoints_.find(bone.part);
    if (part == keypoints_.end() || !part->second.has(bone.from) || !part->second.has(bone.to)) {
      continue;
    }
    bones_.push_back({bone.part, part->second.at(bone.from), part->second.at(bone.to),
                      stats.mean_ratio});
  }
  num_residuals_ = 2 * static_cast<int>(links_.size()) + static_cast<int>(bones_.size()) +
                   num_params();
}

int StructureProblem::block_of(PartLabel label) const {
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i] == label) return static_cast<int>(i);
  }
  return -1;
}

Point2d StructureProblem::apply(const Eigen::VectorXd& params, PartLabel label,
                                const Point2d& p) const {
  const int block = block_of(label);
  if (block < 0) return p;
  const auto q = params.segment<6>(6 * block);
  const Point2d d = p - centroids_.at(label);
  return {p.x() + q(0) * d.x() + q(1) * d.y() + q(2), p.y() + q(3) * d.x() + q(4) * d.y() + q(5)};
}

void StructureProblem::point_jacobian(PartLabel label, const Point2d& p, double scale,
                                      Eigen::Ref<Eigen::MatrixXd> rows) const {
  const int block = block_of(label);
  if (block < 0) return;
  const Point2d d = p - centroids_.at(label);
  const int c = 6 * block;
  rows(0, c + 0) += scale * d.x();
  rows(0, c + 1) += scale * d.y();
  rows(0, c + 2) += scale;
  rows(1, c + 3) += scale * d.x();
  rows(1, c + 4) += scale * d.y();
  rows(1, c + 5) += scale;
}

Affine2d StructureProblem::transform(const Eigen::VectorXd& params, PartLabel label) const {
  const int block = block_of(label);
  if (block < 0) return Affine2d::identity();
  const auto q = params.segment<6>(6 * block);
  const Point2d c = centroids_.at(label);
  Eigen::Matrix2d linear;
  linear << 1.0 + q(0), q(1), q(3), 1.0 + q(4);
  const Point2d offset = Point2d(q(2), q(5)) + c - linear * c;
  return {linear(0, 0), linear(0, 1), offset.x(), linear(1, 0), linear(1, 1), offset.y()};
}

Eigen::VectorXd StructureProblem::residuals(const Eigen::VectorXd& params) const {
  Eigen::VectorXd r(num_residuals_);
  int row = 0;
  const double sh = std::sqrt(weights_.connectivity);
  for (const LinkTerm& link : links_) {
    r.segment<2>(row) = sh * (apply(params, link.first, link.first_point) -
                              apply(params, link.second, link.second_point));
    row += 2;
  }
  const double sp = std::sqrt(weights_.proportion);
  for (const BoneTerm& bone : bones_) {
    const double length =
        (apply(params, bone.part, bone.from) - apply(params, bone.part, bone.to)).norm();
    r(row++) = sp * (length / reference_length_ - bone.target);
  }
  r.tail(num_params()) = std::sqrt(weights_.regularizer) * params;
  return r;
}

Eigen::MatrixXd StructureProblem::jacobian(const Eigen::VectorXd& params) const {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(num_residuals_, num_params());
  int row = 0;
  const double sh = std::sqrt(weights_.connectivity);
  for (const LinkTerm& link : links_) {
    point_jacobian(link.first, link.first_point, sh, jac.middleRows(row, 2));
    point_jacobian(link.second, link.second_point, -sh, jac.middleRows(row, 2));
    row += 2;
  }
  const double sp = std::sqrt(weights_.proportion);
  for (const BoneTerm& bone : bones_) {
    const Point2d u = apply(params, bone.part, bone.from) - apply(params, bone.part, bone.to);
    const double length = u.norm();
    if (length > kDegenerateLength) {
      Eigen::MatrixXd dpoint = Eigen::MatrixXd::Zero(2, num_params());
      point_jacobian(bone.part, bone.from, 1.0, dpoint);
      point_jacobian(bone.part, bone.to, -1.0, dpoint);
      jac.row(row) = (sp / (reference_length_ * length)) * (u.transpose() * dpoint);
    }
    ++row;
  }
  jac.bottomRightCorner(num_params(), num_params()).diagonal().setConstant(
      std::sqrt(weights_.regularizer));
  return jac;
}

LevenbergResult minimize_structure(const StructureProblem& problem, const Eigen::VectorXd& start,
                                   const LevenbergOptions& options) {
  LevenbergResult result;
  result.params = start;
  Eigen::VectorXd r = problem.residuals(start);
  double energy = r.squaredNorm();
  if (!std::isfinite(energy)) throw Error(ErrorCode::NonFiniteEnergy, "structure energy is not finite");
  result.initial_energy = energy;
  double damping = options.initial_damping;
  const int n = problem.num_params();

  for (int it = 0; it < options.max_iterations && n > 0; ++it) {
    const Eigen::MatrixXd jac = problem.jacobian(result.params);
    const Eigen::VectorXd gradient = jac.transpose() * r;
    if (gradient.norm() < options.gradient_tolerance) break;
    const Eigen::MatrixXd normal = jac.transpose() * jac;
    result.iterations = it + 1;

    bool accepted = false;
    while (!accepted && damping < 1e16) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal().array() += damping;
      const Eigen::VectorXd step = damped.ldlt().solve(-gradient);
      const Eigen::VectorXd candidate = result.params + step;
      const Eigen::VectorXd candidate_r = problem.residuals(candidate);
      const double candidate_energy = candidate_r.squaredNorm();
      if (std::isfinite(candidate_energy) && candidate_energy < energy) {
        result.params = candidate;
        r = candidate_r;
        energy = candidate_energy;
        damping = std::max(damping / 10.0, 1e-15);
        accepted = true;
      } else {
        damping *= 10.0;
      }
    }
    if (!accepted) break;
  }
  result.final_energy = energy;
  return result;
}

StructurePart transform_part(const StructurePart& part, const Affine2d& t) {
  if (t.is_exact_identity()) return part;
  StructurePart out;
  out.keypoints = part.keypoints.transformed(t);
  const int resolution = part.sketch.resolution();
  const BoundingBox& box = part.sketch.box;
  Point2d lo(std::numeric_limits<double>::max(), std::numeric_limits<double>::max());
  Point2d hi = -lo;
  for (const Point2d& corner : {Point2d(box.x, box.y), Point2d(box.x + box.width, box.y),
                                Point2d(box.x, box.y + box.height),
                                Point2d(box.x + box.width, box.y + box.height)}) {
    const Point2d p = t.apply(corner);
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const BoundingBox moved{lo.x(), lo.y(), std::max(hi.x() - lo.x(), 1e-6),
                          std::max(hi.y() - lo.y(), 1e-6)};
  const Affine2d crop_map = moved.crop_to_canvas(resolution).inverse().compose(t).compose(
      box.crop_to_canvas(resolution));
  out.sketch = {part.sketch.label, moved,
                resolution > 0 ? warp_raster(part.sketch.crop, crop_map, resolution, resolution, 0.0)
                               : part.sketch.crop};
  out.mask = part.mask.size() > 0
                 ? warp_labels(part.mask, crop_map, static_cast<int>(part.mask.cols()),
                               static_cast<int>(part.mask.rows()), 0)
                 : part.mask;
  return out;
}

FigureKeypoints keypoints_of(const std::vector<StructurePart>& parts) {
  FigureKeypoints out;
  for (const StructurePart& part : parts) {
    if (!part.keypoints.joints.empty()) out[part.keypoints.label] = part.keypoints;
  }
  return out;
}

StructureSolution refine_structure(const std::vector<StructurePart>& parts,
                                   const SkeletonPrior& prior, const StructureOptions& options) {
  int present = 0;
  bool has_reference = false;
  for (const StructurePart& part : parts) {
    if (part.keypoints.joints.empty()) continue;
    ++present;
    if (part.keypoints.label == kReferencePart) has_reference = true;
  }
  if (!has_reference) {
    throw Error(ErrorCode::MissingReferencePart,
                "structure refinement needs the TopClothes reference part");
  }
  if (present < 2) {
    throw Error(ErrorCode::InsufficientParts, "structure refinement needs at least 2 present parts");
  }

  StructureSolution solution;
  FigureKeypoints current = keypoints_of(parts);
  for (const auto& [label, kp] : current) solution.total_transforms[label] = Affine2d::identity();

  auto data_energy = [&](const FigureKeypoints& kps) {
    StructureWeights data = options.weights;
    data.regularizer = 0.0;
    return structure_energy(kps, {}, prior, data);
  };
  solution.energy_trace.push_back(data_energy(current));

  for (int step = 0; step < options.steps; ++step) {
    const StructureProblem problem(current, prior, options.weights);
    const LevenbergResult fit =
        minimize_structure(problem, Eigen::VectorXd::Zero(problem.num_params()), options.solver);
    solution.step_energies.push_back(fit.final_energy);
    for (auto& [label, kp] : current) {
      const Affine2d t = problem.transform(fit.params, label);
      solution.step_transforms[label].push_back(t);
      solution.total_transforms[label] = t.compose(solution.total_transforms[label]);
      kp = kp.transformed(t);
    }
    solution.energy_trace.push_back(data_energy(current));
  }

  for (const StructurePart& part : parts) {
    const auto it = solution.total_transforms.find(part.keypoints.label);
    if (part.keypoints.joints.empty() || it == solution.total_transforms.end()) {
      solution.parts.push_back(part);
      continue;
    }
    StructurePart moved = transform_part(part, it->second);
    // Keypoints follow the cascade state rather than the composed matrix.
    moved.keypoints = current.at(part.keypoints.label);
    solution.heatmaps[part.keypoints.label] = render_heatmaps(
        moved.keypoints, options.canvas_width, options.canvas_height, options.heatmap_sigma,
        options.heatmap_stride);
    solution.parts.push_back(std::move(moved));
  }
  return solution;
}

PerturbResult perturb_parts(const std::vector<StructurePart>& parts,
                            const PerturbMagnitude& magnitude, std::uint64_t seed) {
  Rng rng(seed);
  std::map<PartLabel, Affine2d> transforms;
  for (PartLabel label : kAllPartLabels) {
    const StructurePart* part = nullptr;
    for (const StructurePart& p : parts) {
      if (p.keypoints.label == label && !p.keypoints.joints.empty()) part = &p;
    }
    if (part == nullptr) continue;
    if (label == kReferencePart) {
      transforms[label] = Affine2d::identity();
      continue;
    }
    const double tx = rng.symmetric(magnitude.max_translate);
    const double ty = rng.symmetric(magnitude.max_translate);
    const double angle = rng.symmetric(magnitude.max_rotate_deg) * std::numbers::pi / 180.0;
    const double scale = 1.0 + rng.symmetric(magnitude.max_scale);
    const double shear = rng.symmetric(magnitude.max_shear);
    const Affine2d linear =
        Affine2d::rotation(angle).compose(Affine2d::scaling(scale)).compose(Affine2d::shear(shear, 0.0));
    Affine2d t = Affine2d::translation(tx, ty).compose(
        Affine2d::about(linear, part->keypoints.centroid()));
    // Zero magnitudes must reproduce the input bit for bit.
    if (t.identity_distance() == 0.0) t = Affine2d::identity();
    transforms[label] = t;
  }

  PerturbResult out;
  out.transforms = transforms;
  for (const StructurePart& part : parts) {
    const auto it = transforms.find(part.keypoints.label);
    out.parts.push_back(it == transforms.end() || part.keypoints.joints.empty()
                            ? part
                            : transform_part(part, it->second));
  }
  return out;
}

}  // namespace sketchrefine
