#include "sketchrefine/shape_space.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace sketchrefine {
namespace {

Eigen::VectorXd flatten(const SketchRaster& crop, bool mirrored) {
  const SketchRaster oriented = mirrored ? mirror_horizontal(crop) : crop;
  return Eigen::Map<const Eigen::VectorXd>(oriented.data(), oriented.size());
}

void check_crop(const ShapeSpace& space, Eigen::Index rows, Eigen::Index cols) {
  if (rows != space.resolution || cols != space.resolution) {
    throw Error(ErrorCode::DimensionMismatch,
                "crop is " + std::to_string(cols) + "x" + std::to_string(rows) + ", shape space '" +
                    std::string(shape_class_name(space.shape_class)) + "' expects " +
                    std::to_string(space.resolution) + "x" + std::to_string(space.resolution));
  }
}

void check_latent(const ShapeSpace& space, const LatentVector& v) {
  if (v.shape_class != space.shape_class || v.dim() != space.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "latent of class '" + std::string(shape_class_name(v.shape_class)) +
                    "' with d=" + std::to_string(v.dim()) + " does not fit shape space '" +
                    std::string(shape_class_name(space.shape_class)) +
                    "' with d=" + std::to_string(space.dim()));
  }
  if (!v.coords.allFinite()) {
    throw Error(ErrorCode::DimensionMismatch, "latent vector has non-finite entries");
  }
}

// Largest-magnitude entry positive; ties go to the lowest row.
void fix_column_signs(Eigen::MatrixXd& basis) {
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index r = 0; r < basis.rows(); ++r) {
      const double a = std::abs(basis(r, c));
      if (a > best_abs) {
        best_abs = a;
        best = r;
      }
    }
    if (basis(best, c) < 0.0) basis.col(c) *= -1.0;
  }
}

struct ClassSamples {
  std::vector<Eigen::VectorXd> crops;
  std::vector<Eigen::VectorXd> masks;
  std::vector<std::uint64_t> ids;
  std::vector<std::uint8_t> mirrored;
  int resolution = 0;
};

ShapeSpace fit_class(ShapeClass shape_class, const ClassSamples& s, const ShapeSpaceOptions& options,
                     std::vector<std::string>* warnings) {
  const auto n = static_cast<Eigen::Index>(s.crops.size());
  const Eigen::Index pixels = static_cast<Eigen::Index>(s.resolution) * s.resolution;
  const std::string name(shape_class_name(shape_class));
  auto warn = [&](const std::string& msg) {
    if (warnings != nullptr) warnings->push_back(name + ": " + msg);
  };

  Eigen::MatrixXd x(n, pixels);
  Eigen::MatrixXd y(n, pixels);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = s.crops[i].transpose();
    y.row(i) = s.masks[i].transpose();
  }

  ShapeSpace space;
  space.shape_class = shape_class;
  space.resolution = s.resolution;
  space.item_ids = s.ids;
  space.mirrored = s.mirrored;
  space.mean = x.colwise().mean().transpose();
  x.rowwise() -= space.mean.transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double tol = sv.size() > 0 ? std::max(1e-12, 1e-9 * sv(0)) : 1e-12;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) ++rank;
  }

  int dim = options.dim;
  if (rank == 0) {
    warn("degenerate corpus (all crops identical); latent dimension clamped to 1");
    dim = 1;
  } else if (dim > rank) {
    warn("latent dimension " + std::to_string(dim) + " exceeds corpus rank " +
         std::to_string(rank) + "; clamped");
    dim = rank;
  }

  space.basis = svd.matrixV().leftCols(dim);
  fix_column_signs(space.basis);
  space.latents = x * space.basis;

  // Ridge regression from [latent, 1] to mask pixels; the bias is not penalized.
  Eigen::MatrixXd design(n, dim + 1);
  design.leftCols(dim) = space.latents;
  design.col(dim).setOnes();
  Eigen::MatrixXd gram = design.transpose() * design;
  gram.diagonal().head(dim).array() += options.mask_ridge;
  space.mask_regressor = gram.ldlt().solve(design.transpose() * y);
  return space;
}

}  // namespace

const ShapeSpace& ShapeSpaceIndex::at(ShapeClass c) const {
  const auto& slot = classes[static_cast<int>(c)];
  if (!slot) {
    throw Error(ErrorCode::ClassNotIndexed,
                "shape class '" + std::string(shape_class_name(c)) + "' is not in the index");
  }
  return *slot;
}

ShapeSpace& ShapeSpaceIndex::at(ShapeClass c) {
  return const_cast<ShapeSpace&>(std::as_const(*this).at(c));
}

ShapeSpaceIndex build_shape_space(const std::vector<ShapeSample>& samples,
                                  const ShapeSpaceOptions& options,
                                  std::vector<std::string>* warnings) {
  if (options.dim < 1) {
    throw Error(ErrorCode::InsufficientCorpus, "latent dimension must be at least 1");
  }
  std::array<ClassSamples, kNumShapeClasses> grouped;
  for (const ShapeSample& sample : samples) {
    if (!sample.part.present()) continue;
    const int resolution = sample.part.resolution();
    if (sample.part.crop.cols() != resolution || sample.mask.rows() != resolution ||
        sample.mask.cols() != resolution) {
      throw Error(ErrorCode::DimensionMismatch, "part crop and mask must be square and equal size");
    }
    ClassSamples& group = grouped[static_cast<int>(shape_class_of(sample.part.label))];
    if (group.resolution == 0) group.resolution = resolution;
    if (group.resolution != resolution) {
      throw Error(ErrorCode::DimensionMismatch, "mixed crop resolutions within one shape class");
    }
    const bool mirrored = is_mirrored(sample.part.label);
    group.crops.push_back(flatten(sample.part.crop, mirrored));
    const Mask oriented = mirrored ? mirror_horizontal(sample.mask) : sample.mask;
    group.masks.push_back(
        Eigen::Map<const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>>(oriented.data(),
                                                                          oriented.size())
            .cast<double>());
    group.ids.push_back(sample.item_id);
    group.mirrored.push_back(mirrored ? 1 : 0);
  }

  const auto required = static_cast<std::size_t>(std::max(options.dim, options.min_neighbors));
  ShapeSpaceIndex index;
  for (ShapeClass c : kAllShapeClasses) {
    const ClassSamples& group = grouped[static_cast<int>(c)];
    if (group.crops.empty()) continue;
    if (group.crops.size() < required) {
      throw Error(ErrorCode::InsufficientCorpus,
                  "shape class '" + std::string(shape_class_name(c)) + "' has " +
                      std::to_string(group.crops.size()) + " samples, needs at least " +
                      std::to_string(required));
    }
    index.classes[static_cast<int>(c)] = fit_class(c, group, options, warnings);
  }
  return index;
}

LatentVector encode(const ShapeSpace& space, const SketchRaster& crop, bool mirrored) {
  check_crop(space, crop.rows(), crop.cols());
  return {space.shape_class, space.basis.transpose() * (flatten(crop, mirrored) - space.mean)};
}

SketchRaster decode_sketch(const ShapeSpace& space, const LatentVector& v, bool mirrored) {
  check_latent(space, v);
  const Eigen::VectorXd flat = (space.mean + space.basis * v.coords).cwiseMax(0.0).cwiseMin(1.0);
  SketchRaster out =
      Eigen::Map<const SketchRaster>(flat.data(), space.resolution, space.resolution);
  return mirrored ? SketchRaster(mirror_horizontal(out)) : out;
}

Mask decode_mask(const ShapeSpace& space, const LatentVector& v, bool mirrored) {
  check_latent(space, v);
  const int d = space.dim();
  const Eigen::VectorXd response =
      space.mask_regressor.topRows(d).transpose() * v.coords +
      space.mask_regressor.row(d).transpose();
  Mask out(space.resolution, space.resolution);
  for (Eigen::Index i = 0; i < response.size(); ++i) {
    out.data()[i] = response(i) >= 0.5 ? 1 : 0;
  }
  return mirrored ? Mask(mirror_horizontal(out)) : out;
}

std::vector<int> knn_query(const ShapeSpace& space, const LatentVector& v, int k,
                           std::optional<int> exclude) {
  check_latent(space, v);
  const int available = space.size() - (exclude ? 1 : 0);
  if (k < 1 || k > available) {
    throw Error(ErrorCode::InsufficientCorpus,
                "requested " + std::to_string(k) + " neighbours from a shape space of " +
                    std::to_string(available) + " entries");
  }
  const Eigen::VectorXd dist2 =
      (space.latents.rowwise() - v.coords.transpose()).rowwise().squaredNorm();
  std::vector<int> ids;
  ids.reserve(space.size());
  for (int i = 0; i < space.size(); ++i) {
    if (exclude && *exclude == i) continue;
    ids.push_back(i);
  }
  std::partial_sort(ids.begin(), ids.begin() + k, ids.end(), [&](int a, int b) {
    return dist2(a) < dist2(b) || (dist2(a) == dist2(b) && a < b);
  });
  ids.resize(k);
  return ids;
}

Eigen::VectorXd solve_lle_weights(const Eigen::VectorXd& v, const Eigen::MatrixXd& neighbors) {
  const Eigen::Index k = neighbors.rows();
  if (k == 0) throw Error(ErrorCode::EmptyNeighborSet, "no neighbours to interpolate from");
  if (neighbors.cols() != v.size()) {
    throw Error(ErrorCode::DimensionMismatch, "neighbour dimension differs from query dimension");
  }
  if (k == 1) return Eigen::VectorXd::Ones(1);

  // Local Gram matrix C_jk = (v - v_j) . (v - v_k).
  const Eigen::MatrixXd diff = (-neighbors).rowwise() + v.transpose();
  Eigen::MatrixXd gram = diff * diff.transpose();
  const double trace = gram.trace();
  const double eps = trace > 0.0 ? kGramRegularization * trace / static_cast<double>(k) : 1e-8;
  gram.diagonal().array() += eps;
  Eigen::VectorXd w = gram.ldlt().solve(Eigen::VectorXd::Ones(k));
  return w / w.sum();
}

ProjectionResult project(const ShapeSpace& space, const LatentVector& v, int k,
                         std::optional<int> exclude) {
  ProjectionResult result;
  result.neighbor_ids = knn_query(space, v, k, exclude);
  Eigen::MatrixXd neighbors(k, space.dim());
  for (int i = 0; i < k; ++i) neighbors.row(i) = space.latents.row(result.neighbor_ids[i]);
  result.weights = solve_lle_weights(v.coords, neighbors);
  result.projected = {space.shape_class, neighbors.transpose() * result.weights};
  result.residual = (v.coords - result.projected.coords).norm();
  return result;
}

ProjectionResult project_corpus_entry(const ShapeSpace& space, int entry, int k,
                                      bool leave_one_out) {
  return project(space, space.latent(entry), k,
                 leave_one_out ? std::optional<int>(entry) : std::nullopt);
}

RefinedPart refine_part(const ShapeSpace& space, const PartSketch& part, int k) {
  if (!part.present()) {
    const int p = part.crop.size() > 0 ? part.resolution() : space.resolution;
    return {part, Mask::Zero(p, p), std::nullopt};
  }
  const bool mirrored = is_mirrored(part.label);
  ProjectionResult projection = project(space, encode(space, part.crop, mirrored), k);
  RefinedPart out;
  out.sketch = {part.label, part.box, decode_sketch(space, projection.projected, mirrored)};
  out.mask = decode_mask(space, projection.projected, mirrored);
  out.projection = std::move(projection);
  return out;
}

RefinedPart refine_part(const ShapeSpaceIndex& index, const PartSketch& part, int k) {
  if (!part.present()) {
    const int p = static_cast<int>(part.crop.rows());
    return {part, Mask::Zero(p, p), std::nullopt};
  }
  return refine_part(index.for_label(part.label), part, k);
}

AssembledFigure assemble_global(const std::vector<PartLayer>& parts, int canvas_width,
                                int canvas_height) {
  AssembledFigure out{SketchRaster::Zero(canvas_height, canvas_width),
                      ParsingMap::Zero(canvas_height, canvas_width)};
  std::vector<const PartLayer*> ordered;
  for (const PartLayer& layer : parts) {
    if (layer.sketch.crop.size() == 0) continue;
    paste_crop(out.sketch, layer.sketch.crop, layer.sketch.box);
    ordered.push_back(&layer);
  }
  // Paint lowest priority first so higher-priority labels overwrite.
  std::stable_sort(ordered.begin(), ordered.end(), [](const PartLayer* a, const PartLayer* b) {
    return assembly_rank(a->sketch.label) > assembly_rank(b->sketch.label);
  });
  for (const PartLayer* layer : ordered) {
    if (layer->mask.size() == 0) continue;
    const Mask global = paste_mask(layer->mask, layer->sketch.box, canvas_width, canvas_height);
    const std::uint8_t code = label_code(layer->sketch.label);
    out.parsing = (global != 0).select(ParsingMap::Constant(canvas_height, canvas_width, code),
                                       out.parsing);
  }
  return out;
}

}  // namespace sketchrefine
