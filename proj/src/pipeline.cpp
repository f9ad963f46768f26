#include "sketchrefine/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "sketchrefine/error.hpp"

namespace sketchrefine {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void validate_request(const RefineRequest& request) {
  const RefineOptions& o = request.options;
  if (request.canvas_width < 1 || request.canvas_height < 1) {
    throw Error(ErrorCode::BadRequest, "canvas size must be positive");
  }
  if (o.k < 1) throw Error(ErrorCode::BadRequest, "k must be at least 1");
  if (o.steps < 0) throw Error(ErrorCode::BadRequest, "steps must not be negative");
  for (double w : {o.weights.connectivity, o.weights.proportion, o.weights.regularizer}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorCode::BadRequest, "energy weights must be finite and non-negative");
    }
  }
  bool any = false;
  for (const RequestPart& part : request.parts) {
    if (!part.sketch.box.valid()) {
      throw Error(ErrorCode::BadRequest,
                  std::string("part ") + std::string(label_name(part.sketch.label)) +
                      " has an empty box");
    }
    if (part.sketch.crop.size() > 0) validate_sketch(part.sketch.crop);
    if (part.mask && (part.mask->rows() != part.sketch.crop.rows() ||
                      part.mask->cols() != part.sketch.crop.cols())) {
      throw Error(ErrorCode::SizeMismatch,
                  std::string("mask of ") + std::string(label_name(part.sketch.label)) +
                      " does not match its crop");
    }
    any = any || part.sketch.present();
  }
  if (!any) throw Error(ErrorCode::EmptySketch, "the sketch has no ink in any part");
}

// Mask of the unprojected crop: the shape space's mask regressor applied to
// the crop's own latent code.
Mask mask_without_projection(const ShapeSpaceIndex& index, const PartSketch& part) {
  const ShapeSpace& space = index.for_label(part.label);
  const bool mirrored = is_mirrored(part.label);
  return decode_mask(space, encode(space, part.crop, mirrored), mirrored);
}

nlohmann::json box_to_json(const BoundingBox& box) {
  return {box.x, box.y, box.width, box.height};
}

}  // namespace

RefineRequest request_from_item(const CorpusItem& item, bool carry_keypoints, bool carry_masks) {
  RefineRequest request;
  request.canvas_width = static_cast<int>(item.sketch.cols());
  request.canvas_height = static_cast<int>(item.sketch.rows());
  for (const StructurePart& part : item.parts) {
    RequestPart rp;
    rp.sketch = part.sketch;
    if (carry_masks) rp.mask = part.mask;
    if (carry_keypoints && !part.keypoints.joints.empty()) rp.keypoints = part.keypoints;
    request.parts.push_back(std::move(rp));
  }
  return request;
}

RefineResponse run_pipeline(const RefineRequest& request, const ShapeSpaceIndex& index,
                            const SkeletonPrior& prior) {
  validate_request(request);
  const RefineOptions& options = request.options;
  RefineResponse response;

  std::vector<const RequestPart*> present;
  for (const RequestPart& part : request.parts) {
    if (part.sketch.present()) present.push_back(&part);
  }
  std::stable_sort(present.begin(), present.end(), [](const RequestPart* a, const RequestPart* b) {
    return label_index(a->sketch.label) < label_index(b->sketch.label);
  });

  auto start = Clock::now();
  std::vector<StructurePart> parts;
  for (const RequestPart* rp : present) {
    PartReport report;
    report.label = rp->sketch.label;
    StructurePart part;
    if (options.skip_projection) {
      part.sketch = rp->sketch;
      part.mask = rp->mask ? *rp->mask : mask_without_projection(index, rp->sketch);
    } else {
      RefinedPart refined = refine_part(index, rp->sketch, options.k);
      part.sketch = std::move(refined.sketch);
      part.mask = std::move(refined.mask);
      report.projection = std::move(refined.projection);
    }
    part.keypoints.label = rp->sketch.label;
    if (rp->keypoints) part.keypoints = *rp->keypoints;
    parts.push_back(std::move(part));
    response.parts.push_back(std::move(report));
  }
  response.timings.projection_ms = elapsed_ms(start);

  start = Clock::now();
  {
    // A mask the regressor decoded as empty falls back to the crop's ink for
    // keypoint extraction only.
    std::vector<StructurePart> probes = parts;
    for (StructurePart& probe : probes) {
      if ((probe.mask != 0).any()) continue;
      probe.mask = (probe.sketch.crop > 0.5).cast<std::uint8_t>();
      if ((probe.mask == 0).all()) probe.mask = (probe.sketch.crop > 0.0).cast<std::uint8_t>();
    }
    extract_missing_keypoints(probes);
    for (std::size_t i = 0; i < parts.size(); ++i) parts[i].keypoints = probes[i].keypoints;
  }
  response.timings.keypoints_ms = elapsed_ms(start);

  start = Clock::now();
  if (!options.skip_transformation && options.steps > 0) {
    StructureOptions so;
    so.steps = options.steps;
    so.weights = options.weights;
    so.canvas_width = request.canvas_width;
    so.canvas_height = request.canvas_height;
    StructureSolution solution = refine_structure(parts, prior, so);
    for (PartReport& report : response.parts) {
      const auto it = solution.step_transforms.find(report.label);
      if (it != solution.step_transforms.end()) report.step_transforms = it->second;
    }
    parts = std::move(solution.parts);
    response.energy_trace = std::move(solution.energy_trace);
  }
  response.timings.structure_ms = elapsed_ms(start);

  start = Clock::now();
  std::vector<PartLayer> layers;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    response.parts[i].box = parts[i].sketch.box;
    layers.push_back({parts[i].sketch, parts[i].mask});
  }
  AssembledFigure figure = assemble_global(layers, request.canvas_width, request.canvas_height);
  response.sketch = std::move(figure.sketch);
  response.parsing = std::move(figure.parsing);
  response.timings.assembly_ms = elapsed_ms(start);

  start = Clock::now();
  response.preview = compose_preview(response.sketch, response.parsing);
  response.timings.preview_ms = elapsed_ms(start);
  return response;
}

const Palette& default_palette() {
  static const Palette palette = {
      {label_code(PartLabel::Hair), {0x6B, 0x3A, 0x1E}},
      {label_code(PartLabel::Face), {0xF2, 0xC9, 0xA0}},
      {label_code(PartLabel::TopClothes), {0x2E, 0x6F, 0xD8}},
      {label_code(PartLabel::BottomClothes), {0x2D, 0x3A, 0x4A}},
      {label_code(PartLabel::LeftArm), {0xE8, 0xA8, 0x7C}},
      {label_code(PartLabel::RightArm), {0xD9, 0x90, 0x6A}},
      {label_code(PartLabel::LeftLeg), {0xB5, 0x83, 0x5A}},
      {label_code(PartLabel::RightLeg), {0xA0, 0x71, 0x4B}},
  };
  return palette;
}

RgbImage compose_preview(const SketchRaster& sketch, const ParsingMap& parsing,
                         const Palette& palette) {
  if (sketch.rows() != parsing.rows() || sketch.cols() != parsing.cols()) {
    throw Error(ErrorCode::SizeMismatch, "sketch and parsing map differ in size");
  }
  RgbImage out;
  out.width = static_cast<int>(sketch.cols());
  out.height = static_cast<int>(sketch.rows());
  out.pixels.resize(3 * static_cast<std::size_t>(out.width) * out.height);
  constexpr std::array<std::uint8_t, 3> kWhite{255, 255, 255};
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const std::uint8_t code = parsing(y, x);
      const std::array<std::uint8_t, 3>* colour = &kWhite;
      if (code != 0) {
        const auto it = palette.find(code);
        if (it == palette.end()) {
          throw Error(ErrorCode::PaletteMissingLabel,
                      "palette has no colour for label code " + std::to_string(code));
        }
        colour = &it->second;
      }
      const double alpha = kPreviewInkOpacity * std::clamp(sketch(y, x), 0.0, 1.0);
      std::uint8_t* px = out.at(x, y);
      for (int c = 0; c < 3; ++c) {
        px[c] = static_cast<std::uint8_t>(std::lround((1.0 - alpha) * (*colour)[c]));
      }
    }
  }
  return out;
}

// ---- JSON wire format ---------------------------------------------------

namespace {

template <typename T>
T field_or(const nlohmann::json& obj, const char* key, T fallback) {
  if (!obj.contains(key) || obj[key].is_null()) return fallback;
  try {
    return obj[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::BadRequest, std::string("field '") + key + "' has the wrong type");
  }
}

BoundingBox box_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) {
    throw Error(ErrorCode::BadRequest, where + ": box must be [x, y, width, height]");
  }
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(ErrorCode::BadRequest, where + ": box entries must be numbers");
  }
  BoundingBox box{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!box.valid() || !std::isfinite(box.x) || !std::isfinite(box.y)) {
    throw Error(ErrorCode::BadRequest, where + ": box must have positive size");
  }
  return box;
}

GrayImage png_field(const nlohmann::json& part, const char* key, const std::string& where,
                    bool allow_color) {
  if (!part.contains(key) || !part[key].is_string()) {
    throw Error(ErrorCode::BadRequest, where + ": missing base64 string '" + key + "'");
  }
  return decode_png_gray(base64_decode(part[key].get<std::string>()), allow_color);
}

}  // namespace

RefineRequest parse_refine_request(const nlohmann::json& body, int resolution) {
  if (!body.is_object()) throw Error(ErrorCode::BadRequest, "request body must be a JSON object");
  RefineRequest request;

  if (body.contains("item_dir")) {
    if (!body["item_dir"].is_string()) throw Error(ErrorCode::BadRequest, "item_dir must be a string");
    request = request_from_item(ingest_item(body["item_dir"].get<std::string>(), resolution));
  } else {
    if (body.contains("canvas")) {
      const auto& c = body["canvas"];
      if (!c.is_array() || c.size() != 2 || !c[0].is_number_integer() || !c[1].is_number_integer()) {
        throw Error(ErrorCode::BadRequest, "canvas must be [width, height]");
      }
      request.canvas_width = c[0].get<int>();
      request.canvas_height = c[1].get<int>();
    }
    if (!body.contains("parts") || !body["parts"].is_array()) {
      throw Error(ErrorCode::BadRequest, "request needs a \"parts\" array or an \"item_dir\"");
    }
    for (const auto& entry : body["parts"]) {
      if (!entry.is_object() || !entry.contains("label") || !entry["label"].is_string()) {
        throw Error(ErrorCode::BadRequest, "every part needs a string \"label\"");
      }
      const std::string name = entry["label"].get<std::string>();
      const auto label = label_from_name(name);
      if (!label) throw Error(ErrorCode::BadRequest, "unknown part label '" + name + "'");
      for (const RequestPart& seen : request.parts) {
        if (seen.sketch.label == *label) {
          throw Error(ErrorCode::BadRequest, "part '" + name + "' appears twice");
        }
      }
      RequestPart rp;
      rp.sketch.label = *label;
      rp.sketch.box = box_from_json(entry.value("box", nlohmann::json()), name);
      SketchRaster crop = gray_to_sketch(png_field(entry, "crop_png", name, true));
      if (crop.rows() != resolution || crop.cols() != resolution) {
        crop = resample_square(crop, resolution);
      }
      rp.sketch.crop = std::move(crop);
      if (entry.contains("mask_png") && !entry["mask_png"].is_null()) {
        const GrayImage raw = png_field(entry, "mask_png", name, false);
        Mask mask = (raw != 0).cast<std::uint8_t>();
        if (mask.rows() != resolution || mask.cols() != resolution) {
          mask = (resample_square(mask.cast<double>(), resolution) >= 0.5).cast<std::uint8_t>();
        }
        rp.mask = std::move(mask);
      }
      if (entry.contains("keypoints") && !entry["keypoints"].is_null()) {
        nlohmann::json wrapped = {{"parts", {{{"label", name}, {"joints", entry["keypoints"]}}}}};
        rp.keypoints = keypoints_from_json(wrapped).at(*label);
      }
      request.parts.push_back(std::move(rp));
    }
  }

  const nlohmann::json options = body.value("options", nlohmann::json::object());
  if (!options.is_object()) throw Error(ErrorCode::BadRequest, "options must be an object");
  RefineOptions& o = request.options;
  o.k = field_or(options, "k", o.k);
  o.steps = field_or(options, "steps", o.steps);
  o.weights.connectivity = field_or(options, "lambda_h", o.weights.connectivity);
  o.weights.proportion = field_or(options, "lambda_p", o.weights.proportion);
  o.weights.regularizer = field_or(options, "lambda_l", o.weights.regularizer);
  o.skip_projection = field_or(options, "skip_projection", o.skip_projection);
  o.skip_transformation = field_or(options, "skip_transformation", o.skip_transformation);
  return request;
}

nlohmann::json transform_to_json(const Affine2d& t) {
  const auto& m = t.matrix();
  return {m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2)};
}

nlohmann::json projection_to_json(const ShapeSpace& space, const ProjectionResult& projection) {
  nlohmann::json items = nlohmann::json::array();
  nlohmann::json mirrored = nlohmann::json::array();
  for (int id : projection.neighbor_ids) {
    items.push_back(space.item_ids[static_cast<std::size_t>(id)]);
    mirrored.push_back(space.mirrored[static_cast<std::size_t>(id)] != 0);
  }
  return {{"neighbor_ids", projection.neighbor_ids},
          {"neighbor_items", items},
          {"neighbor_mirrored", mirrored},
          {"weights", std::vector<double>(projection.weights.data(),
                                          projection.weights.data() + projection.weights.size())},
          {"residual", projection.residual}};
}

nlohmann::json response_to_json(const RefineResponse& response, const ShapeSpaceIndex& index,
                                 bool include_timings) {
  nlohmann::json parts = nlohmann::json::array();
  for (const PartReport& report : response.parts) {
    nlohmann::json steps = nlohmann::json::array();
    Affine2d total = Affine2d::identity();
    for (const Affine2d& t : report.step_transforms) {
      steps.push_back(transform_to_json(t));
      total = t.compose(total);
    }
    parts.push_back(
        {{"label", std::string(label_name(report.label))},
         {"box", box_to_json(report.box)},
         {"projection", report.projection
                            ? projection_to_json(index.for_label(report.label), *report.projection)
                            : nlohmann::json()},
         {"step_transforms", steps},
         {"total_transform", transform_to_json(total)}});
  }
  nlohmann::json out = {
      {"canvas", {response.sketch.cols(), response.sketch.rows()}},
      {"sketch_png", base64_encode(encode_png_gray(sketch_to_gray(response.sketch)))},
      {"parsing_png", base64_encode(encode_png_gray(response.parsing))},
      {"preview_png", base64_encode(encode_png_rgb(response.preview))},
      {"parts", parts},
      {"energy_trace", response.energy_trace},
  };
  if (include_timings) {
    const StageTimings& t = response.timings;
    out["timings_ms"] = {{"projection", t.projection_ms},
                         {"keypoints", t.keypoints_ms},
                         {"structure", t.structure_ms},
                         {"assembly", t.assembly_ms},
                         {"preview", t.preview_ms}};
  }
  return out;
}

}  // namespace sketchrefine
