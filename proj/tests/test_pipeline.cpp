#include "doctest.h"

#include "fixtures.hpp"
#include "sketchrefine/pipeline.hpp"

using namespace sketchrefine;

namespace {

SkeletonPrior item_prior(const CorpusItem& item) {
  const FigureKeypoints kps = keypoints_of(item.parts);
  return build_skeleton_prior({kps, kps});
}

ErrorCode code_of(const RefineRequest& request) {
  try {
    run_pipeline(request, fixtures::small_index(), fixtures::small_prior());
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::IoFailure;
}

nlohmann::json inline_request(const CorpusItem& item) {
  nlohmann::json parts = nlohmann::json::array();
  for (const StructurePart& p : item.parts) {
    nlohmann::json joints = nlohmann::json::object();
    for (const auto& [j, pt] : p.keypoints.joints) joints[std::string(joint_name(j))] = {pt.x(), pt.y()};
    const BoundingBox& b = p.sketch.box;
    parts.push_back({{"label", std::string(label_name(p.sketch.label))},
                     {"box", {b.x, b.y, b.width, b.height}},
                     {"crop_png", base64_encode(encode_png_gray(sketch_to_gray(p.sketch.crop)))},
                     {"keypoints", joints}});
  }
  return {{"canvas", {item.sketch.cols(), item.sketch.rows()}}, {"parts", parts}};
}

}  // namespace

TEST_CASE("preview compositing of a hand-checked 4x4 image") {
  SketchRaster sketch = SketchRaster::Zero(4, 4);
  ParsingMap parsing = ParsingMap::Zero(4, 4);
  parsing.row(0).setConstant(label_code(PartLabel::Face));
  parsing.row(1).setConstant(label_code(PartLabel::Hair));
  sketch(0, 0) = 1.0;
  sketch(0, 1) = 0.5;
  sketch(3, 3) = 1.0;
  const RgbImage img = compose_preview(sketch, parsing);
  REQUIRE(img.width == 4);
  REQUIRE(img.height == 4);
  auto px = [&](int x, int y) {
    const std::uint8_t* p = img.at(x, y);
    return std::array<int, 3>{p[0], p[1], p[2]};
  };
  // Face #F2C9A0 under full ink keeps 15%, under half ink 57.5%.
  CHECK(px(0, 0) == std::array<int, 3>{36, 30, 24});
  CHECK(px(1, 0) == std::array<int, 3>{139, 116, 92});
  CHECK(px(2, 0) == std::array<int, 3>{242, 201, 160});
  CHECK(px(0, 1) == std::array<int, 3>{107, 58, 30});
  CHECK(px(0, 2) == std::array<int, 3>{255, 255, 255});
  CHECK(px(3, 3) == std::array<int, 3>{38, 38, 38});
}

TEST_CASE("preview edge cases") {
  SUBCASE("blank input is white") {
    const RgbImage img = compose_preview(SketchRaster::Zero(5, 3), ParsingMap::Zero(5, 3));
    for (auto v : img.pixels) CHECK(v == 255);
  }
  SUBCASE("label without ink is flat colour") {
    const RgbImage img = compose_preview(SketchRaster::Zero(2, 2),
                                         ParsingMap::Constant(2, 2, label_code(PartLabel::TopClothes)));
    for (int i = 0; i < 4; ++i) {
      CHECK(img.pixels[3 * i] == 0x2E);
      CHECK(img.pixels[3 * i + 1] == 0x6F);
      CHECK(img.pixels[3 * i + 2] == 0xD8);
    }
  }
  SUBCASE("label missing from the palette") {
    Palette partial = default_palette();
    partial.erase(label_code(PartLabel::RightLeg));
    ParsingMap parsing = ParsingMap::Zero(2, 2);
    parsing(1, 1) = label_code(PartLabel::RightLeg);
    try {
      compose_preview(SketchRaster::Zero(2, 2), parsing, partial);
      FAIL("expected PaletteMissingLabel");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::PaletteMissingLabel);
    }
  }
  SUBCASE("size mismatch") {
    CHECK_THROWS_AS(compose_preview(SketchRaster::Zero(2, 2), ParsingMap::Zero(3, 2)), Error);
  }
}

TEST_CASE("bypassing both stages reproduces the assembled inputs") {
  const CorpusItem& item = fixtures::small_corpus()[4];
  RefineRequest request = request_from_item(item, true, true);
  request.options.skip_projection = true;
  request.options.skip_transformation = true;
  const RefineResponse response = run_pipeline(request, fixtures::small_index(), fixtures::small_prior());
  std::vector<PartLayer> layers;
  for (const StructurePart& p : item.parts) layers.push_back({p.sketch, p.mask});
  const AssembledFigure expected = assemble_global(layers, 256, 256);
  CHECK((response.sketch == expected.sketch).all());
  CHECK((response.parsing == expected.parsing).all());
  CHECK(response.energy_trace.empty());
  for (const PartReport& r : response.parts) {
    CHECK(!r.projection.has_value());
    CHECK(r.step_transforms.empty());
  }
  CHECK(response.preview.width == 256);
}

TEST_CASE("zero steps still projects") {
  RefineRequest request = request_from_item(fixtures::small_corpus()[1]);
  request.options.steps = 0;
  const RefineResponse response = run_pipeline(request, fixtures::small_index(), fixtures::small_prior());
  REQUIRE(response.parts.size() == kNumPartLabels);
  for (const PartReport& r : response.parts) {
    CHECK(r.projection.has_value());
    CHECK(r.step_transforms.empty());
    CHECK(r.projection->weights.sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("an unperturbed item needs no transform") {
  const CorpusItem& item = fixtures::small_corpus()[6];
  const RefineResponse response =
      run_pipeline(request_from_item(item), fixtures::small_index(), item_prior(item));
  for (const PartReport& r : response.parts) {
    REQUIRE(r.step_transforms.size() == 3);
    for (const Affine2d& t : r.step_transforms) CHECK(t.identity_distance() <= 1e-3);
  }
}

TEST_CASE("full pipeline on a perturbed item") {
  const CorpusItem& item = fixtures::small_corpus()[8];
  const auto pert = perturb_parts(item.parts, {}, 21);
  CorpusItem moved = item;
  moved.parts = pert.parts;
  const RefineResponse a = run_pipeline(request_from_item(moved), fixtures::small_index(), fixtures::small_prior());
  const RefineResponse b = run_pipeline(request_from_item(moved), fixtures::small_index(), fixtures::small_prior());
  CHECK(response_to_json(a, fixtures::small_index(), false).dump() ==
        response_to_json(b, fixtures::small_index(), false).dump());
  CHECK(a.sketch.rows() == 256);
  CHECK(a.parsing.cols() == 256);
  CHECK(a.preview.height == 256);
  CHECK(a.sketch.minCoeff() >= 0.0);
  CHECK(a.sketch.maxCoeff() <= 1.0);
  REQUIRE(a.energy_trace.size() == 4);
  for (std::size_t i = 1; i < a.energy_trace.size(); ++i) CHECK(a.energy_trace[i] <= a.energy_trace[i - 1]);
  for (const PartReport& r : a.parts) {
    if (r.label != kReferencePart) continue;
    for (const Affine2d& t : r.step_transforms) CHECK(t.is_exact_identity());
  }
  const auto json = response_to_json(a, fixtures::small_index());
  CHECK(json.contains("timings_ms"));
  CHECK(json["parts"].size() == kNumPartLabels);
  CHECK(json["parts"][0]["step_transforms"].size() == 3);
  CHECK(json["parts"][0]["projection"]["neighbor_ids"].size() == kDefaultNeighbors);
}

TEST_CASE("keypoints are extracted when the request has none") {
  RefineRequest request = request_from_item(fixtures::small_corpus()[9], false);
  const RefineResponse response = run_pipeline(request, fixtures::small_index(), fixtures::small_prior());
  CHECK(response.energy_trace.size() == 4);
}

TEST_CASE("request validation") {
  const CorpusItem& item = fixtures::small_corpus()[0];
  SUBCASE("no ink anywhere") {
    RefineRequest request = request_from_item(item);
    for (auto& p : request.parts) p.sketch.crop.setZero();
    CHECK(code_of(request) == ErrorCode::EmptySketch);
    request.parts.clear();
    CHECK(code_of(request) == ErrorCode::EmptySketch);
  }
  SUBCASE("options") {
    RefineRequest request = request_from_item(item);
    request.options.k = 0;
    CHECK(code_of(request) == ErrorCode::BadRequest);
    request.options.k = 3;
    request.options.steps = -1;
    CHECK(code_of(request) == ErrorCode::BadRequest);
    request.options.steps = 1;
    request.options.weights.proportion = -1;
    CHECK(code_of(request) == ErrorCode::BadRequest);
  }
  SUBCASE("mask of the wrong size") {
    RefineRequest request = request_from_item(item);
    request.parts[0].mask = Mask::Zero(3, 3);
    CHECK(code_of(request) == ErrorCode::SizeMismatch);
  }
  SUBCASE("missing reference part") {
    RefineRequest request = request_from_item(item);
    std::erase_if(request.parts, [](const RequestPart& p) { return p.sketch.label == kReferencePart; });
    CHECK(code_of(request) == ErrorCode::MissingReferencePart);
  }
}

TEST_CASE("JSON request parsing") {
  const CorpusItem& item = fixtures::small_corpus()[3];
  nlohmann::json body = inline_request(item);
  body["options"] = {{"k", 4}, {"steps", 2}, {"lambda_h", 50.0}, {"skip_projection", true}};
  const RefineRequest request = parse_refine_request(body, 64);
  CHECK(request.canvas_width == 256);
  CHECK(request.options.k == 4);
  CHECK(request.options.steps == 2);
  CHECK(request.options.weights.connectivity == 50.0);
  CHECK(request.options.skip_projection);
  CHECK(!request.options.skip_transformation);
  REQUIRE(request.parts.size() == item.parts.size());
  for (std::size_t i = 0; i < item.parts.size(); ++i) {
    CHECK(request.parts[i].sketch.box == item.parts[i].sketch.box);
    CHECK((request.parts[i].sketch.crop - item.parts[i].sketch.crop).abs().maxCoeff() <= 0.5 / 255 + 1e-12);
    REQUIRE(request.parts[i].keypoints.has_value());
    CHECK(request.parts[i].keypoints->joints == item.parts[i].keypoints.joints);
  }

  auto rejects = [](nlohmann::json b) {
    try {
      parse_refine_request(b, 64);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoFailure;
  };
  CHECK(rejects(nlohmann::json::array()) == ErrorCode::BadRequest);
  CHECK(rejects({{"canvas", {256, 256}}}) == ErrorCode::BadRequest);
  nlohmann::json dup = inline_request(item);
  dup["parts"].push_back(dup["parts"][0]);
  CHECK(rejects(dup) == ErrorCode::BadRequest);
  nlohmann::json unknown = inline_request(item);
  unknown["parts"][0]["label"] = "Tail";
  CHECK(rejects(unknown) == ErrorCode::BadRequest);
  nlohmann::json garbled = inline_request(item);
  garbled["parts"][0]["crop_png"] = base64_encode("not a png");
  CHECK(rejects(garbled) == ErrorCode::BadImage);
}

TEST_CASE("item directory requests") {
  fixtures::TempDir tmp("pipeline_item");
  export_item(fixtures::small_corpus()[2], tmp.path());
  const RefineRequest request =
      parse_refine_request({{"item_dir", tmp.path().string()}, {"options", {{"steps", 1}}}}, 64);
  CHECK(request.parts.size() == kNumPartLabels);
  CHECK(request.options.steps == 1);
}

TEST_CASE("transform JSON layout") {
  const auto j = transform_to_json(Affine2d(1, 2, 3, 4, 5, 6));
  CHECK(j.dump() == "[1.0,2.0,3.0,4.0,5.0,6.0]");
}
