#include "sketchrefine/cli.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "sketchrefine/corpus.hpp"
#include "sketchrefine/error.hpp"
#include "sketchrefine/image_io.hpp"
#include "sketchrefine/pipeline.hpp"
#include "sketchrefine/service.hpp"

namespace sketchrefine {
namespace fs = std::filesystem;
namespace {

struct GenArgs {
  int n = 0;
  std::uint64_t seed = 0;
  std::string out;
};

struct BuildArgs {
  std::string corpus;
  int d = kDefaultLatentDim;
  int min_neighbors = kDefaultNeighbors;
  std::string out;
};

struct RefineArgs {
  std::string index;
  std::string in;
  std::string out;
  // Unset values keep whatever the request (or its defaults) says.
  std::optional<int> k;
  std::optional<int> steps;
  bool no_projection = false;
  bool no_transform = false;
};

struct EvalArgs {
  std::string index;
  std::string corpus;
  int seeds = 20;
  std::string magnitude = "10,15,0.10,0.05";
  std::string report;
  int steps = 3;
};

struct ServeArgs {
  std::string index;
  std::string host = "127.0.0.1";
  int port = 8080;
};

struct IndexBundle {
  ShapeSpaceIndex index;
  SkeletonPrior prior;
};

IndexBundle load_bundle(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::IndexNotFound, "index file " + path.string() + " does not exist");
  }
  const fs::path prior = prior_path_for(path);
  if (!fs::is_regular_file(prior)) {
    throw Error(ErrorCode::IndexNotFound, "prior file " + prior.string() + " does not exist");
  }
  return {load_index(path), load_prior(prior)};
}

int resolution_of(const ShapeSpaceIndex& index) {
  for (const auto& slot : index.classes) {
    if (slot) return slot->resolution;
  }
  return kDefaultPartResolution;
}

int cmd_gen(const GenArgs& a, std::ostream& out) {
  export_corpus(sample_corpus(a.n, a.seed), a.out);
  out << "wrote " << a.n << " items to " << a.out << "\n";
  return kExitOk;
}

int cmd_build(const BuildArgs& a, std::ostream& out, std::ostream& err) {
  const std::vector<CorpusItem> items = ingest_corpus(a.corpus);
  ShapeSpaceOptions options;
  options.dim = a.d;
  options.min_neighbors = a.min_neighbors;
  std::vector<std::string> warnings;
  const ShapeSpaceIndex index = build_shape_space(shape_samples(items), options, &warnings);
  for (const std::string& w : warnings) err << "warning: " << w << "\n";
  std::vector<FigureKeypoints> figures;
  for (const CorpusItem& item : items) figures.push_back(keypoints_of(item.parts));
  const SkeletonPrior prior = build_skeleton_prior(figures);
  save_index(a.out, index);
  save_prior(prior_path_for(a.out), prior);
  out << "indexed " << items.size() << " items into " << a.out << "\n";
  return kExitOk;
}

int cmd_refine(const RefineArgs& a, std::ostream& out) {
  const IndexBundle bundle = load_bundle(a.index);
  const int resolution = resolution_of(bundle.index);
  RefineRequest request;
  const fs::path in(a.in);
  if (fs::is_directory(in)) {
    request = request_from_item(ingest_item(in, resolution));
  } else if (fs::is_regular_file(in)) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(read_file(in));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::BadRequest, in.string() + ": " + e.what());
    }
    request = parse_refine_request(body, resolution);
  } else {
    throw Error(ErrorCode::MissingFile, "no input at " + in.string());
  }
  if (a.k) request.options.k = *a.k;
  if (a.steps) request.options.steps = *a.steps;
  request.options.skip_projection = request.options.skip_projection || a.no_projection;
  request.options.skip_transformation = request.options.skip_transformation || a.no_transform;

  const RefineResponse response = run_pipeline(request, bundle.index, bundle.prior);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_file(dir / "sketch.png", encode_png_gray(sketch_to_gray(response.sketch)));
  write_file(dir / "parsing.png", encode_png_gray(response.parsing));
  write_file(dir / "preview.png", encode_png_rgb(response.preview));
  nlohmann::json result = response_to_json(response, bundle.index, false);
  for (const char* key : {"sketch_png", "parsing_png", "preview_png"}) result.erase(key);
  write_file(dir / "result.json", result.dump(2) + "\n");

  const StageTimings& t = response.timings;
  out << "refined " << response.parts.size() << " parts into " << dir.string() << " (projection "
      << t.projection_ms << " ms, keypoints " << t.keypoints_ms << " ms, structure "
      << t.structure_ms << " ms, assembly " << t.assembly_ms << " ms, preview " << t.preview_ms
      << " ms)\n";
  return kExitOk;
}

PerturbMagnitude parse_magnitude(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--magnitude", "expected four numbers T,R,S,H, got '" + text + "'");
    }
  }
  if (values.size() != 4) {
    throw CLI::ValidationError("--magnitude", "expected four numbers T,R,S,H, got '" + text + "'");
  }
  for (double v : values) {
    if (!(v >= 0.0)) throw CLI::ValidationError("--magnitude", "magnitudes must be non-negative");
  }
  return {values[0], values[1], values[2], values[3]};
}

int cmd_eval(const EvalArgs& a, const PerturbMagnitude& magnitude, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const IndexBundle bundle = load_bundle(a.index);
  const std::vector<CorpusItem> items = ingest_corpus(a.corpus, resolution_of(bundle.index));
  if (items.empty()) throw Error(ErrorCode::InsufficientCorpus, "corpus " + a.corpus + " is empty");

  StructureOptions options;
  options.steps = a.steps;
  nlohmann::json runs = nlohmann::json::array();
  double pre_sum = 0.0;
  double post_sum = 0.0;
  bool all_monotone = true;
  bool reference_identity = true;
  for (int s = 0; s < a.seeds; ++s) {
    const CorpusItem& item = items[static_cast<std::size_t>(s) % items.size()];
    const PerturbResult perturbed = perturb_parts(item.parts, magnitude, static_cast<std::uint64_t>(s));
    options.canvas_width = static_cast<int>(item.sketch.cols());
    options.canvas_height = static_cast<int>(item.sketch.rows());
    const StructureSolution solution = refine_structure(perturbed.parts, bundle.prior, options);

    const double pre = mean_shared_joint_gap(keypoints_of(perturbed.parts));
    const double post = mean_shared_joint_gap(keypoints_of(solution.parts));
    bool monotone = true;
    for (std::size_t i = 1; i < solution.energy_trace.size(); ++i) {
      monotone = monotone && solution.energy_trace[i] <= solution.energy_trace[i - 1];
    }
    const auto ref = solution.total_transforms.find(kReferencePart);
    const bool identity = ref == solution.total_transforms.end() || ref->second.is_exact_identity();
    all_monotone = all_monotone && monotone;
    reference_identity = reference_identity && identity;
    pre_sum += pre;
    post_sum += post;
    runs.push_back({{"seed", s},
                    {"item", item.id},
                    {"pre_gap", pre},
                    {"post_gap", post},
                    {"energy_trace", solution.energy_trace},
                    {"monotone", monotone},
                    {"reference_identity", identity}});
  }
  const double n = std::max(1, a.seeds);
  const double mean_pre = pre_sum / n;
  const double mean_post = post_sum / n;
  const double ratio = mean_pre > 0.0 ? mean_post / mean_pre : 0.0;
  const double runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  const nlohmann::json report = {
      {"seeds", a.seeds},
      {"steps", a.steps},
      {"magnitude",
       {{"translate_px", magnitude.max_translate},
        {"rotate_deg", magnitude.max_rotate_deg},
        {"scale", magnitude.max_scale},
        {"shear", magnitude.max_shear}}},
      {"mean_pre_gap", mean_pre},
      {"mean_post_gap", mean_post},
      {"gap_ratio", ratio},
      {"all_monotone", all_monotone},
      {"reference_identity", reference_identity},
      {"pass", ratio <= 0.30 && all_monotone && reference_identity},
      {"runtime_ms", runtime_ms},
      {"runs", runs}};
  write_file(a.report, report.dump(2) + "\n");
  out << "mean joint gap " << mean_pre << " -> " << mean_post << " (ratio " << ratio << ")\n";
  return kExitOk;
}

int cmd_serve(const ServeArgs& a, std::ostream& out) {
  auto service = std::make_shared<const StudioService>(StudioService::load(a.index));
  StudioServer server(service);
  const int port = server.bind(a.host, a.port);
  out << "listening on http://" << a.host << ":" << port << std::endl;
  server.listen();
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Part-level sketch refinement"};
  app.name("sketchrefine");
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic corpus");
  gen_cmd->add_option("--n", gen.n, "Number of figures")->required()->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--seed", gen.seed, "Master seed")->required();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  BuildArgs build;
  auto* build_cmd = app.add_subcommand("build-index", "Fit shape spaces and the skeleton prior");
  build_cmd->add_option("--corpus", build.corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  build_cmd->add_option("--d", build.d, "Latent dimension")->check(CLI::PositiveNumber);
  build_cmd->add_option("--min-neighbors", build.min_neighbors, "Minimum samples per class")
      ->check(CLI::PositiveNumber);
  build_cmd->add_option("--out", build.out, "Index file (.frix)")->required();

  RefineArgs refine;
  auto* refine_cmd = app.add_subcommand("refine", "Refine one sketch");
  refine_cmd->add_option("--index", refine.index, "Index file")->required();
  refine_cmd->add_option("--in", refine.in, "Item directory or request JSON")->required();
  refine_cmd->add_option("--out", refine.out, "Output directory")->required();
  refine_cmd->add_option("--k", refine.k, "Neighbours per projection")->check(CLI::PositiveNumber);
  refine_cmd->add_option("--steps", refine.steps, "Cascade steps")->check(CLI::NonNegativeNumber);
  refine_cmd->add_flag("--no-projection", refine.no_projection, "Skip shape-space projection");
  refine_cmd->add_flag("--no-transform", refine.no_transform, "Skip structure refinement");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Perturb-and-recover structure benchmark");
  eval_cmd->add_option("--index", eval.index, "Index file")->required();
  eval_cmd->add_option("--corpus", eval.corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--seeds", eval.seeds, "Number of seeded perturbations")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--magnitude", eval.magnitude, "Bounds T(px),R(deg),S,H");
  eval_cmd->add_option("--steps", eval.steps, "Cascade steps")->check(CLI::NonNegativeNumber);
  eval_cmd->add_option("--report", eval.report, "Report file (.json)")->required();

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--index", serve.index, "Index file")->required();
  serve_cmd->add_option("--host", serve.host, "Bind address");
  serve_cmd->add_option("--port", serve.port, "Port")->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
    if (*gen_cmd) return cmd_gen(gen, out);
    if (*build_cmd) return cmd_build(build, out, err);
    if (*refine_cmd) return cmd_refine(refine, out);
    if (*eval_cmd) return cmd_eval(eval, parse_magnitude(eval.magnitude), out);
    if (*serve_cmd) return cmd_serve(serve, out);
    return kExitInternal;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const Error& e) {
    err << "error [" << e.code_name() << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::IoFailure ? kExitInternal : kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace sketchrefine
