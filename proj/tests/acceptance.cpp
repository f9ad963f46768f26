// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "sketchrefine/cli.hpp"
#include "sketchrefine/corpus.hpp"
#include "sketchrefine/image_io.hpp"
#include "sketchrefine/pipeline.hpp"
#include "sketchrefine/pose.hpp"

using namespace sketchrefine;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void report(int number, const std::string& name, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto start = Clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  if (!o.pass) ++failures;
  std::printf("%s  %d. %s:%s (%.2f s)\n", o.pass ? "PASS" : "FAIL", number, name.c_str(),
              o.detail.str().c_str(), seconds_since(start));
  std::fflush(stdout);
}

struct Workspace {
  fs::path root;
  Workspace() {
    root = fs::temp_directory_path() / ("sketchrefine_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
};

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sketchrefine");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

std::string dir_bytes(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += f.filename().string() + "\n" + read_file(f);
  return all;
}

Eigen::VectorXd flat(const SketchRaster& crop, bool mirrored) {
  const SketchRaster src = mirrored ? SketchRaster(mirror_horizontal(crop)) : crop;
  return Eigen::Map<const Eigen::VectorXd>(src.data(), src.size());
}

// One space per class, each at the full sample count so that the dimension
// clamps to the numerical rank.
ShapeSpaceIndex full_rank_index(const std::vector<ShapeSample>& samples) {
  ShapeSpaceIndex index;
  for (ShapeClass c : kAllShapeClasses) {
    std::vector<ShapeSample> mine;
    for (const ShapeSample& s : samples) {
      if (shape_class_of(s.part.label) == c && s.part.present()) mine.push_back(s);
    }
    ShapeSpaceOptions options;
    options.dim = static_cast<int>(mine.size());
    std::vector<std::string> warnings;
    index.classes[static_cast<int>(c)] = build_shape_space(mine, options, &warnings).at(c);
  }
  return index;
}

int entry_of(const ShapeSpace& space, std::uint64_t item, bool mirrored) {
  for (int i = 0; i < space.size(); ++i) {
    if (space.item_ids[i] == item && (space.mirrored[i] != 0) == mirrored) return i;
  }
  return -1;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoFailure;
}

}  // namespace

int main() {
  Workspace ws;
  std::printf("sketchrefine acceptance suite\n");

  report(1, "interpolation weights are optimal", [](Outcome& o) {
    const auto start = Clock::now();
    std::mt19937_64 gen(2024);
    std::uniform_int_distribution<int> dim_draw(1, 4), k_draw(1, 5);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst_gap = -1e300, worst_sum = 0.0;
    for (int instance = 0; instance < 500; ++instance) {
      const int d = dim_draw(gen), k = k_draw(gen);
      Eigen::VectorXd v(d);
      Eigen::MatrixXd nb(k, d);
      for (int i = 0; i < d; ++i) v(i) = normal(gen);
      for (int r = 0; r < k; ++r)
        for (int i = 0; i < d; ++i) nb(r, i) = normal(gen);
      const Eigen::VectorXd w = solve_lle_weights(v, nb);
      worst_sum = std::max(worst_sum, std::abs(w.sum() - 1.0));
      // The objective the solver minimizes: w^T (C + eps I) w.
      const Eigen::MatrixXd diff = nb.rowwise() - v.transpose();
      Eigen::MatrixXd gram = diff * diff.transpose();
      const double trace = gram.trace();
      gram.diagonal().array() += trace > 0.0 ? kGramRegularization * trace / k : 1e-8;
      const double solver = w.dot(gram * w);
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < 10000; ++c) {
        Eigen::VectorXd cand(k);
        for (int i = 0; i < k; ++i) cand(i) = normal(gen);
        cand(k - 1) = 1.0 - (cand.sum() - cand(k - 1));
        best = std::min(best, cand.dot(gram * cand));
      }
      worst_gap = std::max(worst_gap, solver - best);
    }
    const double secs = seconds_since(start);
    o.detail << " worst objective - best candidate = " << worst_gap << ", worst |sum - 1| = " << worst_sum;
    o.require(worst_gap <= 1e-9, "objective within 1e-9 of the best candidate");
    o.require(worst_sum <= 1e-9, "weights sum to 1 within 1e-9");
    o.require(secs < 10.0, "runtime < 10 s");
  });

  // Shared 200-item corpus for the shape-space and end-to-end criteria.
  const auto corpus_start = Clock::now();
  const std::vector<CorpusItem> corpus = sample_corpus(200, 7);
  const std::vector<ShapeSample> samples = shape_samples(corpus);
  const double corpus_secs = seconds_since(corpus_start);
  std::printf("      (200-item corpus generated in %.2f s)\n", corpus_secs);
  ShapeSpaceIndex full;

  report(2, "projection fixed point on a 200-item corpus", [&](Outcome& o) {
    const auto start = Clock::now();
    full = full_rank_index(samples);
    double worst_latent = 0.0, worst_crop = 0.0;
    int checked = 0;
    for (const CorpusItem& item : corpus) {
      for (const StructurePart& part : item.parts) {
        const ShapeSpace& space = full.for_label(part.sketch.label);
        const bool mirrored = is_mirrored(part.sketch.label);
        const int entry = entry_of(space, item.id, mirrored);
        o.require(entry >= 0, "corpus entry present");
        if (entry < 0) continue;
        const Eigen::VectorXd own = space.latents.row(entry).transpose();
        const ProjectionResult proj = project(space, encode(space, part.sketch.crop, mirrored), 10);
        worst_latent = std::max(worst_latent, (proj.projected.coords - own).norm() / own.norm());
        const RefinedPart refined = refine_part(space, part.sketch, 10);
        worst_crop = std::max(worst_crop, (refined.sketch.crop - part.sketch.crop).abs().maxCoeff());
        ++checked;
      }
    }
    const double secs = seconds_since(start) + corpus_secs;
    o.detail << " " << checked << " parts, worst latent rel. error " << worst_latent
             << ", worst crop max-abs " << worst_crop << ", incl. corpus generation";
    o.require(worst_latent <= 1e-3, "latent within 1e-3 relative");
    o.require(worst_crop <= 2e-3, "crop within 2e-3 max-abs");
    o.require(secs < 30.0, "runtime < 30 s");
  });

  ShapeSpaceIndex d64;
  report(3, "PCA bases and reconstruction", [&](Outcome& o) {
    double worst_ortho = 0.0;
    std::array<double, 3> errors{};
    const std::array<int, 3> dims{4, 16, 64};
    for (std::size_t di = 0; di < dims.size(); ++di) {
      ShapeSpaceOptions options;
      options.dim = dims[di];
      const ShapeSpaceIndex index = build_shape_space(samples, options);
      if (dims[di] == 64) d64 = index;
      double err = 0.0;
      for (ShapeClass c : kAllShapeClasses) {
        const ShapeSpace& s = index.at(c);
        const Eigen::MatrixXd gram = s.basis.transpose() * s.basis;
        worst_ortho = std::max(worst_ortho, (gram - Eigen::MatrixXd::Identity(s.dim(), s.dim())).cwiseAbs().maxCoeff());
      }
      for (const ShapeSample& sample : samples) {
        const ShapeSpace& s = index.for_label(sample.part.label);
        const bool mirrored = is_mirrored(sample.part.label);
        const Eigen::VectorXd x = flat(sample.part.crop, mirrored);
        const Eigen::VectorXd v = encode(s, sample.part.crop, mirrored).coords;
        err += (x - s.mean - s.basis * v).squaredNorm();
      }
      errors[di] = err / static_cast<double>(samples.size());
    }
    for (ShapeClass c : kAllShapeClasses) {
      const ShapeSpace& s = full.at(c);
      const Eigen::MatrixXd gram = s.basis.transpose() * s.basis;
      worst_ortho = std::max(worst_ortho, (gram - Eigen::MatrixXd::Identity(s.dim(), s.dim())).cwiseAbs().maxCoeff());
    }
    double worst_full = 0.0;
    for (const ShapeSample& sample : samples) {
      const ShapeSpace& s = full.for_label(sample.part.label);
      const bool mirrored = is_mirrored(sample.part.label);
      const Eigen::VectorXd x = flat(sample.part.crop, mirrored);
      const Eigen::VectorXd v = encode(s, sample.part.crop, mirrored).coords;
      worst_full = std::max(worst_full, (x - s.mean - s.basis * v).cwiseAbs().maxCoeff());
    }
    o.detail << " orthonormality " << worst_ortho << ", mean sq. error d=4/16/64: " << errors[0] << " / "
             << errors[1] << " / " << errors[2] << ", full-rank max-abs " << worst_full;
    o.require(worst_ortho <= 1e-8, "orthonormal within 1e-8");
    o.require(errors[1] <= errors[0] && errors[2] <= errors[1], "non-increasing error");
    o.require(worst_full <= 1e-5, "full-rank reconstruction within 1e-5");
  });

  report(4, "structure recovery benchmark", [&](Outcome& o) {
    const fs::path dir = ws.root / "eval";
    export_corpus(std::vector<CorpusItem>(corpus.begin(), corpus.begin() + 40), dir / "corpus");
    o.require(cli({"build-index", "--corpus", (dir / "corpus").string(), "--d", "16", "--out",
                   (dir / "idx.frix").string()}) == 0,
              "build-index");
    const auto start = Clock::now();
    const int code = cli({"eval", "--index", (dir / "idx.frix").string(), "--corpus", (dir / "corpus").string(),
                          "--seeds", "20", "--magnitude", "10,15,0.10,0.05", "--steps", "3", "--report",
                          (dir / "report.json").string()});
    const double secs = seconds_since(start);
    o.require(code == 0, "eval exit code");
    const auto doc = nlohmann::json::parse(read_file(dir / "report.json"));
    const double ratio = doc["gap_ratio"].get<double>();
    o.detail << " mean gap " << doc["mean_pre_gap"].get<double>() << " -> " << doc["mean_post_gap"].get<double>()
             << " px (ratio " << ratio << "), monotone " << doc["all_monotone"] << ", reference identity "
             << doc["reference_identity"];
    o.require(doc["runs"].size() == 20, "20 runs");
    o.require(ratio <= 0.30, "gap ratio <= 0.30");
    o.require(doc["all_monotone"].get<bool>(), "non-increasing energy traces");
    o.require(doc["reference_identity"].get<bool>(), "reference part untouched");
    o.require(secs < 60.0, "runtime < 60 s");
  });

  report(5, "analytic jacobian vs central differences", [&](Outcome& o) {
    const SkeletonPrior prior = [&] {
      std::vector<FigureKeypoints> figs;
      for (const CorpusItem& item : corpus) figs.push_back(keypoints_of(item.parts));
      return build_skeleton_prior(figs);
    }();
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> lin(-0.1, 0.1), shift(-8.0, 8.0), weight(0.1, 10.0);
    double worst = 0.0;
    for (int config = 0; config < 100; ++config) {
      const auto pert = perturb_parts(corpus[config].parts, {}, 1000 + config);
      const StructureWeights w{100.0 * weight(gen), weight(gen), weight(gen)};
      const StructureProblem problem(keypoints_of(pert.parts), prior, w);
      Eigen::VectorXd q(problem.num_params());
      for (int i = 0; i < q.size(); ++i) q(i) = (i % 3 == 2) ? shift(gen) : lin(gen);
      const Eigen::MatrixXd jac = problem.jacobian(q);
      Eigen::MatrixXd numeric(jac.rows(), jac.cols());
      for (int i = 0; i < q.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(q(i)));
        Eigen::VectorXd a = q, b = q;
        a(i) += h;
        b(i) -= h;
        numeric.col(i) = (problem.residuals(a) - problem.residuals(b)) / (2.0 * h);
      }
      worst = std::max(worst, (jac - numeric).norm() / jac.norm());
    }
    o.detail << " worst relative difference " << worst << " over 100 configurations";
    o.require(worst <= 1e-5, "within 1e-5 relative");
  });

  report(6, "heatmap render and argmax round trip", [](Outcome& o) {
    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> coord(16.0, 240.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Point2d p(coord(gen), coord(gen));
      const Heatmap h = render_heatmaps({PartLabel::Hair, {{JointId::HeadTop, p}}}, 256, 256).front();
      worst = std::max(worst, (heatmap_argmax(h) - p).norm());
    }
    const Point2d grid(40.0, 40.0);
    const Heatmap coarse = render_heatmaps({PartLabel::Hair, {{JointId::HeadTop, grid}}}, 256, 256).front();
    const double peak = coarse.values(10, 10);
    const Heatmap fine = render_heatmaps({PartLabel::Hair, {{JointId::HeadTop, grid}}}, 256, 256, 6.0, 1).front();
    const double at_sigma = std::max({std::abs(fine.values(40, 46) - std::exp(-0.5)),
                                      std::abs(fine.values(34, 40) - std::exp(-0.5))});
    o.detail << " worst recovery " << worst << " px, grid peak " << peak << ", |value at sigma - exp(-0.5)| "
             << at_sigma;
    o.require(worst <= 0.1, "within 0.1 px");
    o.require(peak == 1.0 && coarse.values.maxCoeff() == 1.0, "peak exactly 1.0");
    o.require(at_sigma <= 1e-12, "exp(-0.5) within 1e-12");
  });

  report(7, "persistence and ingestion round trips", [&](Outcome& o) {
    const fs::path dir = ws.root / "persist";
    fs::create_directories(dir);
    save_index(dir / "a.frix", d64);
    const ShapeSpaceIndex back = load_index(dir / "a.frix");
    bool identical = true;
    for (ShapeClass c : kAllShapeClasses) {
      const ShapeSpace& x = d64.at(c);
      const ShapeSpace& y = back.at(c);
      identical = identical && x.mean == y.mean && x.basis == y.basis && x.latents == y.latents &&
                  x.mask_regressor == y.mask_regressor && x.item_ids == y.item_ids && x.mirrored == y.mirrored;
    }
    save_index(dir / "b.frix", back);
    identical = identical && read_file(dir / "a.frix") == read_file(dir / "b.frix");
    o.require(identical, "index bit-identical");

    bool parsing_exact = true;
    double worst_crop = 0.0;
    for (int i = 0; i < 20; ++i) {
      const fs::path item_dir = dir / ("item_" + std::to_string(i));
      export_item(corpus[i], item_dir);
      const CorpusItem in = ingest_item(item_dir);
      parsing_exact = parsing_exact && (in.parsing == corpus[i].parsing).all();
      for (std::size_t p = 0; p < in.parts.size(); ++p) {
        worst_crop = std::max(worst_crop, (in.parts[p].sketch.crop - corpus[i].parts[p].sketch.crop).abs().maxCoeff());
      }
    }
    o.require(parsing_exact, "parsing maps exact");
    o.require(worst_crop <= 1e-6, "crops within 1e-6");

    const fs::path bad = dir / "bad";
    auto fresh = [&] {
      fs::remove_all(bad);
      export_item(corpus[0], bad);
    };
    const std::string good_index = read_file(dir / "a.frix");
    auto index_bytes = [&](std::string bytes) {
      write_file(dir / "bad.frix", bytes);
      return code_of([&] { load_index(dir / "bad.frix"); });
    };
    struct Fixture {
      const char* name;
      ErrorCode expected;
      std::function<ErrorCode()> run;
    };
    const std::vector<Fixture> fixtures = {
        {"label code 9", ErrorCode::BadLabelCode, [&] {
           fresh();
           ParsingMap labels = corpus[0].parsing;
           labels(0, 0) = 9;
           write_file(bad / "labels.png", encode_png_gray(labels));
           return code_of([&] { ingest_item(bad); });
         }},
        {"size mismatch", ErrorCode::SizeMismatch, [&] {
           fresh();
           write_file(bad / "labels.png", encode_png_gray(ParsingMap::Zero(32, 32)));
           return code_of([&] { ingest_item(bad); });
         }},
        {"missing labels", ErrorCode::MissingFile, [&] {
           fresh();
           fs::remove(bad / "labels.png");
           return code_of([&] { ingest_item(bad); });
         }},
        {"corrupt png", ErrorCode::BadImage, [&] {
           fresh();
           write_file(bad / "sketch.png", "\x89PNG garbage");
           return code_of([&] { ingest_item(bad); });
         }},
        {"corrupt keypoints", ErrorCode::BadKeypoints, [&] {
           fresh();
           write_file(bad / "keypoints.json", "{\"parts\": 3}");
           return code_of([&] { ingest_item(bad); });
         }},
        {"bad magic", ErrorCode::BadMagic, [&] {
           std::string b = good_index;
           b[1] = 'Z';
           return index_bytes(b);
         }},
        {"future version", ErrorCode::VersionMismatch, [&] {
           std::string b = good_index;
           b[4] = static_cast<char>(kIndexVersion + 1);
           return index_bytes(b);
         }},
        {"corrupted checksum", ErrorCode::ChecksumFailure, [&] {
           std::string b = good_index;
           b[b.size() - 3] ^= 0x10;
           return index_bytes(b);
         }},
        {"truncated", ErrorCode::TruncatedFile, [&] { return index_bytes(good_index.substr(0, 4000)); }},
    };
    int named = 0;
    for (const Fixture& f : fixtures) {
      const ErrorCode got = f.run();
      if (got == f.expected) {
        ++named;
      } else {
        o.require(false, std::string(f.name) + " gave " + std::string(error_code_name(got)));
      }
    }
    o.detail << " index bit-identical " << (identical ? "yes" : "no") << ", worst crop " << worst_crop << ", "
             << named << "/" << fixtures.size() << " malformed fixtures named";
  });

  report(8, "end-to-end refine", [&](Outcome& o) {
    const fs::path dir = ws.root / "e2e";
    fs::create_directories(dir);
    save_index(dir / "idx.frix", d64);
    std::vector<FigureKeypoints> figs;
    for (const CorpusItem& item : corpus) figs.push_back(keypoints_of(item.parts));
    save_prior(prior_path_for(dir / "idx.frix"), build_skeleton_prior(figs));

    // An unseen figure with displaced parts.
    CorpusItem input = sample_corpus(1, 4242).front();
    input.parts = perturb_parts(input.parts, {}, 8).parts;
    std::vector<PartLayer> layers;
    for (const StructurePart& p : input.parts) layers.push_back({p.sketch, p.mask});
    const AssembledFigure displaced = assemble_global(layers, 256, 256);
    input.sketch = displaced.sketch;
    input.parsing = displaced.parsing;
    export_item(input, dir / "input");

    const auto start = Clock::now();
    const int first = cli({"refine", "--index", (dir / "idx.frix").string(), "--in", (dir / "input").string(),
                           "--out", (dir / "out_a").string(), "--k", "10", "--steps", "3"});
    const double secs = seconds_since(start);
    const int second = cli({"refine", "--index", (dir / "idx.frix").string(), "--in", (dir / "input").string(),
                            "--out", (dir / "out_b").string(), "--k", "10", "--steps", "3"});
    o.require(first == 0 && second == 0, "refine exit codes");
    const bool same = dir_bytes(dir / "out_a") == dir_bytes(dir / "out_b");
    o.require(same, "byte-identical outputs");
    o.require(secs < 5.0, "runtime < 5 s");

    const int ablation = cli({"refine", "--index", (dir / "idx.frix").string(), "--in", (dir / "input").string(),
                              "--out", (dir / "identity").string(), "--no-projection", "--no-transform"});
    const CorpusItem ingested = ingest_item(dir / "input");
    std::vector<PartLayer> inputs;
    for (const StructurePart& p : ingested.parts) inputs.push_back({p.sketch, p.mask});
    const AssembledFigure expected = assemble_global(inputs, 256, 256);
    const bool identity = ablation == 0 && read_file(dir / "identity" / "sketch.png") ==
                                               encode_png_gray(sketch_to_gray(expected.sketch));
    o.require(identity, "ablation flags give the identity pipeline");
    o.detail << " refine took " << secs << " s (index load included), outputs identical "
             << (same ? "yes" : "no") << ", ablation identity " << (identity ? "yes" : "no");
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
