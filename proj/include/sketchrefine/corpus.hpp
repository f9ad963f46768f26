#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sketchrefine/raster.hpp"
#include "sketchrefine/shape_space.hpp"
#include "sketchrefine/structure.hpp"

namespace sketchrefine {

/// Parameters of one synthetic figure. Angles in degrees, lengths in pixels.
/// "Left" parts sit on the viewer's left (smaller x).
struct FigureSpec {
  std::uint64_t seed = 0;
  double shoulder_left = 20.0;  // arm abduction from hanging straight down
  double shoulder_right = 20.0;
  double elbow_left = 15.0;  // forearm flexion outward from the upper arm
  double elbow_right = 15.0;
  double hip_left = 5.0;  // thigh abduction
  double hip_right = 5.0;
  double knee_left = 3.0;  // shin bend back toward the midline
  double knee_right = 3.0;
  double upper_arm = 38.0;
  double forearm = 34.0;
  double arm_width = 11.0;
  double shin = 46.0;
  double leg_width = 13.0;
  double shoulder_width = 50.0;
  double torso_height = 68.0;
  double hip_width = 38.0;
  double head_radius = 15.0;
  double hemline = 42.0;  // hip to knee, the extent of the bottom clothes
  double translate_x = 0.0;
  double translate_y = 0.0;
  double jitter = 0.0;  // contour noise amplitude, px
  int canvas = kDefaultCanvasSize;
  int part_resolution = kDefaultPartResolution;
};

/// Plausibility limits checked by generate_figure:
///   shoulder 0..150, elbow 0..150, hip 0..45, knee 0..90 degrees;
///   every length and width > 0; jitter 0..4 px; canvas >= 16; resolution >= 4.
void validate_figure_spec(const FigureSpec& spec);

/// Sampling ranges for sample_corpus; each field of FigureSpec is drawn
/// uniformly within [lo, hi].
struct FigureBounds {
  struct Range {
    double lo;
    double hi;
  };
  Range shoulder{5.0, 40.0};
  Range elbow{0.0, 45.0};
  Range hip{0.0, 12.0};
  Range knee{0.0, 10.0};
  Range upper_arm{34.0, 44.0};
  Range forearm{30.0, 40.0};
  Range arm_width{9.0, 13.0};
  Range shin{40.0, 52.0};
  Range leg_width{11.0, 15.0};
  Range shoulder_width{44.0, 56.0};
  Range torso_height{60.0, 76.0};
  Range hip_width{34.0, 44.0};
  Range head_radius{13.0, 17.0};
  Range hemline{36.0, 48.0};
  Range translate{-8.0, 8.0};
  Range jitter{0.0, 0.8};
  int canvas = kDefaultCanvasSize;
  int part_resolution = kDefaultPartResolution;
};

struct Provenance {
  enum class Kind { Synthetic, Ingested };
  Kind kind = Kind::Synthetic;
  std::optional<FigureSpec> spec;
  std::string source;
  bool keypoints_extracted = false;
};

/// One figure with its per-part crops, masks and keypoints.
struct CorpusItem {
  std::uint64_t id = 0;
  SketchRaster sketch;
  ParsingMap parsing;
  std::vector<StructurePart> parts;  // present parts, in label order
  Provenance provenance;

  const StructurePart* part(PartLabel label) const;
};

CorpusItem generate_figure(const FigureSpec& spec, std::uint64_t id = 0);

std::vector<CorpusItem> sample_corpus(int n, std::uint64_t master_seed,
                                      const FigureBounds& bounds = {});

/// Box of a label region: its tight pixel bounds grown by 8% of the extent on
/// every side.
std::optional<BoundingBox> label_box(const ParsingMap& parsing, PartLabel label);

/// Splits a labelled sketch into part crops and masks. A part's ink is the
/// sketch restricted to its label region dilated by 2 px, so boundary strokes
/// reach both neighbours. Keypoints are left empty.
std::vector<StructurePart> split_parts(const SketchRaster& sketch, const ParsingMap& parsing,
                                       int resolution);

/// Fills missing keypoints by geometric extraction (torso first).
void extract_missing_keypoints(std::vector<StructurePart>& parts);

// ---- files -------------------------------------------------------------

/// Writes sketch.png (0 = ink), labels.png (codes) and keypoints.json.
void export_item(const CorpusItem& item, const std::filesystem::path& dir);

/// Reads a directory written by export_item or by hand. keypoints.json is
/// optional; without it keypoints are extracted and the provenance says so.
CorpusItem ingest_item(const std::filesystem::path& dir,
                       int resolution = kDefaultPartResolution, std::uint64_t id = 0);

/// Writes items into item_NNNNN subdirectories.
void export_corpus(const std::vector<CorpusItem>& items, const std::filesystem::path& dir);

/// Ingests every item_* subdirectory in name order; ids follow that order.
std::vector<CorpusItem> ingest_corpus(const std::filesystem::path& dir,
                                      int resolution = kDefaultPartResolution);

std::vector<ShapeSample> shape_samples(const std::vector<CorpusItem>& items);

// ---- index persistence -------------------------------------------------

inline constexpr std::uint32_t kIndexVersion = 1;

void save_index(const std::filesystem::path& path, const ShapeSpaceIndex& index);
ShapeSpaceIndex load_index(const std::filesystem::path& path);

/// The skeleton prior travels next to the index as <index stem>.prior.json (x.frix -> x.prior.json).
std::filesystem::path prior_path_for(const std::filesystem::path& index_path);
void save_prior(const std::filesystem::path& path, const SkeletonPrior& prior);
SkeletonPrior load_prior(const std::filesystem::path& path);

}  // namespace sketchrefine
