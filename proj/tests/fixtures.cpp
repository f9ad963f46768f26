#include "fixtures.hpp"

#include <atomic>
#include <unistd.h>

namespace fixtures {
using namespace sketchrefine;

const std::vector<CorpusItem>& small_corpus() {
  static const std::vector<CorpusItem> items = sample_corpus(30, 77);
  return items;
}

const ShapeSpaceIndex& small_index() {
  static const ShapeSpaceIndex index = [] {
    ShapeSpaceOptions options;
    options.dim = 16;
    return build_shape_space(shape_samples(small_corpus()), options);
  }();
  return index;
}

const SkeletonPrior& small_prior() {
  static const SkeletonPrior prior = [] {
    std::vector<FigureKeypoints> figures;
    for (const CorpusItem& item : small_corpus()) figures.push_back(keypoints_of(item.parts));
    return build_skeleton_prior(figures);
  }();
  return prior;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("sketchrefine_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace fixtures
