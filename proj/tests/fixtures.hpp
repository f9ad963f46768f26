#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sketchrefine/corpus.hpp"

namespace fixtures {

/// 30 synthetic figures, master seed 77; built once per test run.
const std::vector<sketchrefine::CorpusItem>& small_corpus();
/// Shape spaces (d = 16) and prior fitted on small_corpus().
const sketchrefine::ShapeSpaceIndex& small_index();
const sketchrefine::SkeletonPrior& small_prior();

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
