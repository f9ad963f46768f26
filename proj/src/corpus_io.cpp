#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sketchrefine/corpus.hpp"
#include "sketchrefine/image_io.hpp"

namespace sketchrefine {
namespace fs = std::filesystem;

namespace {

constexpr char kSketchFile[] = "sketch.png";
constexpr char kLabelFile[] = "labels.png";
constexpr char kKeypointFile[] = "keypoints.json";

}  // namespace

void export_item(const CorpusItem& item, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / kSketchFile, encode_png_gray(sketch_to_gray(item.sketch)));
  write_file(dir / kLabelFile, encode_png_gray(item.parsing));
  write_file(dir / kKeypointFile, keypoints_to_json(keypoints_of(item.parts)).dump(2) + "\n");
}

CorpusItem ingest_item(const fs::path& dir, int resolution, std::uint64_t id) {
  for (const char* name : {kSketchFile, kLabelFile}) {
    if (!fs::is_regular_file(dir / name)) {
      throw Error(ErrorCode::MissingFile, "missing " + (dir / name).string());
    }
  }
  CorpusItem item;
  item.id = id;
  item.provenance.kind = Provenance::Kind::Ingested;
  item.provenance.source = dir.string();
  item.sketch = gray_to_sketch(decode_png_gray(read_file(dir / kSketchFile), true));
  item.parsing = decode_png_gray(read_file(dir / kLabelFile), false);
  if (item.sketch.rows() != item.parsing.rows() || item.sketch.cols() != item.parsing.cols()) {
    throw Error(ErrorCode::SizeMismatch,
                "sketch.png is " + std::to_string(item.sketch.cols()) + "x" +
                    std::to_string(item.sketch.rows()) + " but labels.png is " +
                    std::to_string(item.parsing.cols()) + "x" + std::to_string(item.parsing.rows()));
  }
  const std::uint8_t max_code = item.parsing.maxCoeff();
  if (max_code > kNumPartLabels) {
    const auto count = (item.parsing == max_code).count();
    throw Error(ErrorCode::BadLabelCode, "labels.png contains code " + std::to_string(max_code) +
                                             " in " + std::to_string(count) + " pixels");
  }

  item.parts = split_parts(item.sketch, item.parsing, resolution);
  if (fs::is_regular_file(dir / kKeypointFile)) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(read_file(dir / kKeypointFile));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::BadKeypoints, std::string("keypoints.json: ") + e.what());
    }
    const FigureKeypoints annotated = keypoints_from_json(doc);
    for (StructurePart& part : item.parts) {
      const auto it = annotated.find(part.sketch.label);
      if (it != annotated.end()) part.keypoints = it->second;
    }
  } else {
    item.provenance.keypoints_extracted = true;
  }
  extract_missing_keypoints(item.parts);
  return item;
}

void export_corpus(const std::vector<CorpusItem>& items, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::ostringstream name;
    name << "item_" << std::setw(5) << std::setfill('0') << i;
    export_item(items[i], dir / name.str());
  }
}

std::vector<CorpusItem> ingest_corpus(const fs::path& dir, int resolution) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::MissingFile, "no corpus directory " + dir.string());
  std::vector<fs::path> entries;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("item_", 0) == 0) {
      entries.push_back(entry.path());
    }
  }
  std::sort(entries.begin(), entries.end());
  std::vector<CorpusItem> items;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    items.push_back(ingest_item(entries[i], resolution, i));
  }
  return items;
}

// ---- index file --------------------------------------------------------
//
// "FRIX" | u32 version | u32 class count | per class:
//   u32 class code, u32 P, u32 d, u32 n,
//   f64 mean[P*P], f64 basis[P*P x d], f64 latents[n x d], f64 regressor[(d+1) x P*P],
//   u64 item_ids[n], u8 mirrored[n]
// | u64 FNV-1a of everything after the version field.
// Integers and doubles little-endian; matrices row-major.

namespace {

static_assert(std::endian::native == std::endian::little, "index I/O assumes a little-endian host");

constexpr char kMagic[4] = {'F', 'R', 'I', 'X'};

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void put(T value) {
    char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    buffer_.append(raw, sizeof(T));
  }
  void put_matrix(const Eigen::MatrixXd& m) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
    buffer_.append(reinterpret_cast<const char*>(rm.data()), sizeof(double) * rm.size());
  }
  std::string& bytes() { return buffer_; }

 private:
  std::string buffer_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + offset_, sizeof(T));
    offset_ += sizeof(T);
    return value;
  }
  Eigen::MatrixXd get_matrix(std::uint64_t rows, std::uint64_t cols) {
    need(rows * cols * sizeof(double));
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
    std::memcpy(rm.data(), bytes_.data() + offset_, sizeof(double) * rows * cols);
    offset_ += sizeof(double) * rows * cols;
    return rm;
  }
  std::size_t remaining() const { return bytes_.size() - offset_; }

 private:
  void need(std::uint64_t n) const {
    if (n > remaining()) throw Error(ErrorCode::TruncatedFile, "index file is truncated");
  }
  std::string_view bytes_;
  std::size_t offset_ = 0;
};

}  // namespace

void save_index(const fs::path& path, const ShapeSpaceIndex& index) {
  Writer payload;
  std::uint32_t count = 0;
  for (const auto& slot : index.classes) count += slot ? 1 : 0;
  payload.put<std::uint32_t>(count);
  for (const auto& slot : index.classes) {
    if (!slot) continue;
    const ShapeSpace& s = *slot;
    payload.put<std::uint32_t>(static_cast<std::uint32_t>(s.shape_class));
    payload.put<std::uint32_t>(static_cast<std::uint32_t>(s.resolution));
    payload.put<std::uint32_t>(static_cast<std::uint32_t>(s.dim()));
    payload.put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    payload.put_matrix(s.mean.transpose());
    payload.put_matrix(s.basis);
    payload.put_matrix(s.latents);
    payload.put_matrix(s.mask_regressor);
    for (std::uint64_t id : s.item_ids) payload.put<std::uint64_t>(id);
    for (std::uint8_t m : s.mirrored) payload.put<std::uint8_t>(m);
  }
  Writer file;
  file.bytes().append(kMagic, 4);
  file.put<std::uint32_t>(kIndexVersion);
  file.bytes() += payload.bytes();
  file.put<std::uint64_t>(fnv1a(payload.bytes()));
  write_file(path, file.bytes());
}

ShapeSpaceIndex load_index(const fs::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, path.string() + " is not a FRIX index");
  }
  if (bytes.size() < 8 + 8) throw Error(ErrorCode::TruncatedFile, "index file is truncated");
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  if (version != kIndexVersion) {
    throw Error(ErrorCode::VersionMismatch, "index version " + std::to_string(version) +
                                                " is not supported (this build reads version " +
                                                std::to_string(kIndexVersion) + ")");
  }
  const std::string_view payload(bytes.data() + 8, bytes.size() - 16);
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);

  // Structure is parsed before the checksum so truncation is reported as such.
  Reader in(payload);
  ShapeSpaceIndex index;
  const auto count = in.get<std::uint32_t>();
  for (std::uint32_t c = 0; c < count; ++c) {
    ShapeSpace s;
    const auto code = in.get<std::uint32_t>();
    if (code >= static_cast<std::uint32_t>(kNumShapeClasses)) {
      throw Error(ErrorCode::ChecksumFailure, "index names unknown shape class " + std::to_string(code));
    }
    s.shape_class = static_cast<ShapeClass>(code);
    s.resolution = static_cast<int>(in.get<std::uint32_t>());
    const std::uint64_t d = in.get<std::uint32_t>();
    const std::uint64_t n = in.get<std::uint32_t>();
    const std::uint64_t pixels = static_cast<std::uint64_t>(s.resolution) * s.resolution;
    if (pixels * (2 + 2 * d) + n * d > in.remaining()) {
      throw Error(ErrorCode::TruncatedFile, "index file is truncated");
    }
    s.mean = in.get_matrix(1, pixels).transpose();
    s.basis = in.get_matrix(pixels, d);
    s.latents = in.get_matrix(n, d);
    s.mask_regressor = in.get_matrix(d + 1, pixels);
    s.item_ids.resize(n);
    for (auto& id : s.item_ids) id = in.get<std::uint64_t>();
    s.mirrored.resize(n);
    for (auto& m : s.mirrored) m = in.get<std::uint8_t>();
    index.classes[code] = std::move(s);
  }
  if (in.remaining() != 0 || fnv1a(payload) != stored) {
    throw Error(ErrorCode::ChecksumFailure, path.string() + " failed its checksum");
  }
  return index;
}

fs::path prior_path_for(const fs::path& index_path) {
  fs::path p = index_path;
  p.replace_extension(".prior.json");
  return p;
}

void save_prior(const fs::path& path, const SkeletonPrior& prior) {
  nlohmann::json bones = nlohmann::json::array();
  for (const auto& [bone, stats] : prior.bones) {
    bones.push_back({{"part", std::string(label_name(bone.part))},
                     {"from", std::string(joint_name(bone.from))},
                     {"to", std::string(joint_name(bone.to))},
                     {"mean_ratio", stats.mean_ratio},
                     {"stddev", stats.stddev}});
  }
  write_file(path, nlohmann::json{{"bones", bones}}.dump(2) + "\n");
}

SkeletonPrior load_prior(const fs::path& path) {
  SkeletonPrior prior;
  try {
    const auto doc = nlohmann::json::parse(read_file(path));
    for (const auto& b : doc.at("bones")) {
      const auto part = label_from_name(b.at("part").get<std::string>());
      const auto from = joint_from_name(b.at("from").get<std::string>());
      const auto to = joint_from_name(b.at("to").get<std::string>());
      if (!part || !from || !to) throw Error(ErrorCode::BadKeypoints, "unknown bone in prior file");
      prior.bones[{*part, *from, *to}] = {b.at("mean_ratio").get<double>(),
                                          b.at("stddev").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadKeypoints, path.string() + ": " + e.what());
  }
  return prior;
}

}  // namespace sketchrefine
