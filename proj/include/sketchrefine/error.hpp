#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sketchrefine {

/// Stable, machine-readable failure categories. The snake_case names returned
/// by error_code_name() are part of the service and CLI contract.
enum class ErrorCode {
  SingularTransform,
  DimensionMismatch,
  InsufficientCorpus,
  DegenerateCorpus,
  EmptyNeighborSet,
  ClassNotIndexed,
  EmptyMask,
  FlatHeatmap,
  MissingReferencePart,
  NonFiniteEnergy,
  DegenerateReference,
  InsufficientParts,
  SpecOutOfBounds,
  MissingFile,
  BadLabelCode,
  SizeMismatch,
  BadImage,
  BadKeypoints,
  BadMagic,
  VersionMismatch,
  ChecksumFailure,
  TruncatedFile,
  IoFailure,
  PaletteMissingLabel,
  EmptySketch,
  BadRequest,
  IndexNotFound,
  PortInUse,
};

constexpr std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularTransform: return "singular_transform";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::InsufficientCorpus: return "insufficient_corpus";
    case ErrorCode::DegenerateCorpus: return "degenerate_corpus";
    case ErrorCode::EmptyNeighborSet: return "empty_neighbor_set";
    case ErrorCode::ClassNotIndexed: return "class_not_indexed";
    case ErrorCode::EmptyMask: return "empty_mask";
    case ErrorCode::FlatHeatmap: return "flat_heatmap";
    case ErrorCode::MissingReferencePart: return "missing_reference_part";
    case ErrorCode::NonFiniteEnergy: return "non_finite_energy";
    case ErrorCode::DegenerateReference: return "degenerate_reference";
    case ErrorCode::InsufficientParts: return "insufficient_parts";
    case ErrorCode::SpecOutOfBounds: return "spec_out_of_bounds";
    case ErrorCode::MissingFile: return "missing_file";
    case ErrorCode::BadLabelCode: return "bad_label_code";
    case ErrorCode::SizeMismatch: return "size_mismatch";
    case ErrorCode::BadImage: return "bad_image";
    case ErrorCode::BadKeypoints: return "bad_keypoints";
    case ErrorCode::BadMagic: return "bad_magic";
    case ErrorCode::VersionMismatch: return "version_mismatch";
    case ErrorCode::ChecksumFailure: return "checksum_failure";
    case ErrorCode::TruncatedFile: return "truncated_file";
    case ErrorCode::IoFailure: return "io_failure";
    case ErrorCode::PaletteMissingLabel: return "palette_missing_label";
    case ErrorCode::EmptySketch: return "empty_sketch";
    case ErrorCode::BadRequest: return "bad_request";
    case ErrorCode::IndexNotFound: return "index_not_found";
    case ErrorCode::PortInUse: return "port_in_use";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view code_name() const noexcept { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace sketchrefine
