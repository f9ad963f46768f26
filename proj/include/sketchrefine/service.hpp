#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "json.hpp"

#include "sketchrefine/shape_space.hpp"
#include "sketchrefine/structure.hpp"

namespace sketchrefine {

inline constexpr std::string_view kServiceVersion = "1.0.0";

struct ServiceReply {
  int status = 200;
  nlohmann::json body;
};

/// Request handling of the studio service, independent of the transport.
///
///   GET  /health       {"status": "ok", "version": ...}
///   GET  /index/stats  per-class resolution, dimension and entry count
///   POST /refine       full pipeline, see parse_refine_request
///   POST /project      {"label", "crop_png", "k"} -> projection of one part
///
/// Failures answer {"code", "message"}: 400 for malformed requests, 422 for
/// well-formed requests the pipeline rejects (e.g. "empty_sketch"), 404/405
/// for unknown routes and 500 otherwise.
class StudioService {
 public:
  StudioService(ShapeSpaceIndex index, SkeletonPrior prior, std::string index_name = {});

  /// Loads an index and its prior sidecar; IndexNotFound when either is missing.
  static StudioService load(const std::filesystem::path& index_path);

  ServiceReply handle(std::string_view method, std::string_view path,
                      const std::string& body) const;

  const ShapeSpaceIndex& index() const { return index_; }
  const SkeletonPrior& prior() const { return prior_; }

 private:
  ServiceReply health() const;
  ServiceReply stats() const;
  ServiceReply refine(const std::string& body) const;
  ServiceReply project(const std::string& body) const;

  ShapeSpaceIndex index_;
  SkeletonPrior prior_;
  std::string index_name_;
  int resolution_ = kDefaultPartResolution;
};

/// HTTP binding of a StudioService.
class StudioServer {
 public:
  explicit StudioServer(std::shared_ptr<const StudioService> service);
  ~StudioServer();
  StudioServer(const StudioServer&) = delete;
  StudioServer& operator=(const StudioServer&) = delete;

  /// Binds the port (0 picks a free one) and returns it; PortInUse on failure.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called. bind() must have succeeded.
  void listen();
  /// Blocks until a concurrent listen() accepts connections.
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sketchrefine
