#include "sketchrefine/service.hpp"

#include "httplib.h"

#include "sketchrefine/corpus.hpp"
#include "sketchrefine/error.hpp"
#include "sketchrefine/image_io.hpp"
#include "sketchrefine/pipeline.hpp"

namespace sketchrefine {
namespace {

ServiceReply failure(int status, std::string_view code, const std::string& message) {
  return {status, {{"code", std::string(code)}, {"message", message}}};
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadRequest:
    case ErrorCode::BadImage:
    case ErrorCode::BadKeypoints:
      return 400;
    case ErrorCode::IoFailure:
      return 500;
    default:
      return 422;
  }
}

nlohmann::json parse_body(const std::string& body) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("request body is not valid JSON: ") + e.what());
  }
}

}  // namespace

StudioService::StudioService(ShapeSpaceIndex index, SkeletonPrior prior, std::string index_name)
    : index_(std::move(index)), prior_(std::move(prior)), index_name_(std::move(index_name)) {
  for (const auto& slot : index_.classes) {
    if (slot) {
      resolution_ = slot->resolution;
      break;
    }
  }
}

StudioService StudioService::load(const std::filesystem::path& index_path) {
  const auto prior_path = prior_path_for(index_path);
  for (const auto& p : {index_path, prior_path}) {
    if (!std::filesystem::is_regular_file(p)) {
      throw Error(ErrorCode::IndexNotFound, "index file " + p.string() + " does not exist");
    }
  }
  return StudioService(load_index(index_path), load_prior(prior_path),
                       index_path.filename().string());
}

ServiceReply StudioService::handle(std::string_view method, std::string_view path,
                                   const std::string& body) const {
  struct Route {
    std::string_view method;
    std::string_view path;
    ServiceReply (StudioService::*get)() const;
    ServiceReply (StudioService::*post)(const std::string&) const;
  };
  static constexpr Route kRoutes[] = {
      {"GET", "/health", &StudioService::health, nullptr},
      {"GET", "/index/stats", &StudioService::stats, nullptr},
      {"POST", "/refine", nullptr, &StudioService::refine},
      {"POST", "/project", nullptr, &StudioService::project},
  };
  const Route* route = nullptr;
  bool path_known = false;
  for (const Route& r : kRoutes) {
    if (r.path != path) continue;
    path_known = true;
    if (r.method == method) route = &r;
  }
  if (!path_known) return failure(404, "not_found", "no route " + std::string(path));
  if (route == nullptr) {
    return failure(405, "method_not_allowed",
                   std::string(method) + " is not allowed on " + std::string(path));
  }
  try {
    return route->get ? (this->*route->get)() : (this->*route->post)(body);
  } catch (const Error& e) {
    return failure(status_for(e.code()), e.code_name(), e.what());
  } catch (const std::exception& e) {
    return failure(500, "internal", e.what());
  }
}

ServiceReply StudioService::health() const {
  return {200, {{"status", "ok"}, {"version", std::string(kServiceVersion)}}};
}

ServiceReply StudioService::stats() const {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& slot : index_.classes) {
    if (!slot) continue;
    classes.push_back({{"class", std::string(shape_class_name(slot->shape_class))},
                       {"resolution", slot->resolution},
                       {"dim", slot->dim()},
                       {"entries", slot->size()}});
  }
  return {200,
          {{"index", index_name_},
           {"format_version", kIndexVersion},
           {"classes", classes},
           {"prior_bones", prior_.bones.size()}}};
}

ServiceReply StudioService::refine(const std::string& body) const {
  const RefineRequest request = parse_refine_request(parse_body(body), resolution_);
  const RefineResponse response = run_pipeline(request, index_, prior_);
  return {200, response_to_json(response, index_)};
}

ServiceReply StudioService::project(const std::string& body) const {
  const nlohmann::json doc = parse_body(body);
  if (!doc.is_object() || !doc.contains("label") || !doc["label"].is_string() ||
      !doc.contains("crop_png") || !doc["crop_png"].is_string()) {
    throw Error(ErrorCode::BadRequest, "project needs string fields \"label\" and \"crop_png\"");
  }
  const std::string name = doc["label"].get<std::string>();
  const auto label = label_from_name(name);
  if (!label) throw Error(ErrorCode::BadRequest, "unknown part label '" + name + "'");
  int k = kDefaultNeighbors;
  if (doc.contains("k")) {
    if (!doc["k"].is_number_integer()) throw Error(ErrorCode::BadRequest, "k must be an integer");
    k = doc["k"].get<int>();
    if (k < 1) throw Error(ErrorCode::BadRequest, "k must be at least 1");
  }
  const ShapeSpace& space = index_.for_label(*label);
  PartSketch part;
  part.label = *label;
  part.crop = gray_to_sketch(decode_png_gray(base64_decode(doc["crop_png"].get<std::string>()), true));
  if (part.crop.rows() != space.resolution || part.crop.cols() != space.resolution) {
    part.crop = resample_square(part.crop, space.resolution);
  }
  if (!part.present()) throw Error(ErrorCode::EmptySketch, "the crop has no ink");
  const RefinedPart refined = refine_part(space, part, k);
  return {200,
          {{"label", name},
           {"projection", projection_to_json(space, *refined.projection)},
           {"crop_png", base64_encode(encode_png_gray(sketch_to_gray(refined.sketch.crop)))},
           {"mask_png", base64_encode(encode_png_gray(refined.mask))}}};
}

// ---- HTTP binding -----------------------------------------------------------

struct StudioServer::Impl {
  std::shared_ptr<const StudioService> service;
  httplib::Server server;
  bool bound = false;
};

StudioServer::StudioServer(std::shared_ptr<const StudioService> service)
    : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  auto dispatch = [svc = impl_->service](const httplib::Request& req, httplib::Response& res) {
    const ServiceReply reply = svc->handle(req.method, req.path, req.body);
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  };
  // httplib's default adds SO_REUSEPORT, which would let a second server
  // share a live port instead of reporting it as taken.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  for (const char* path : {"/health", "/index/stats", "/refine", "/project"}) {
    impl_->server.Get(path, dispatch);
    impl_->server.Post(path, dispatch);
  }
  impl_->server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const ServiceReply reply =
        res.status == 404 ? failure(404, "not_found", "no route " + req.path)
                          : failure(res.status, "http_error", "HTTP error " + std::to_string(res.status));
    res.set_content(reply.body.dump(), "application/json");
  });
}

StudioServer::~StudioServer() { stop(); }

int StudioServer::bind(const std::string& host, int port) {
  int bound_port = -1;
  if (port == 0) {
    bound_port = impl_->server.bind_to_any_port(host);
  } else if (impl_->server.bind_to_port(host, port)) {
    bound_port = port;
  }
  if (bound_port <= 0) {
    throw Error(ErrorCode::PortInUse, "cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->bound = true;
  return bound_port;
}

void StudioServer::listen() {
  if (!impl_->bound) throw Error(ErrorCode::IoFailure, "listen() before a successful bind()");
  impl_->server.listen_after_bind();
}

void StudioServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void StudioServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace sketchrefine
