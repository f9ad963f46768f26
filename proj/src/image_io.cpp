#include "sketchrefine/image_io.hpp"

#include <png.h>
#include <openssl/evp.h>

#include <csetjmp>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sketchrefine/error.hpp"

namespace sketchrefine {
namespace {

struct MemoryReader {
  const unsigned char* data;
  std::size_t size;
  std::size_t offset;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (reader->offset + length > reader->size) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, reader->data + reader->offset, length);
  reader->offset += length;
}

struct RawDecode {
  unsigned char* pixels = nullptr;  // malloc'd, width * height
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int color_type = 0;
  char message[128] = {0};
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* raw = static_cast<RawDecode*>(png_get_error_ptr(png));
  std::snprintf(raw->message, sizeof(raw->message), "%s", msg);
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

// Plain C-style decoder: no C++ objects live across the setjmp boundary.
// Returns 0 on success, 1 on libpng error, 2 when the image is colour.
int decode_single_channel(MemoryReader* reader, RawDecode* raw) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, raw, on_png_error, on_png_warning);
  if (png == nullptr) return 1;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return 1;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::free(raw->pixels);
    raw->pixels = nullptr;
    return 1;
  }
  png_set_read_fn(png, reader, read_from_memory);
  png_read_info(png, info);
  raw->width = png_get_image_width(png, info);
  raw->height = png_get_image_height(png, info);
  raw->color_type = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (raw->color_type != PNG_COLOR_TYPE_GRAY && raw->color_type != PNG_COLOR_TYPE_PALETTE) {
    png_destroy_read_struct(&png, &info, nullptr);
    return 2;
  }
  if (depth < 8) png_set_packing(png);
  if (depth == 16) png_set_strip_16(png);
  if (raw->color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != raw->width) png_error(png, "unsupported PNG layout");
  raw->pixels = static_cast<unsigned char*>(std::malloc(std::size_t(raw->width) * raw->height));
  if (raw->pixels == nullptr) png_error(png, "out of memory");
  for (png_uint_32 y = 0; y < raw->height; ++y) {
    png_read_row(png, raw->pixels + std::size_t(y) * raw->width, nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return 0;
}

std::string write_png(const void* pixels, int width, int height, png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr)) {
    throw Error(ErrorCode::IoFailure, std::string("PNG encode failed: ") + image.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr)) {
    throw Error(ErrorCode::IoFailure, std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

std::string encode_png_gray(const GrayImage& image) {
  return write_png(image.data(), static_cast<int>(image.cols()), static_cast<int>(image.rows()),
                   PNG_FORMAT_GRAY);
}

std::string encode_png_rgb(const RgbImage& image) {
  return write_png(image.pixels.data(), image.width, image.height, PNG_FORMAT_RGB);
}

GrayImage decode_png_gray(std::string_view bytes, bool allow_color) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    throw Error(ErrorCode::BadImage, "data is not a PNG image");
  }
  MemoryReader reader{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), 0};
  RawDecode raw;
  const int status = decode_single_channel(&reader, &raw);
  if (status == 1) throw Error(ErrorCode::BadImage, std::string("PNG decode failed: ") + raw.message);
  if (status == 0) {
    GrayImage out = Eigen::Map<GrayImage>(raw.pixels, raw.height, raw.width);
    std::free(raw.pixels);
    return out;
  }
  if (!allow_color) {
    throw Error(ErrorCode::BadImage, "expected a single-channel PNG, got a colour image");
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::BadImage, std::string("PNG decode failed: ") + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  GrayImage out(image.height, image.width);
  png_color white{255, 255, 255};
  if (!png_image_finish_read(&image, &white, out.data(), 0, nullptr)) {
    throw Error(ErrorCode::BadImage, std::string("PNG decode failed: ") + image.message);
  }
  return out;
}

GrayImage sketch_to_gray(const SketchRaster& sketch) {
  return (255.0 - (sketch.cwiseMax(0.0).cwiseMin(1.0) * 255.0).round()).cast<std::uint8_t>();
}

SketchRaster gray_to_sketch(const GrayImage& gray) {
  return (255.0 - gray.cast<double>()) / 255.0;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::BadRequest, "base64 length is not a multiple of 4");
  if (text.empty()) return {};
  std::string out(3 * text.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw Error(ErrorCode::BadRequest, "invalid base64 payload");
  std::size_t padding = 0;
  if (text.back() == '=') ++padding;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

nlohmann::json keypoints_to_json(const FigureKeypoints& keypoints) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& [label, kp] : keypoints) {
    nlohmann::json joints = nlohmann::json::object();
    for (const auto& [joint, p] : kp.joints) joints[std::string(joint_name(joint))] = {p.x(), p.y()};
    parts.push_back({{"label", std::string(label_name(label))}, {"joints", joints}});
  }
  return {{"parts", parts}};
}

FigureKeypoints keypoints_from_json(const nlohmann::json& doc) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::BadKeypoints, msg); };
  if (!doc.is_object() || !doc.contains("parts") || !doc["parts"].is_array()) {
    fail("keypoints document needs a \"parts\" array");
  }
  FigureKeypoints out;
  for (const auto& entry : doc["parts"]) {
    if (!entry.is_object() || !entry.contains("label") || !entry["label"].is_string()) {
      fail("every keypoint part needs a string \"label\"");
    }
    const std::string name = entry["label"].get<std::string>();
    const auto label = label_from_name(name);
    if (!label) fail("unknown part label '" + name + "'");
    if (!entry.contains("joints") || !entry["joints"].is_object()) {
      fail("part '" + name + "' needs a \"joints\" object");
    }
    PartKeypointSet kp{*label, {}};
    for (const auto& [joint_key, value] : entry["joints"].items()) {
      const auto joint = joint_from_name(joint_key);
      if (!joint) fail("unknown joint '" + joint_key + "' in part '" + name + "'");
      if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number()) {
        fail("joint '" + joint_key + "' of '" + name + "' must be [x, y]");
      }
      const Point2d p(value[0].get<double>(), value[1].get<double>());
      if (!p.allFinite()) fail("joint '" + joint_key + "' of '" + name + "' is not finite");
      kp.joints[*joint] = p;
    }
    out[*label] = std::move(kp);
  }
  return out;
}

}  // namespace sketchrefine
