#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include "json.hpp"

#include "sketchrefine/raster.hpp"
#include "sketchrefine/skeleton.hpp"

namespace sketchrefine {

using GrayImage = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Interleaved 8-bit RGB, rows = height.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 * width * height

  std::uint8_t* at(int x, int y) { return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }
};

/// 8-bit single-channel PNG bytes.
std::string encode_png_gray(const GrayImage& image);
std::string encode_png_rgb(const RgbImage& image);

/// Decodes to 8-bit gray. Gray and palette images keep their raw sample
/// values (palette indices are not looked up); colour images are rejected
/// unless `allow_color` converts them to luminance.
GrayImage decode_png_gray(std::string_view bytes, bool allow_color);

/// Ink 1 maps to byte 0; ink 0 to byte 255.
GrayImage sketch_to_gray(const SketchRaster& sketch);
SketchRaster gray_to_sketch(const GrayImage& gray);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

/// {"parts": [{"label": "LeftArm", "joints": {"LShoulder": [x, y], ...}}]}
nlohmann::json keypoints_to_json(const FigureKeypoints& keypoints);
FigureKeypoints keypoints_from_json(const nlohmann::json& doc);

}  // namespace sketchrefine
