#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string_view>

#include <nlohmann/json.hpp>
#include <png.h>

#include "csv.hpp"
#include "taxelmap/vibmap.hpp"

namespace taxelmap::vibmap {
namespace {

constexpr std::string_view kMagic = "VMAP1";

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

[[noreturn]] void malformed(const std::string& why) { throw Error(ErrorCode::MalformedFile, why); }

}  // namespace

std::vector<std::uint8_t> encode_map(const VibrationMap& map) {
  const nlohmann::json header{{"width_px", map.width_px()},
                              {"height_px", map.height_px()},
                              {"taxel_pitch_mm", map.taxel_pitch_mm},
                              {"normalized", map.normalized},
                              {"raw_min", map.raw_min},
                              {"raw_max", map.raw_max},
                              {"raw_mean", map.raw_mean},
                              {"raw_std", map.raw_std},
                              {"touched_mask", true}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kMagic.size() + 4 + text.size() + map.values.data.size() * 5);
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put_u32_le(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (float v : map.values.data) put_u32_le(out, std::bit_cast<std::uint32_t>(v));
  out.insert(out.end(), map.touched.data.begin(), map.touched.data.end());
  return out;
}

VibrationMap decode_map(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() + 4 ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    malformed("bad magic");
  }
  std::size_t pos = kMagic.size();
  const std::uint32_t header_len = get_u32_le(bytes.data() + pos);
  pos += 4;
  if (bytes.size() - pos < header_len) malformed("truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(pos + header_len));
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("header is not valid JSON: ") + e.what());
  }
  pos += header_len;

  VibrationMap map;
  bool has_mask = true;
  int w = 0, h = 0;
  try {
    w = header.at("width_px").get<int>();
    h = header.at("height_px").get<int>();
    map.taxel_pitch_mm = header.at("taxel_pitch_mm").get<double>();
    map.normalized = header.at("normalized").get<bool>();
    map.raw_min = header.at("raw_min").get<double>();
    map.raw_max = header.at("raw_max").get<double>();
    map.raw_mean = header.at("raw_mean").get<double>();
    map.raw_std = header.at("raw_std").get<double>();
    has_mask = header.value("touched_mask", false);
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("bad header field: ") + e.what());
  }
  if (w < 0 || h < 0) malformed("negative dimensions");

  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const std::size_t expected = n * 4 + (has_mask ? n : 0);
  if (bytes.size() - pos != expected) {
    malformed("data section is " + std::to_string(bytes.size() - pos) + " bytes, expected " + std::to_string(expected));
  }
  map.values = geometry::Grid<float>(w, h, 0.0F);
  map.touched = geometry::Grid<std::uint8_t>(w, h, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const float v = std::bit_cast<float>(get_u32_le(bytes.data() + pos + 4 * i));
    if (!std::isfinite(v)) malformed("non-finite value at pixel " + std::to_string(i));
    map.values.data[i] = v;
  }
  pos += 4 * n;
  if (has_mask) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t m = bytes[pos + i];
      if (m > 1) malformed("mask byte out of range");
      map.touched.data[i] = m;
    }
  }
  return map;
}

void write_map(const VibrationMap& map, const std::filesystem::path& path) {
  const auto bytes = encode_map(map);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

VibrationMap read_map(const std::filesystem::path& path) {
  const std::string text = detail::read_text_file(path);
  return decode_map(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

}  // namespace

void write_png(const geometry::Grid<std::uint8_t>& gray, const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::IoError, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "PNG encoding failed: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(gray.width), static_cast<png_uint_32>(gray.height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < gray.height; ++y) {
    png_write_row(png, gray.data.data() + static_cast<std::size_t>(y) * gray.width);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

geometry::Grid<std::uint8_t> read_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::IoError, "libpng initialization failed");
  }
  geometry::Grid<std::uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::MalformedFile, "PNG decoding failed: " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::MalformedFile, "expected 8-bit grayscale PNG: " + path.string());
  }
  out = geometry::Grid<std::uint8_t>(static_cast<int>(png_get_image_width(png, info)),
                                     static_cast<int>(png_get_image_height(png, info)), 0);
  for (int y = 0; y < out.height; ++y) {
    png_read_row(png, out.data.data() + static_cast<std::size_t>(y) * out.width, nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace taxelmap::vibmap
