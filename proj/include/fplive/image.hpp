#pragma once

// 8-bit grayscale image I/O. Accepted inputs: portable graymap/pixmap
// (P2/P5/P3/P6) and 8-bit grayscale PNG. Color data is rejected, never
// converted; >8-bit depth is rejected. The writer emits canonical binary
// PGM, so decode/encode round-trips are byte identical.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <png.h>

#include "fplive/common.hpp"

namespace fplive {

struct IntensityGrid {
  int width = 0;
  int height = 0;
  int dpi = 500;  // default when the container carries no resolution metadata
  std::vector<std::uint8_t> pixels;  // row-major, size width*height

  std::uint8_t at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
  std::uint8_t& at(int row, int col) {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }

  bool valid() const {
    return width > 0 && height > 0 &&
           pixels.size() == static_cast<std::size_t>(width) * height;
  }
};

inline IntensityGrid make_grid(int width, int height, std::uint8_t fill = 0, int dpi = 500) {
  if (width <= 0 || height <= 0) throw DataError("grid dimensions must be positive");
  IntensityGrid g;
  g.width = width;
  g.height = height;
  g.dpi = dpi;
  g.pixels.assign(static_cast<std::size_t>(width) * height, fill);
  return g;
}

// Polarity flip for sensors that capture ridges bright instead of dark.
inline IntensityGrid inverted(const IntensityGrid& g) {
  IntensityGrid out = g;
  for (auto& p : out.pixels) p = static_cast<std::uint8_t>(255 - p);
  return out;
}

namespace detail {

// PNM token reader: skips whitespace and '#' comments between header fields.
inline std::string pnm_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  if (tok.empty()) throw DataError("truncated PNM header");
  return tok;
}

inline IntensityGrid load_pnm(std::istream& in, const std::string& path) {
  const std::string magic = pnm_token(in);
  const bool pixmap = (magic == "P3" || magic == "P6");
  const bool graymap = (magic == "P2" || magic == "P5");
  if (!pixmap && !graymap) throw DataError(path + ": not a supported PNM magic '" + magic + "'");
  const long long w = parse_int(pnm_token(in));
  const long long h = parse_int(pnm_token(in));
  const long long maxval = parse_int(pnm_token(in));
  if (w <= 0 || h <= 0) throw DataError(path + ": non-positive PNM dimensions");
  if (maxval > 255) throw DataError(path + ": unsupported bit depth (maxval " + std::to_string(maxval) + ")");
  if (maxval <= 0) throw DataError(path + ": invalid PNM maxval");

  IntensityGrid g = make_grid(static_cast<int>(w), static_cast<int>(h));
  const std::size_t n = g.pixels.size();
  const int channels = pixmap ? 3 : 1;

  std::vector<std::uint8_t> raw(n * channels);
  if (magic == "P5" || magic == "P6") {
    // binary payload begins after the single whitespace byte already consumed
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
      throw DataError(path + ": truncated PNM payload");
  } else {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const long long v = parse_int(pnm_token(in));
      if (v < 0 || v > maxval) throw DataError(path + ": PNM sample out of range");
      raw[i] = static_cast<std::uint8_t>(v);
    }
  }

  if (pixmap) {
    // A pixmap is accepted only when it carries genuinely gray data.
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t r = raw[3 * i], gch = raw[3 * i + 1], b = raw[3 * i + 2];
      if (r != gch || gch != b)
        throw DataError(path + ": non-grayscale input (color pixmap)");
      g.pixels[i] = r;
    }
  } else {
    g.pixels = std::move(raw);
  }
  return g;
}

inline IntensityGrid load_png(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw DataError(path + ": unreadable file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw DataError(path + ": libpng init failed");
  }
  std::string error;
  IntensityGrid g;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw DataError(path + ": corrupt PNG");
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (color != PNG_COLOR_TYPE_GRAY) {
    error = "non-grayscale input (PNG color type " + std::to_string(color) + ")";
  } else if (depth > 8) {
    error = "unsupported bit depth (" + std::to_string(depth) + "-bit PNG)";
  }
  if (!error.empty()) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw DataError(path + ": " + error);
  }
  if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  g = make_grid(static_cast<int>(w), static_cast<int>(h));
  png_uint_32 res_x = 0, res_y = 0;
  int unit = 0;
  if (png_get_pHYs(png, info, &res_x, &res_y, &unit) && unit == PNG_RESOLUTION_METER && res_x > 0) {
    g.dpi = static_cast<int>(res_x * 0.0254 + 0.5);
  }
  std::vector<png_bytep> row_ptrs(h);
  for (png_uint_32 r = 0; r < h; ++r)
    row_ptrs[r] = g.pixels.data() + static_cast<std::size_t>(r) * w;
  png_read_image(png, row_ptrs.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return g;
}

}  // namespace detail

/// Decodes an 8-bit grayscale raster. Pixel values are returned exactly as
/// stored; nothing is rescaled or converted.
inline IntensityGrid load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": unreadable file");
  char magic[8] = {};
  in.read(magic, 8);
  if (in.gcount() < 2) throw DataError(path + ": unreadable file (too short)");
  in.seekg(0);
  if (magic[0] == 'P' && magic[1] >= '1' && magic[1] <= '6') {
    return detail::load_pnm(in, path);
  }
  static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  if (in.gcount() == 8 && std::memcmp(magic, png_sig, 8) == 0) {
    in.close();
    return detail::load_png(path);
  }
  throw DataError(path + ": unrecognized raster format");
}

/// Canonical binary PGM encoding: "P5\n<w> <h>\n255\n" + payload.
inline std::string encode_pgm(const IntensityGrid& g) {
  if (!g.valid()) throw DataError("invalid grid");
  std::string out = "P5\n" + std::to_string(g.width) + " " + std::to_string(g.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(g.pixels.data()), g.pixels.size());
  return out;
}

inline void save_pgm(const IntensityGrid& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  const std::string bytes = encode_pgm(g);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(path + ": write failed");
}

}  // namespace fplive
