#pragma once

// PGM (binary P5) read/write and grayscale PNG read. Requires linking libpng.

#include <png.h>

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "image.hpp"

namespace fpvuln {

namespace detail {

inline std::string read_pgm_token(std::istream& in) {
  std::string tok;
  int c = 0;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

} // namespace detail

inline FingerprintImage decode_pgm(std::istream& in, const std::string& label) {
  if (detail::read_pgm_token(in) != "P5") throw FormatError(label + ": not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(detail::read_pgm_token(in));
    h = std::stoi(detail::read_pgm_token(in));
    maxval = std::stoi(detail::read_pgm_token(in));
  } catch (const std::exception&) {
    throw FormatError(label + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval != 255)
    throw FormatError(label + ": unsupported PGM geometry or maxval");
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (in.gcount() != static_cast<std::streamsize>(px.size()))
    throw FormatError(label + ": truncated PGM pixel data");
  return FingerprintImage(w, h, std::move(px));
}

inline FingerprintImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return decode_pgm(in, path.string());
}

inline void write_pgm(const FingerprintImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  auto px = img.pixels();
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!out) throw IoError("short write to " + path.string());
}

// Any PNG is reduced to 8-bit gray (palette expanded, alpha stripped, RGB
// converted with libpng's default weights).
inline FingerprintImage read_png(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "rb"), &std::fclose);
  if (!fp) throw IoError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw FormatError(path.string() + ": not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  std::vector<std::uint8_t> px;
  png_uint_32 w = 0, h = 0;
  if (setjmp(png_jmpbuf(png))) throw FormatError(path.string() + ": corrupt PNG data");

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != w) throw FormatError(path.string() + ": unsupported PNG layout");

  px.resize(static_cast<std::size_t>(w) * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = px.data() + static_cast<std::size_t>(y) * w;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  return FingerprintImage(static_cast<int>(w), static_cast<int>(h), std::move(px));
}

// Dispatches on file content, not extension.
inline FingerprintImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char head[2] = {0, 0};
  in.read(head, 2);
  if (head[0] == 'P' && head[1] == '5') {
    in.seekg(0);
    return decode_pgm(in, path.string());
  }
  in.close();
  return read_png(path);
}

} // namespace fpvuln
