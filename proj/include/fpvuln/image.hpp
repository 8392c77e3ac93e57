#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace fpvuln {

inline constexpr int kMinImageSide = 32;

// 8-bit grayscale raster, row-major. Ridges are dark (0), background is
// light (255). dpi is metadata only and never affects processing.
class FingerprintImage {
public:
  FingerprintImage() = default;

  FingerprintImage(int width, int height, std::uint8_t fill = 255, int dpi = 500)
      : width_(width), height_(height), dpi_(dpi) {
    if (width < 0 || height < 0) throw SizeError("negative image dimensions");
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  FingerprintImage(int width, int height, std::vector<std::uint8_t> pixels, int dpi = 500)
      : width_(width), height_(height), dpi_(dpi), pixels_(std::move(pixels)) {
    if (width < 0 || height < 0 ||
        pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw SizeError("pixel count does not match " + std::to_string(width) + "x" +
                      std::to_string(height));
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int dpi() const noexcept { return dpi_; }
  void set_dpi(int dpi) noexcept { dpi_ = dpi; }
  std::size_t size() const noexcept { return pixels_.size(); }

  std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  bool operator==(const FingerprintImage& o) const {
    return width_ == o.width_ && height_ == o.height_ && pixels_ == o.pixels_;
  }

private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  int dpi_ = 500;
  std::vector<std::uint8_t> pixels_;
};

// Throws SizeError unless both sides are at least kMinImageSide.
inline void require_processable(const FingerprintImage& img) {
  if (img.width() < kMinImageSide || img.height() < kMinImageSide)
    throw SizeError("image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                    " is below the minimum of " + std::to_string(kMinImageSide) + " pixels per side");
}

// Floating-point working plane used by the filters.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Plane() = default;
  Plane(int w, int h, double fill = 0.0)
      : width(w), height(h),
        data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  double& operator()(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double operator()(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

inline Plane to_plane(const FingerprintImage& img) {
  Plane p(img.width(), img.height());
  auto px = img.pixels();
  std::transform(px.begin(), px.end(), p.data.begin(),
                 [](std::uint8_t v) { return static_cast<double>(v); });
  return p;
}

inline std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

inline FingerprintImage to_image(const Plane& p, int dpi = 500) {
  std::vector<std::uint8_t> px(p.data.size());
  std::transform(p.data.begin(), p.data.end(), px.begin(), clamp_u8);
  return FingerprintImage(p.width, p.height, std::move(px), dpi);
}

inline double pixel_mean(const FingerprintImage& img) {
  if (img.size() == 0) return 0.0;
  double s = 0.0;
  for (auto v : img.pixels()) s += v;
  return s / static_cast<double>(img.size());
}

inline double pixel_variance(const FingerprintImage& img) {
  if (img.size() == 0) return 0.0;
  const double m = pixel_mean(img);
  double s = 0.0;
  for (auto v : img.pixels()) s += (v - m) * (v - m);
  return s / static_cast<double>(img.size());
}

} // namespace fpvuln
