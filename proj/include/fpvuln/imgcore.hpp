#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "error.hpp"
#include "image.hpp"

namespace fpvuln {

inline constexpr double kDefaultTargetMean = 128.0;
inline constexpr double kDefaultTargetVar = 2000.0;
inline constexpr int kDefaultBlockSize = 16;

// Per-block grid shared by OrientationField and ForegroundMask.
struct BlockGrid {
  int block_size = kDefaultBlockSize;
  int cols = 0;
  int rows = 0;

  static BlockGrid for_image(int width, int height, int block_size) {
    return {block_size, (width + block_size - 1) / block_size,
            (height + block_size - 1) / block_size};
  }
  std::size_t count() const { return static_cast<std::size_t>(cols) * rows; }
  std::size_t index(int bx, int by) const { return static_cast<std::size_t>(by) * cols + bx; }
};

struct OrientationField {
  BlockGrid grid;
  std::vector<double> angles;    // ridge direction, [0, pi)
  std::vector<double> coherence; // [0, 1]

  double angle(int bx, int by) const { return angles[grid.index(bx, by)]; }
  double coherence_at(int bx, int by) const { return coherence[grid.index(bx, by)]; }
};

struct ForegroundMask {
  BlockGrid grid;
  std::vector<bool> mask;

  bool at(int bx, int by) const { return mask[grid.index(bx, by)]; }
  // Block lookup for a pixel coordinate.
  bool at_pixel(int x, int y) const { return at(x / grid.block_size, y / grid.block_size); }

  double fraction() const {
    if (mask.empty()) return 0.0;
    std::size_t n = 0;
    for (bool b : mask) n += b ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(mask.size());
  }
  bool operator==(const ForegroundMask& o) const {
    return grid.block_size == o.grid.block_size && grid.cols == o.grid.cols &&
           grid.rows == o.grid.rows && mask == o.mask;
  }
};

// Map any angle onto [0, pi).
inline double wrap_pi(double a) {
  a = std::fmod(a, std::numbers::pi);
  if (a < 0) a += std::numbers::pi;
  if (a >= std::numbers::pi) a -= std::numbers::pi;
  return a;
}

// Map any angle onto [0, 2pi).
inline double wrap_two_pi(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a < 0) a += two_pi;
  if (a >= two_pi) a -= two_pi;
  return a;
}

// Smallest difference between two unsigned orientations, in [0, pi/2].
inline double orientation_distance(double a, double b) {
  const double d = wrap_pi(a - b);
  return std::min(d, std::numbers::pi - d);
}

// Smallest difference between two directions, in [0, pi].
inline double direction_distance(double a, double b) {
  const double d = wrap_two_pi(a - b);
  return std::min(d, 2.0 * std::numbers::pi - d);
}

// Affine rescale to the target mean and variance. A constant image has no
// variance to rescale and maps to the constant target mean.
inline FingerprintImage normalize(const FingerprintImage& img,
                                  double target_mean = kDefaultTargetMean,
                                  double target_var = kDefaultTargetVar) {
  require_processable(img);
  if (!(target_var > 0.0)) throw ParameterError("target variance must be positive");
  const double mean = pixel_mean(img);
  const double var = pixel_variance(img);
  std::vector<std::uint8_t> out(img.size());
  if (var <= 0.0) {
    std::fill(out.begin(), out.end(), clamp_u8(target_mean));
  } else {
    const double gain = std::sqrt(target_var / var);
    auto px = img.pixels();
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = clamp_u8(target_mean + (px[i] - mean) * gain);
  }
  return FingerprintImage(img.width(), img.height(), std::move(out), img.dpi());
}

// 3x3 Sobel gradients with replicated borders.
inline void sobel(const Plane& in, Plane& gx, Plane& gy) {
  const int w = in.width, h = in.height;
  gx = Plane(w, h);
  gy = Plane(w, h);
  auto px = [&](int x, int y) {
    return in(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double a = px(x - 1, y - 1), b = px(x, y - 1), c = px(x + 1, y - 1);
      const double d = px(x - 1, y), f = px(x + 1, y);
      const double g = px(x - 1, y + 1), hh = px(x, y + 1), i = px(x + 1, y + 1);
      gx(x, y) = (c + 2 * f + i) - (a + 2 * d + g);
      gy(x, y) = (g + 2 * hh + i) - (a + 2 * b + c);
    }
  }
}

// Averaged squared-gradient orientation estimate. Border blocks only use
// in-image pixels.
inline OrientationField estimate_orientation_field(const FingerprintImage& img,
                                                   int block_size = kDefaultBlockSize) {
  require_processable(img);
  if (block_size < 8 || block_size > 32)
    throw ParameterError("orientation block size must be in [8, 32]");
  Plane gx, gy;
  sobel(to_plane(img), gx, gy);

  OrientationField field;
  field.grid = BlockGrid::for_image(img.width(), img.height(), block_size);
  field.angles.assign(field.grid.count(), 0.0);
  field.coherence.assign(field.grid.count(), 0.0);
  for (int by = 0; by < field.grid.rows; ++by) {
    for (int bx = 0; bx < field.grid.cols; ++bx) {
      double sxx = 0.0, sxy = 0.0, energy = 0.0;
      const int x1 = std::min(img.width(), (bx + 1) * block_size);
      const int y1 = std::min(img.height(), (by + 1) * block_size);
      for (int y = by * block_size; y < y1; ++y) {
        for (int x = bx * block_size; x < x1; ++x) {
          const double u = gx(x, y), v = gy(x, y);
          sxx += u * u - v * v;
          sxy += 2.0 * u * v;
          energy += u * u + v * v;
        }
      }
      const auto i = field.grid.index(bx, by);
      // Gradient direction is half the doubled angle; ridges run across it.
      field.angles[i] = wrap_pi(0.5 * std::atan2(sxy, sxx) + std::numbers::pi / 2.0);
      field.coherence[i] =
          energy > 0.0 ? std::clamp(std::hypot(sxx, sxy) / energy, 0.0, 1.0) : 0.0;
    }
  }
  return field;
}

inline constexpr double kDefaultSegmentationVariance = 300.0;

// Block is foreground when its intensity variance exceeds the threshold.
// Intended for normalized input (mean 128, variance 2000).
inline ForegroundMask segment_foreground(const FingerprintImage& img,
                                         int block_size = kDefaultBlockSize,
                                         double variance_threshold = kDefaultSegmentationVariance) {
  require_processable(img);
  if (block_size < 1) throw ParameterError("block size must be positive");
  ForegroundMask fg;
  fg.grid = BlockGrid::for_image(img.width(), img.height(), block_size);
  fg.mask.assign(fg.grid.count(), false);
  for (int by = 0; by < fg.grid.rows; ++by) {
    for (int bx = 0; bx < fg.grid.cols; ++bx) {
      const int x1 = std::min(img.width(), (bx + 1) * block_size);
      const int y1 = std::min(img.height(), (by + 1) * block_size);
      double s = 0.0, ss = 0.0;
      int n = 0;
      for (int y = by * block_size; y < y1; ++y) {
        for (int x = bx * block_size; x < x1; ++x) {
          const double v = img.at(x, y);
          s += v;
          ss += v * v;
          ++n;
        }
      }
      const double mean = s / n;
      const double var = ss / n - mean * mean;
      fg.mask[fg.grid.index(bx, by)] = var > variance_threshold;
    }
  }
  return fg;
}

// Separable Gaussian blur with replicated borders; radius 3 sigma.
inline Plane gaussian_blur(const Plane& in, double sigma) {
  if (sigma <= 0.0) return in;
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& v : k) v /= sum;
  const int w = in.width, h = in.height;
  Plane tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * in(std::clamp(x + i, 0, w - 1), y);
      tmp(x, y) = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp(x, std::clamp(y + i, 0, h - 1));
      out(x, y) = acc;
    }
  return out;
}

// Standard preprocessing used by both matchers and the quality assessor.
struct Preprocessed {
  FingerprintImage normalized;
  ForegroundMask mask;
  OrientationField orientation;
};

inline Preprocessed preprocess(const FingerprintImage& img, int block_size = kDefaultBlockSize) {
  Preprocessed p;
  p.normalized = normalize(img);
  p.mask = segment_foreground(p.normalized, block_size);
  p.orientation = estimate_orientation_field(p.normalized, block_size);
  return p;
}

} // namespace fpvuln
