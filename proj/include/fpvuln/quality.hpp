#pragma once

// Five-level image quality assessor (1 = best, 5 = worst). The raw score is a
// weighted mix of orientation coherence, foreground contrast and foreground
// coverage; levels are fixed thresholds on the raw score.

#include <algorithm>
#include <array>
#include <span>
#include <vector>

#include "image.hpp"
#include "imgcore.hpp"

namespace fpvuln {

struct QualityComponents {
  double coherence_mean = 0.0;
  double contrast = 0.0;
  double foreground_ratio = 0.0;
};

struct QualityScore {
  double raw = 0.0;
  QualityComponents components;
};

struct QualityConfig {
  std::array<double, 3> weights = {0.5, 0.3, 0.2};
  // Lower bounds of raw for levels 1..4; anything below the last is level 5.
  // Calibrated against the synthetic generator (see tests/test_quality.cpp).
  std::array<double, 4> thresholds = {0.74, 0.66, 0.56, 0.46};
};

struct QualityAssessment {
  QualityScore score;
  int level = 5;
};

inline int quality_level(double raw, const QualityConfig& cfg = {}) {
  for (int i = 0; i < 4; ++i)
    if (raw >= cfg.thresholds[static_cast<std::size_t>(i)]) return i + 1;
  return 5;
}

inline QualityAssessment assess_quality(const FingerprintImage& img, const QualityConfig& cfg = {}) {
  require_processable(img);
  const auto pre = preprocess(img);
  const auto& grid = pre.mask.grid;

  QualityAssessment qa;
  std::size_t fg_blocks = 0;
  double coh = 0.0;
  std::vector<std::uint8_t> fg_pixels;
  for (int by = 0; by < grid.rows; ++by)
    for (int bx = 0; bx < grid.cols; ++bx) {
      if (!pre.mask.at(bx, by)) continue;
      ++fg_blocks;
      coh += pre.orientation.coherence_at(bx, by);
      const int x1 = std::min(img.width(), (bx + 1) * grid.block_size);
      const int y1 = std::min(img.height(), (by + 1) * grid.block_size);
      for (int y = by * grid.block_size; y < y1; ++y)
        for (int x = bx * grid.block_size; x < x1; ++x) fg_pixels.push_back(img.at(x, y));
    }
  if (fg_blocks == 0) {
    qa.level = 5;
    return qa;
  }
  auto& c = qa.score.components;
  c.coherence_mean = std::clamp(coh / static_cast<double>(fg_blocks), 0.0, 1.0);
  c.foreground_ratio = static_cast<double>(fg_blocks) / static_cast<double>(grid.count());
  const auto q1 = fg_pixels.begin() + static_cast<std::ptrdiff_t>(fg_pixels.size() / 4);
  std::nth_element(fg_pixels.begin(), q1, fg_pixels.end());
  const double lo = *q1;
  const auto q3 = fg_pixels.begin() + static_cast<std::ptrdiff_t>((3 * fg_pixels.size()) / 4);
  std::nth_element(fg_pixels.begin(), q3, fg_pixels.end());
  const double hi = *q3;
  c.contrast = std::clamp((hi - lo) / 255.0, 0.0, 1.0);
  qa.score.raw = cfg.weights[0] * c.coherence_mean + cfg.weights[1] * c.contrast + cfg.weights[2] * c.foreground_ratio;
  qa.level = quality_level(qa.score.raw, cfg);
  return qa;
}

// Counts per level 1..5.
inline std::array<std::size_t, 5> quality_histogram(std::span<const int> levels) {
  std::array<std::size_t, 5> counts{};
  for (int l : levels) {
    if (l < 1 || l > 5) throw ParameterError("quality level out of range: " + std::to_string(l));
    ++counts[static_cast<std::size_t>(l - 1)];
  }
  return counts;
}

} // namespace fpvuln
