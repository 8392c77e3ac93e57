#pragma once

// Minutiae verification: crossing-number extraction on a thinned binary ridge
// map, and a matcher built only from relative distances and angles.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "error.hpp"
#include "image.hpp"
#include "imgcore.hpp"

namespace fpvuln {

enum class MinutiaKind { termination, bifurcation };

inline const char* to_string(MinutiaKind k) {
  return k == MinutiaKind::termination ? "termination" : "bifurcation";
}

struct Minutia {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0; // ridge-flow direction, [0, 2pi)
  MinutiaKind kind = MinutiaKind::termination;
  double quality = 0.0;

  bool operator==(const Minutia&) const = default;
};

struct MinutiaTemplate {
  std::vector<Minutia> minutiae;
  int width = 0;
  int height = 0;

  std::size_t size() const { return minutiae.size(); }
  bool empty() const { return minutiae.empty(); }
  bool operator==(const MinutiaTemplate&) const = default;
};

struct MinutiaeExtractConfig {
  double smoothing_sigma = 1.0;
  int threshold_window = 15;  // local-mean window for binarization
  int spur_length = 8;
  double min_separation = 8.0;
  int border_blocks = 1;
  int direction_trace = 10;
};

// ---- binarization and thinning --------------------------------------------

struct BinaryMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  BinaryMap() = default;
  BinaryMap(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}
  std::uint8_t get(int x, int y) const {
    if (x < 0 || y < 0 || x >= width || y >= height) return 0;
    return bits[static_cast<std::size_t>(y) * width + x];
  }
  void set(int x, int y, std::uint8_t v) { bits[static_cast<std::size_t>(y) * width + x] = v; }
};

// Ridge pixels (1) are those darker than their local mean, inside foreground.
inline BinaryMap binarize(const FingerprintImage& img, const ForegroundMask& mask,
                          const MinutiaeExtractConfig& cfg = {}) {
  const Plane s = gaussian_blur(to_plane(img), cfg.smoothing_sigma);
  const int w = s.width, h = s.height;
  std::vector<double> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
  auto I = [&](int x, int y) -> double& { return integral[static_cast<std::size_t>(y) * (w + 1) + x]; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) I(x + 1, y + 1) = s(x, y) + I(x, y + 1) + I(x + 1, y) - I(x, y);
  const int r = cfg.threshold_window / 2;
  BinaryMap out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at_pixel(x, y)) continue;
      const int x0 = std::max(0, x - r), x1 = std::min(w, x + r + 1);
      const int y0 = std::max(0, y - r), y1 = std::min(h, y + r + 1);
      const double mean = (I(x1, y1) - I(x0, y1) - I(x1, y0) + I(x0, y0)) / ((x1 - x0) * (y1 - y0));
      // Margin keeps rounding in the integral image out of flat regions.
      out.set(x, y, s(x, y) < mean - 1e-6 ? 1 : 0);
    }
  }
  return out;
}

namespace detail {

// 8-neighbourhood in ring order starting north, clockwise.
inline constexpr std::array<int, 8> kRingDx = {0, 1, 1, 1, 0, -1, -1, -1};
inline constexpr std::array<int, 8> kRingDy = {-1, -1, 0, 1, 1, 1, 0, -1};

} // namespace detail

// Zhang-Suen thinning to a one-pixel skeleton.
inline BinaryMap thin(BinaryMap m) {
  using detail::kRingDx;
  using detail::kRingDy;
  std::vector<std::size_t> del;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      del.clear();
      for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
          if (!m.get(x, y)) continue;
          std::array<int, 8> p{};
          int b = 0;
          for (int i = 0; i < 8; ++i) b += p[i] = m.get(x + kRingDx[i], y + kRingDy[i]);
          if (b < 2 || b > 6) continue;
          int a = 0;
          for (int i = 0; i < 8; ++i) a += (p[i] == 0 && p[(i + 1) % 8] == 1) ? 1 : 0;
          if (a != 1) continue;
          // p[0]=N p[2]=E p[4]=S p[6]=W
          if (pass == 0) {
            if (p[0] * p[2] * p[4] != 0 || p[2] * p[4] * p[6] != 0) continue;
          } else {
            if (p[0] * p[2] * p[6] != 0 || p[0] * p[4] * p[6] != 0) continue;
          }
          del.push_back(static_cast<std::size_t>(y) * m.width + x);
        }
      }
      for (auto i : del) m.bits[i] = 0;
      changed = changed || !del.empty();
    }
  }
  return m;
}

inline int crossing_number(const BinaryMap& skel, int x, int y) {
  using detail::kRingDx;
  using detail::kRingDy;
  int t = 0;
  for (int i = 0; i < 8; ++i) {
    const int a = skel.get(x + kRingDx[i], y + kRingDy[i]);
    const int b = skel.get(x + kRingDx[(i + 1) % 8], y + kRingDy[(i + 1) % 8]);
    t += std::abs(a - b);
  }
  return t / 2;
}

namespace detail {

struct TraceResult {
  int x;
  int y;
  int steps;
  bool hit_junction; // stopped on a pixel with crossing number >= 3
  bool hit_end;      // stopped on a termination
};

inline bool is_four_neighbour(int dx, int dy) { return dx == 0 || dy == 0; }

// Walk along the skeleton from (x, y) starting at (sx, sy) for at most
// max_steps pixels. Pixels in `visited` are never re-entered.
inline TraceResult trace_ridge(const BinaryMap& skel, int x, int y, int sx, int sy, int max_steps,
                               std::vector<std::pair<int, int>> visited) {
  visited.emplace_back(x, y);
  int cx = sx, cy = sy, steps = 1;
  auto seen = [&](int px, int py) {
    return std::find(visited.begin(), visited.end(), std::make_pair(px, py)) != visited.end();
  };
  while (true) {
    visited.emplace_back(cx, cy);
    const int cn = crossing_number(skel, cx, cy);
    if (cn >= 3) return {cx, cy, steps, true, false};
    if (cn == 1) return {cx, cy, steps, false, true};
    if (steps >= max_steps) return {cx, cy, steps, false, false};
    int best = -1;
    for (int i = 0; i < 8; ++i) {
      const int nx = cx + kRingDx[i], ny = cy + kRingDy[i];
      if (!skel.get(nx, ny) || seen(nx, ny)) continue;
      if (best < 0 || (is_four_neighbour(kRingDx[i], kRingDy[i]) &&
                       !is_four_neighbour(kRingDx[best], kRingDy[best])))
        best = i;
    }
    if (best < 0) return {cx, cy, steps, false, true};
    // Mark the other candidates so staircase corners are not revisited.
    for (int i = 0; i < 8; ++i) {
      const int nx = cx + kRingDx[i], ny = cy + kRingDy[i];
      if (i != best && skel.get(nx, ny)) visited.emplace_back(nx, ny);
    }
    cx += kRingDx[best];
    cy += kRingDy[best];
    ++steps;
  }
}

// One starting pixel per connected run of skeleton pixels around (x, y),
// preferring 4-neighbours.
inline std::vector<std::pair<int, int>> branch_starts(const BinaryMap& skel, int x, int y) {
  std::vector<std::pair<int, int>> starts;
  int first_zero = -1;
  for (int i = 0; i < 8; ++i)
    if (!skel.get(x + kRingDx[i], y + kRingDy[i])) {
      first_zero = i;
      break;
    }
  if (first_zero < 0) return starts;
  int run_best = -1;
  for (int k = 1; k <= 8; ++k) {
    const int i = (first_zero + k) % 8;
    const bool on = skel.get(x + kRingDx[i], y + kRingDy[i]);
    if (on) {
      if (run_best < 0 || (is_four_neighbour(kRingDx[i], kRingDy[i]) &&
                           !is_four_neighbour(kRingDx[run_best], kRingDy[run_best])))
        run_best = i;
    } else if (run_best >= 0) {
      starts.emplace_back(x + kRingDx[run_best], y + kRingDy[run_best]);
      run_best = -1;
    }
  }
  return starts;
}

inline double snap_direction(double traced, double field_angle) {
  const double a = wrap_two_pi(field_angle);
  const double b = wrap_two_pi(field_angle + std::numbers::pi);
  return direction_distance(traced, a) <= direction_distance(traced, b) ? a : b;
}

} // namespace detail

// Full extraction on a normalized image with its foreground mask.
inline MinutiaTemplate extract_minutiae(const FingerprintImage& img, const ForegroundMask& mask,
                                        const MinutiaeExtractConfig& cfg = {}) {
  require_processable(img);
  MinutiaTemplate tpl;
  tpl.width = img.width();
  tpl.height = img.height();

  const OrientationField field = estimate_orientation_field(img, mask.grid.block_size);
  const BinaryMap skel = thin(binarize(img, mask, cfg));

  struct Candidate {
    int x, y;
    MinutiaKind kind;
    bool removed = false;
  };
  std::vector<Candidate> cands;
  for (int y = 1; y < skel.height - 1; ++y)
    for (int x = 1; x < skel.width - 1; ++x) {
      if (!skel.get(x, y) || !mask.at_pixel(x, y)) continue;
      const int cn = crossing_number(skel, x, y);
      if (cn == 1) cands.push_back({x, y, MinutiaKind::termination});
      else if (cn == 3) cands.push_back({x, y, MinutiaKind::bifurcation});
    }

  auto find_cand = [&](int x, int y) -> Candidate* {
    for (auto& c : cands)
      if (c.x == x && c.y == y) return &c;
    return nullptr;
  };

  // Spurs and short isolated segments.
  for (auto& c : cands) {
    if (c.kind != MinutiaKind::termination || c.removed) continue;
    const auto starts = detail::branch_starts(skel, c.x, c.y);
    if (starts.empty()) {
      c.removed = true;
      continue;
    }
    const auto t = detail::trace_ridge(skel, c.x, c.y, starts[0].first, starts[0].second,
                                       cfg.spur_length, {});
    if ((t.hit_junction || t.hit_end) && t.steps < cfg.spur_length) {
      c.removed = true;
      if (auto* other = find_cand(t.x, t.y)) other->removed = true;
    }
  }

  // Pairs closer than the minimum separation.
  std::vector<bool> crowded(cands.size(), false);
  const double sep2 = cfg.min_separation * cfg.min_separation;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (cands[i].removed) continue;
    for (std::size_t j = i + 1; j < cands.size(); ++j) {
      if (cands[j].removed) continue;
      const double dx = cands[i].x - cands[j].x, dy = cands[i].y - cands[j].y;
      if (dx * dx + dy * dy < sep2) crowded[i] = crowded[j] = true;
    }
  }

  const int bs = mask.grid.block_size;
  auto near_boundary = [&](int x, int y) {
    const int bx = x / bs, by = y / bs;
    for (int dy = -cfg.border_blocks; dy <= cfg.border_blocks; ++dy)
      for (int dx = -cfg.border_blocks; dx <= cfg.border_blocks; ++dx) {
        const int nx = bx + dx, ny = by + dy;
        if (nx < 0 || ny < 0 || nx >= mask.grid.cols || ny >= mask.grid.rows) return true;
        if (!mask.at(nx, ny)) return true;
      }
    return false;
  };

  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto& c = cands[i];
    if (c.removed || crowded[i] || near_boundary(c.x, c.y)) continue;
    const int bx = c.x / bs, by = c.y / bs;
    const double field_angle = field.angle(bx, by);

    const auto starts = detail::branch_starts(skel, c.x, c.y);
    double traced = field_angle;
    if (c.kind == MinutiaKind::termination && !starts.empty()) {
      const auto t = detail::trace_ridge(skel, c.x, c.y, starts[0].first, starts[0].second,
                                         cfg.direction_trace, {});
      traced = std::atan2(t.y - c.y, t.x - c.x);
    } else if (starts.size() >= 3) {
      // The two branches closest in direction form the fork; point into it.
      std::vector<double> dirs;
      std::vector<std::pair<int, int>> blocked{{c.x, c.y}};
      for (const auto& s : starts) blocked.push_back(s);
      for (const auto& s : starts) {
        const auto t = detail::trace_ridge(skel, c.x, c.y, s.first, s.second, cfg.direction_trace, blocked);
        dirs.push_back(std::atan2(t.y - c.y, t.x - c.x));
      }
      double best = 1e9;
      for (std::size_t a = 0; a < dirs.size(); ++a)
        for (std::size_t b = a + 1; b < dirs.size(); ++b) {
          const double d = direction_distance(dirs[a], dirs[b]);
          if (d < best) {
            best = d;
            traced = std::atan2(std::sin(dirs[a]) + std::sin(dirs[b]), std::cos(dirs[a]) + std::cos(dirs[b]));
          }
        }
    }
    Minutia m;
    m.x = c.x;
    m.y = c.y;
    m.kind = c.kind;
    m.theta = detail::snap_direction(wrap_two_pi(traced), field_angle);
    m.quality = std::clamp(field.coherence_at(bx, by), 0.0, 1.0);
    tpl.minutiae.push_back(m);
  }
  return tpl;
}

// Convenience: normalize, segment and extract.
inline MinutiaTemplate minutiae_from_image(const FingerprintImage& raw,
                                           const MinutiaeExtractConfig& cfg = {}) {
  const auto norm = normalize(raw);
  const auto mask = segment_foreground(norm);
  return extract_minutiae(norm, mask, cfg);
}

// Rotate every minutia about the template centroid, then translate.
inline MinutiaTemplate rigid_transform(const MinutiaTemplate& t, double rotation, double dx, double dy) {
  MinutiaTemplate out = t;
  if (t.empty()) return out;
  double cx = 0.0, cy = 0.0;
  for (const auto& m : t.minutiae) {
    cx += m.x;
    cy += m.y;
  }
  cx /= static_cast<double>(t.size());
  cy /= static_cast<double>(t.size());
  const double c = std::cos(rotation), s = std::sin(rotation);
  for (auto& m : out.minutiae) {
    const double px = m.x - cx, py = m.y - cy;
    m.x = cx + c * px - s * py + dx;
    m.y = cy + s * px + c * py + dy;
    m.theta = wrap_two_pi(m.theta + rotation);
  }
  return out;
}

// ---- matching -------------------------------------------------------------

struct MinutiaeMatchConfig {
  int neighbours = 4;              // k nearest neighbours per local descriptor
  double distance_tol = 8.0;       // pixels
  double angle_tol = 0.3;          // radians
  double min_local_similarity = 0.25;
  int max_references = 12;         // local matches tried as alignment anchors
  double pair_distance_tol = 12.0; // pixels, consolidation stage
  double pair_angle_tol = 0.4;     // radians, consolidation stage
  int refine_iterations = 2;
};

namespace detail {

struct NeighbourFeature {
  double distance;
  double rel_direction; // neighbour theta relative to centre theta
  double rel_position;  // bearing to neighbour relative to centre theta
};

inline std::vector<std::vector<NeighbourFeature>> local_descriptors(const MinutiaTemplate& t, int k) {
  const auto n = t.size();
  std::vector<std::vector<NeighbourFeature>> out(n);
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < n; ++i) {
    order.clear();
    const auto& a = t.minutiae[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto& b = t.minutiae[j];
      order.emplace_back(std::hypot(b.x - a.x, b.y - a.y), j);
    }
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end());
    for (std::size_t q = 0; q < take; ++q) {
      const auto& b = t.minutiae[order[q].second];
      out[i].push_back({order[q].first, wrap_two_pi(b.theta - a.theta),
                        wrap_two_pi(std::atan2(b.y - a.y, b.x - a.x) - a.theta)});
    }
  }
  return out;
}

// Greedy tuple matching between two neighbourhoods. Each matched tuple
// contributes 1 - (its worst normalized deviation).
inline double local_similarity(const std::vector<NeighbourFeature>& a,
                               const std::vector<NeighbourFeature>& b,
                               const MinutiaeMatchConfig& cfg) {
  std::array<bool, 64> used{};
  double total = 0.0;
  for (const auto& fa : a) {
    int best = -1;
    double best_dev = 1.0;
    for (std::size_t j = 0; j < b.size() && j < used.size(); ++j) {
      if (used[j]) continue;
      const auto& fb = b[j];
      const double dd = std::abs(fa.distance - fb.distance) / cfg.distance_tol;
      const double da = direction_distance(fa.rel_direction, fb.rel_direction) / cfg.angle_tol;
      const double dp = direction_distance(fa.rel_position, fb.rel_position) / cfg.angle_tol;
      const double dev = std::max({dd, da, dp});
      if (dev < best_dev) {
        best_dev = dev;
        best = static_cast<int>(j);
      }
    }
    if (best >= 0) {
      used[static_cast<std::size_t>(best)] = true;
      total += 1.0 - best_dev;
    }
  }
  return total / std::max(cfg.neighbours, 1);
}

struct Rigid {
  double c = 1.0, s = 0.0, tx = 0.0, ty = 0.0, angle = 0.0;
  std::pair<double, double> apply(double x, double y) const {
    return {c * x - s * y + tx, s * x + c * y + ty};
  }
};

inline Rigid rigid_from_anchor(const Minutia& a, const Minutia& b) {
  Rigid r;
  r.angle = b.theta - a.theta;
  r.c = std::cos(r.angle);
  r.s = std::sin(r.angle);
  r.tx = b.x - (r.c * a.x - r.s * a.y);
  r.ty = b.y - (r.s * a.x + r.c * a.y);
  return r;
}

// Least-squares rigid fit (2-D Procrustes without scale).
inline Rigid rigid_fit(const MinutiaTemplate& a, const MinutiaTemplate& b,
                       const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  double ax = 0, ay = 0, bx = 0, by = 0;
  for (auto [i, j] : pairs) {
    ax += a.minutiae[i].x;
    ay += a.minutiae[i].y;
    bx += b.minutiae[j].x;
    by += b.minutiae[j].y;
  }
  const double n = static_cast<double>(pairs.size());
  ax /= n; ay /= n; bx /= n; by /= n;
  double sxx = 0, sxy = 0;
  for (auto [i, j] : pairs) {
    const double px = a.minutiae[i].x - ax, py = a.minutiae[i].y - ay;
    const double qx = b.minutiae[j].x - bx, qy = b.minutiae[j].y - by;
    sxx += px * qx + py * qy;
    sxy += px * qy - py * qx;
  }
  Rigid r;
  r.angle = std::atan2(sxy, sxx);
  r.c = std::cos(r.angle);
  r.s = std::sin(r.angle);
  r.tx = bx - (r.c * ax - r.s * ay);
  r.ty = by - (r.s * ax + r.c * ay);
  return r;
}

// Greedy one-to-one pairing of minutiae that agree under the alignment.
inline std::vector<std::pair<std::size_t, std::size_t>>
pair_under(const MinutiaTemplate& a, const MinutiaTemplate& b, const Rigid& r,
           const MinutiaeMatchConfig& cfg) {
  struct Cand {
    double dev;
    std::size_t i, j;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto [px, py] = r.apply(a.minutiae[i].x, a.minutiae[i].y);
    const double th = a.minutiae[i].theta + r.angle;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = std::hypot(px - b.minutiae[j].x, py - b.minutiae[j].y);
      if (d > cfg.pair_distance_tol) continue;
      const double da = direction_distance(th, b.minutiae[j].theta);
      if (da > cfg.pair_angle_tol) continue;
      cands.push_back({std::max(d / cfg.pair_distance_tol, da / cfg.pair_angle_tol), i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    return std::tie(x.dev, x.i, x.j) < std::tie(y.dev, y.i, y.j);
  });
  std::vector<bool> ua(a.size()), ub(b.size());
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& c : cands) {
    if (ua[c.i] || ub[c.j]) continue;
    ua[c.i] = ub[c.j] = true;
    out.emplace_back(c.i, c.j);
  }
  return out;
}

inline std::string serialize_for_order(const MinutiaTemplate& t) {
  std::string s;
  s.reserve(t.size() * 40);
  for (const auto& m : t.minutiae) {
    for (double v : {m.x, m.y, m.theta, m.quality}) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 7; i >= 0; --i) s.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
    s.push_back(m.kind == MinutiaKind::termination ? 'T' : 'B');
  }
  return s;
}

inline std::size_t match_pairs_ordered(const MinutiaTemplate& a, const MinutiaTemplate& b,
                                       const MinutiaeMatchConfig& cfg) {
  const auto da = local_descriptors(a, cfg.neighbours);
  const auto db = local_descriptors(b, cfg.neighbours);
  struct Local {
    double sim;
    std::size_t i, j;
  };
  std::vector<Local> locals;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double s = local_similarity(da[i], db[j], cfg);
      if (s >= cfg.min_local_similarity) locals.push_back({s, i, j});
    }
  std::sort(locals.begin(), locals.end(), [](const Local& x, const Local& y) {
    if (x.sim != y.sim) return x.sim > y.sim;
    return std::tie(x.i, x.j) < std::tie(y.i, y.j);
  });
  const auto refs = std::min<std::size_t>(locals.size(), static_cast<std::size_t>(cfg.max_references));
  std::size_t best = 0;
  for (std::size_t q = 0; q < refs; ++q) {
    const auto& anchor = locals[q];
    Rigid r = rigid_from_anchor(a.minutiae[anchor.i], b.minutiae[anchor.j]);
    auto pairs = pair_under(a, b, r, cfg);
    for (int it = 0; it < cfg.refine_iterations && pairs.size() >= 3; ++it) {
      r = rigid_fit(a, b, pairs);
      auto refined = pair_under(a, b, r, cfg);
      if (refined.size() < pairs.size()) break;
      pairs = std::move(refined);
    }
    best = std::max(best, pairs.size());
  }
  return best;
}

} // namespace detail

// Similarity in [0, 1]: paired minutiae / max(|a|, |b|). Local descriptors
// nominate anchor correspondences; each anchor fixes a relative alignment
// under which minutiae are paired one-to-one. The two templates are put in a
// canonical order first so the score is exactly symmetric.
inline double match_minutiae(const MinutiaTemplate& a, const MinutiaTemplate& b,
                             const MinutiaeMatchConfig& cfg = {}) {
  if (a.empty() || b.empty()) return 0.0;
  bool swap = false;
  if (a.size() != b.size()) {
    swap = b.size() < a.size();
  } else {
    swap = detail::serialize_for_order(b) < detail::serialize_for_order(a);
  }
  const auto& first = swap ? b : a;
  const auto& second = swap ? a : b;
  const auto paired = detail::match_pairs_ordered(first, second, cfg);
  return static_cast<double>(paired) / static_cast<double>(std::max(a.size(), b.size()));
}

// ---- text format ------------------------------------------------------------
//
//   MINUTIAE v1 <count> <width> <height>
//   x y theta_deg kind quality

inline std::string encode_minutiae(const MinutiaTemplate& t) {
  std::ostringstream out;
  out << "MINUTIAE v1 " << t.size() << ' ' << t.width << ' ' << t.height << '\n';
  out << std::fixed << std::setprecision(6);
  for (const auto& m : t.minutiae)
    out << m.x << ' ' << m.y << ' ' << m.theta * 180.0 / std::numbers::pi << ' ' << to_string(m.kind)
        << ' ' << m.quality << '\n';
  return out.str();
}

inline MinutiaTemplate decode_minutiae(const std::string& text) {
  std::istringstream in(text);
  std::string magic, version;
  std::size_t count = 0;
  MinutiaTemplate t;
  if (!(in >> magic >> version >> count >> t.width >> t.height) || magic != "MINUTIAE" || version != "v1")
    throw FormatError("bad minutiae template header");
  for (std::size_t i = 0; i < count; ++i) {
    Minutia m;
    double deg = 0.0;
    std::string kind;
    if (!(in >> m.x >> m.y >> deg >> kind >> m.quality)) throw FormatError("truncated minutiae template");
    if (kind == "termination") m.kind = MinutiaKind::termination;
    else if (kind == "bifurcation") m.kind = MinutiaKind::bifurcation;
    else throw FormatError("unknown minutia kind '" + kind + "'");
    m.theta = wrap_two_pi(deg * std::numbers::pi / 180.0);
    t.minutiae.push_back(m);
  }
  return t;
}

inline void write_minutiae(const MinutiaTemplate& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << encode_minutiae(t);
}

inline MinutiaTemplate read_minutiae(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_minutiae(ss.str());
}

} // namespace fpvuln
