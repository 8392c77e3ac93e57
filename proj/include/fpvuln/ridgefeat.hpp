#pragma once

// Ridge-feature verification: an oriented Gabor filterbank, a rectangular
// tessellation of the filtered images, per-cell response variance as the
// feature, and a normalized Euclidean matcher without rotation alignment.

#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "image.hpp"
#include "imgcore.hpp"

namespace fpvuln {

inline constexpr double kDegree = std::numbers::pi / 180.0;

struct GaborBankConfig {
  int count = 8;
  double angle_step = 22.5 * kDegree;
  double frequency = 0.1;
  double sigma = 4.0;
};

// A bank of even-symmetric Gabor kernels. Filter k responds to ridges running
// along orientations[k] = k * step (mod pi); its cosine carrier oscillates
// across that direction. Orientations are increasing whenever count * step <= pi.
struct GaborBank {
  int count = 0;
  std::vector<double> orientations;
  double frequency = 0.0;
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  int kernel_radius = 0;
  // kernels[k] is (2r+1)^2 row-major, DC-compensated.
  std::vector<std::vector<double>> kernels;
  // Per-filter amount of the envelope subtracted to make the kernel zero-mean.
  std::vector<double> dc_offsets;

  int kernel_side() const { return 2 * kernel_radius + 1; }
  double tap(int k, int dx, int dy) const {
    return kernels[k][static_cast<std::size_t>(dy + kernel_radius) * kernel_side() +
                      (dx + kernel_radius)];
  }
};

inline double gabor_envelope(double dx, double dy, double sx, double sy) {
  return std::exp(-0.5 * (dx * dx / (sx * sx) + dy * dy / (sy * sy)));
}

inline GaborBank build_gabor_bank(int count, double angle_step, double frequency, double sigma) {
  if (count < 1) throw ParameterError("Gabor bank needs at least one filter");
  if (!(frequency > 0.0)) throw ParameterError("Gabor frequency must be positive");
  if (!(sigma > 0.0)) throw ParameterError("Gabor sigma must be positive");

  GaborBank bank;
  bank.count = count;
  bank.frequency = frequency;
  bank.sigma_x = bank.sigma_y = sigma;
  bank.kernel_radius = static_cast<int>(std::ceil(3.0 * sigma));
  const int r = bank.kernel_radius;
  for (int k = 0; k < count; ++k) {
    const double theta = wrap_pi(k * angle_step);
    bank.orientations.push_back(theta);
    std::vector<double> kern;
    kern.reserve(static_cast<std::size_t>(bank.kernel_side()) * bank.kernel_side());
    double carrier_sum = 0.0, env_sum = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const double env = gabor_envelope(dx, dy, sigma, sigma);
        const double across = -dx * std::sin(theta) + dy * std::cos(theta);
        const double v = env * std::cos(2.0 * std::numbers::pi * frequency * across);
        kern.push_back(v);
        carrier_sum += v;
        env_sum += env;
      }
    }
    const double c = carrier_sum / env_sum;
    std::size_t i = 0;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) kern[i++] -= c * gabor_envelope(dx, dy, sigma, sigma);
    bank.kernels.push_back(std::move(kern));
    bank.dc_offsets.push_back(c);
  }
  return bank;
}

inline GaborBank build_gabor_bank(const GaborBankConfig& cfg = {}) {
  return build_gabor_bank(cfg.count, cfg.angle_step, cfg.frequency, cfg.sigma);
}

namespace detail {

// Mean-removed, zero-padded input to the filterbank.
inline Plane centred_plane(const FingerprintImage& img) {
  Plane p = to_plane(img);
  const double m = pixel_mean(img);
  for (auto& v : p.data) v -= m;
  return p;
}

template <typename T>
std::vector<T> blur_rows_cols(const std::vector<T>& in, int w, int h, const std::vector<double>& k1) {
  const int r = static_cast<int>(k1.size() / 2);
  std::vector<T> tmp(in.size(), T{}), out(in.size(), T{});
  for (int y = 0; y < h; ++y) {
    const T* row = in.data() + static_cast<std::size_t>(y) * w;
    T* dst = tmp.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      T acc{};
      const int lo = std::max(-r, -x), hi = std::min(r, w - 1 - x);
      for (int i = lo; i <= hi; ++i) acc += k1[i + r] * row[x + i];
      dst[x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    T* dst = out.data() + static_cast<std::size_t>(y) * w;
    const int lo = std::max(-r, -y), hi = std::min(r, h - 1 - y);
    for (int i = lo; i <= hi; ++i) {
      const T* src = tmp.data() + static_cast<std::size_t>(y + i) * w;
      const double kv = k1[i + r];
      for (int x = 0; x < w; ++x) dst[x] += kv * src[x];
    }
  }
  return out;
}

} // namespace detail

// Response of filter k by direct 2-D convolution (zero padding after mean
// removal). O(r^2) per pixel; kept as the reference route.
inline Plane gabor_response_direct(const FingerprintImage& img, const GaborBank& bank, int k) {
  const Plane in = detail::centred_plane(img);
  const int w = in.width, h = in.height, r = bank.kernel_radius;
  Plane out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = y - dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = x - dx;
          if (xx < 0 || xx >= w) continue;
          acc += bank.tap(k, dx, dy) * in(xx, yy);
        }
      }
      out(x, y) = acc;
    }
  return out;
}

// Same response via demodulation: the isotropic envelope is separable, so the
// carrier is factored out and only 1-D passes remain. Falls back to the direct
// route for anisotropic envelopes.
inline std::vector<Plane> gabor_responses(const FingerprintImage& img, const GaborBank& bank) {
  std::vector<Plane> out;
  out.reserve(bank.count);
  if (bank.sigma_x != bank.sigma_y) {
    for (int k = 0; k < bank.count; ++k) out.push_back(gabor_response_direct(img, bank, k));
    return out;
  }
  const Plane in = detail::centred_plane(img);
  const int w = in.width, h = in.height, r = bank.kernel_radius;
  std::vector<double> k1(2 * r + 1);
  for (int i = -r; i <= r; ++i) k1[i + r] = std::exp(-0.5 * i * i / (bank.sigma_x * bank.sigma_x));
  const std::vector<double> base = detail::blur_rows_cols(in.data, w, h, k1);

  const double omega = 2.0 * std::numbers::pi * bank.frequency;
  for (int k = 0; k < bank.count; ++k) {
    const double wx = -omega * std::sin(bank.orientations[k]);
    const double wy = omega * std::cos(bank.orientations[k]);
    std::vector<std::complex<double>> row_phase(w), col_phase(h);
    for (int x = 0; x < w; ++x) row_phase[x] = std::polar(1.0, wx * x);
    for (int y = 0; y < h; ++y) col_phase[y] = std::polar(1.0, wy * y);

    std::vector<std::complex<double>> z(in.data.size());
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const auto i = static_cast<std::size_t>(y) * w + x;
        z[i] = in.data[i] * std::conj(row_phase[x] * col_phase[y]);
      }
    z = detail::blur_rows_cols(z, w, h, k1);
    Plane resp(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const auto i = static_cast<std::size_t>(y) * w + x;
        resp.data[i] = (z[i] * row_phase[x] * col_phase[y]).real() - bank.dc_offsets[k] * base[i];
      }
    out.push_back(std::move(resp));
  }
  return out;
}

struct RidgeFeatureVector {
  int grid_rows = 0;
  int grid_cols = 0;
  int filter_count = 0;
  std::vector<double> values;     // [filter][row][col]
  std::vector<bool> cell_validity; // [row][col]

  std::size_t cells() const { return static_cast<std::size_t>(grid_rows) * grid_cols; }
  double value(int f, int r, int c) const {
    return values[(static_cast<std::size_t>(f) * grid_rows + r) * grid_cols + c];
  }
  bool valid(int r, int c) const { return cell_validity[static_cast<std::size_t>(r) * grid_cols + c]; }
  bool operator==(const RidgeFeatureVector&) const = default;
};

struct CellSpan {
  int begin;
  int end;
};

// Equal cells; the last one absorbs the remainder.
inline CellSpan cell_span(int extent, int cells, int i) {
  const int step = extent / cells;
  return {i * step, i == cells - 1 ? extent : (i + 1) * step};
}

inline RidgeFeatureVector extract_ridge_features(const FingerprintImage& img, const GaborBank& bank,
                                                 int grid_rows, int grid_cols,
                                                 const ForegroundMask& mask) {
  require_processable(img);
  if (grid_rows < 1 || grid_cols < 1) throw ParameterError("grid dimensions must be at least 1");
  if (img.width() < grid_cols || img.height() < grid_rows)
    throw SizeError("image smaller than the feature grid");
  if (mask.grid.cols != (img.width() + mask.grid.block_size - 1) / mask.grid.block_size ||
      mask.grid.rows != (img.height() + mask.grid.block_size - 1) / mask.grid.block_size)
    throw ShapeError("foreground mask does not cover the image");

  RidgeFeatureVector fv;
  fv.grid_rows = grid_rows;
  fv.grid_cols = grid_cols;
  fv.filter_count = bank.count;
  fv.values.assign(static_cast<std::size_t>(bank.count) * grid_rows * grid_cols, 0.0);
  fv.cell_validity.assign(static_cast<std::size_t>(grid_rows) * grid_cols, false);

  for (int r = 0; r < grid_rows; ++r) {
    const auto ys = cell_span(img.height(), grid_rows, r);
    for (int c = 0; c < grid_cols; ++c) {
      const auto xs = cell_span(img.width(), grid_cols, c);
      long fg = 0, total = 0;
      for (int y = ys.begin; y < ys.end; ++y)
        for (int x = xs.begin; x < xs.end; ++x) {
          fg += mask.at_pixel(x, y) ? 1 : 0;
          ++total;
        }
      fv.cell_validity[static_cast<std::size_t>(r) * grid_cols + c] = 2 * fg >= total;
    }
  }

  const auto responses = gabor_responses(img, bank);
  for (int f = 0; f < bank.count; ++f) {
    const Plane& resp = responses[f];
    for (int r = 0; r < grid_rows; ++r) {
      const auto ys = cell_span(img.height(), grid_rows, r);
      for (int c = 0; c < grid_cols; ++c) {
        if (!fv.valid(r, c)) continue;
        const auto xs = cell_span(img.width(), grid_cols, c);
        double s = 0.0, ss = 0.0;
        long n = 0;
        for (int y = ys.begin; y < ys.end; ++y)
          for (int x = xs.begin; x < xs.end; ++x) {
            const double v = resp(x, y);
            s += v;
            ss += v * v;
            ++n;
          }
        const double mean = s / n;
        fv.values[(static_cast<std::size_t>(f) * grid_rows + r) * grid_cols + c] =
            std::max(0.0, ss / n - mean * mean);
      }
    }
  }
  return fv;
}

struct RidgeConfig {
  GaborBankConfig bank;
  int grid_rows = 8;
  int grid_cols = 8;
};

// Similarity 1 / (1 + d) where d is the distance between the two vectors,
// each L2-normalized over the cells valid in both.
inline double match_ridge(const RidgeFeatureVector& a, const RidgeFeatureVector& b) {
  if (a.grid_rows != b.grid_rows || a.grid_cols != b.grid_cols || a.filter_count != b.filter_count ||
      a.values.size() != b.values.size())
    throw ShapeError("ridge feature vectors have different dimensions");
  const std::size_t cells = a.cells();
  std::vector<char> common(cells);
  bool any = false;
  for (std::size_t i = 0; i < cells; ++i) {
    common[i] = a.cell_validity[i] && b.cell_validity[i];
    any = any || common[i];
  }
  if (!any) return 0.0;

  double na = 0.0, nb = 0.0;
  for (int f = 0; f < a.filter_count; ++f)
    for (std::size_t i = 0; i < cells; ++i) {
      if (!common[i]) continue;
      const double va = a.values[f * cells + i], vb = b.values[f * cells + i];
      na += va * va;
      nb += vb * vb;
    }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  const double sa = na > 0.0 ? 1.0 / na : 0.0;
  const double sb = nb > 0.0 ? 1.0 / nb : 0.0;

  double d2 = 0.0;
  for (int f = 0; f < a.filter_count; ++f)
    for (std::size_t i = 0; i < cells; ++i) {
      if (!common[i]) continue;
      const double diff = a.values[f * cells + i] * sa - b.values[f * cells + i] * sb;
      d2 += diff * diff;
    }
  return 1.0 / (1.0 + std::sqrt(d2));
}

// ---- serialization --------------------------------------------------------
//
// Binary container, little-endian:
//   "RFV1" | u32 grid_rows | u32 grid_cols | u32 filter_count
//   | u8 validity[rows*cols] | f64 values[filters*rows*cols]

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
  std::uint64_t bits = 0;
  if constexpr (std::is_floating_point_v<T>) {
    static_assert(sizeof(T) == 8);
    bits = std::bit_cast<std::uint64_t>(v);
  } else {
    bits = static_cast<std::uint64_t>(v);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw FormatError("truncated RFV1 container");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(T);
  if constexpr (std::is_floating_point_v<T>)
    return std::bit_cast<T>(bits);
  else
    return static_cast<T>(bits);
}

} // namespace detail

inline std::string encode_rfv(const RidgeFeatureVector& fv) {
  std::string out = "RFV1";
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(fv.grid_rows));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(fv.grid_cols));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(fv.filter_count));
  for (bool v : fv.cell_validity) out.push_back(v ? 1 : 0);
  for (double v : fv.values) detail::put_le<double>(out, v);
  return out;
}

inline RidgeFeatureVector decode_rfv(const std::string& bytes) {
  if (bytes.size() < 16 || bytes.compare(0, 4, "RFV1") != 0)
    throw FormatError("missing RFV1 magic");
  std::size_t pos = 4;
  RidgeFeatureVector fv;
  fv.grid_rows = static_cast<int>(detail::get_le<std::uint32_t>(bytes, pos));
  fv.grid_cols = static_cast<int>(detail::get_le<std::uint32_t>(bytes, pos));
  fv.filter_count = static_cast<int>(detail::get_le<std::uint32_t>(bytes, pos));
  const std::size_t cells = fv.cells();
  const std::size_t n = cells * static_cast<std::size_t>(fv.filter_count);
  if (bytes.size() != pos + cells + 8 * n) throw FormatError("RFV1 size does not match its header");
  for (std::size_t i = 0; i < cells; ++i) fv.cell_validity.push_back(bytes[pos++] != 0);
  fv.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) fv.values.push_back(detail::get_le<double>(bytes, pos));
  return fv;
}

inline void write_rfv(const RidgeFeatureVector& fv, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const auto bytes = encode_rfv(fv);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline RidgeFeatureVector read_rfv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_rfv(ss.str());
}

// One row per (filter, row, col) for inspection.
inline std::string ridge_features_csv(const RidgeFeatureVector& fv) {
  std::ostringstream out;
  out << "filter,row,col,valid,variance\n" << std::setprecision(17);
  for (int f = 0; f < fv.filter_count; ++f)
    for (int r = 0; r < fv.grid_rows; ++r)
      for (int c = 0; c < fv.grid_cols; ++c)
        out << f << ',' << r << ',' << c << ',' << (fv.valid(r, c) ? 1 : 0) << ','
            << fv.value(f, r, c) << '\n';
  return out.str();
}

// Full pipeline for one image.
inline RidgeFeatureVector ridge_features(const FingerprintImage& img, const GaborBank& bank,
                                         const RidgeConfig& cfg = {}) {
  const auto pre = preprocess(img);
  return extract_ridge_features(pre.normalized, bank, cfg.grid_rows, cfg.grid_cols, pre.mask);
}

} // namespace fpvuln
