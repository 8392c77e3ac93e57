#pragma once

// Deterministic synthetic fingerprints and a parametric spoof-degradation
// simulator. Ridge patterns are grown by iterated oriented Gabor filtering of
// a sparse random seed image along an orientation field built from singular
// points; impressions re-render a finger under rigid jitter.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"
#include "image.hpp"
#include "image_io.hpp"
#include "imgcore.hpp"
#include "manifest.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace fpvuln {

enum class SingularKind { loop, delta };

struct SingularPoint {
  SingularKind kind = SingularKind::loop;
  double x = 0.0; // image coordinates
  double y = 0.0;
};

struct ImpressionJitter {
  double max_translation = 12.0; // pixels
  double max_rotation = 0.15;    // radians
  double contrast_jitter = 0.1;  // relative amplitude change
};

struct GeneratorParams {
  std::uint64_t seed = 1;
  double ridge_period = 9.0;
  std::vector<SingularPoint> singular_points;
  double base_orientation = 0.0; // ridge direction far from singular points
  double noise_level = 0.0;
  ImpressionJitter jitter;
  bool full_frame = false; // fill the whole sensor instead of an elliptical pad
};

inline void validate(const GeneratorParams& p, int width, int height) {
  if (p.ridge_period < 6.0 || p.ridge_period > 14.0)
    throw ParameterError("ridge period must lie in [6, 14]");
  if (p.noise_level < 0.0 || p.noise_level > 1.0) throw ParameterError("noise level must lie in [0, 1]");
  for (const auto& sp : p.singular_points)
    if (sp.x < 0.0 || sp.y < 0.0 || sp.x >= width || sp.y >= height)
      throw ParameterError("singular point outside the image bounds");
  if (width < kMinImageSide || height < kMinImageSide) throw SizeError("requested image is too small");
}

// Ridge direction of the zero-pole model at (x, y).
inline double model_orientation(const GeneratorParams& p, double x, double y) {
  double a = p.base_orientation;
  for (const auto& sp : p.singular_points) {
    const double s = sp.kind == SingularKind::loop ? 0.5 : -0.5;
    a += s * std::atan2(y - sp.y, x - sp.x);
  }
  return wrap_pi(a);
}

// The rendered identity of one finger: a ridge field on a canvas larger than
// the sensor window, plus the finger pad footprint.
struct MasterPattern {
  int width = 0;   // sensor window
  int height = 0;
  int margin = 0;
  Plane ridges;    // [-1, 1], positive on ridges
  Plane footprint; // [0, 1]
};

namespace detail {

inline constexpr int kGrowthOrientations = 72;
inline constexpr int kGrowthIterations = 10;

inline MasterPattern grow_master(const GeneratorParams& p, int width, int height) {
  validate(p, width, height);
  MasterPattern mp;
  mp.width = width;
  mp.height = height;
  mp.margin = static_cast<int>(std::ceil(p.jitter.max_translation + 0.5 * std::max(width, height) *
                                         std::sin(std::min(std::abs(p.jitter.max_rotation), 1.0)))) + 8;
  const int cw = width + 2 * mp.margin, ch = height + 2 * mp.margin;

  // Quantized orientation index per canvas pixel.
  std::vector<std::uint8_t> orient_idx(static_cast<std::size_t>(cw) * ch);
  for (int y = 0; y < ch; ++y)
    for (int x = 0; x < cw; ++x) {
      const double a = model_orientation(p, x - mp.margin, y - mp.margin);
      orient_idx[static_cast<std::size_t>(y) * cw + x] =
          static_cast<std::uint8_t>(static_cast<int>(std::lround(a / std::numbers::pi * kGrowthOrientations)) %
                                    kGrowthOrientations);
    }

  const double sigma = 0.4 * p.ridge_period;
  const int r = static_cast<int>(std::ceil(2.5 * sigma));
  const int side = 2 * r + 1;
  const double freq = 1.0 / p.ridge_period;
  std::vector<std::vector<float>> kernels(kGrowthOrientations);
  for (int k = 0; k < kGrowthOrientations; ++k) {
    const double th = k * std::numbers::pi / kGrowthOrientations;
    auto& kern = kernels[k];
    kern.resize(static_cast<std::size_t>(side) * side);
    double env_sum = 0.0;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) env_sum += std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma));
    const double gain = 8.0 / env_sum;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        const double env = std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma));
        const double across = -dx * std::sin(th) + dy * std::cos(th);
        kern[static_cast<std::size_t>(dy + r) * side + (dx + r)] =
            static_cast<float>(gain * env * std::cos(2.0 * std::numbers::pi * freq * across));
      }
  }

  Rng rng(derive_seed(p.seed, {0x6d6173746572ULL}));
  std::vector<float> cur(static_cast<std::size_t>(cw) * ch, 0.0f), nxt(cur.size());
  const double density = 1.0 / (p.ridge_period * p.ridge_period * 4.0);
  for (auto& v : cur)
    if (rng.uniform() < density) v = rng.uniform() < 0.5 ? -1.0f : 1.0f;

  for (int it = 0; it < kGrowthIterations; ++it) {
    for (int y = 0; y < ch; ++y) {
      for (int x = 0; x < cw; ++x) {
        const auto& kern = kernels[orient_idx[static_cast<std::size_t>(y) * cw + x]];
        const int y0 = std::max(-r, -y), y1 = std::min(r, ch - 1 - y);
        const int x0 = std::max(-r, -x), x1 = std::min(r, cw - 1 - x);
        float acc = 0.0f;
        for (int dy = y0; dy <= y1; ++dy) {
          const float* src = cur.data() + static_cast<std::size_t>(y + dy) * cw + x;
          const float* kr = kern.data() + static_cast<std::size_t>(dy + r) * side + r;
          for (int dx = x0; dx <= x1; ++dx) acc += kr[dx] * src[dx];
        }
        nxt[static_cast<std::size_t>(y) * cw + x] = std::clamp(acc, -1.0f, 1.0f);
      }
    }
    cur.swap(nxt);
  }

  mp.ridges = Plane(cw, ch);
  for (std::size_t i = 0; i < cur.size(); ++i) mp.ridges.data[i] = cur[i];

  mp.footprint = Plane(cw, ch, 1.0);
  if (!p.full_frame) {
    const double cx = 0.5 * cw, cy = 0.5 * ch;
    const double ax = 0.46 * width, ay = 0.53 * height;
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x) {
        const double u = (x - cx) / ax, v = (y - cy) / ay;
        // Signed distance-like value in pixels, soft edge over ~6 px.
        const double d = (std::sqrt(u * u + v * v) - 1.0) * std::min(ax, ay);
        mp.footprint(x, y) = std::clamp(0.5 - d / 6.0, 0.0, 1.0);
      }
  }
  return mp;
}

inline double bilinear(const Plane& p, double x, double y, double outside) {
  if (x < 0.0 || y < 0.0 || x > p.width - 1.0 || y > p.height - 1.0) return outside;
  const int x0 = std::min(static_cast<int>(x), p.width - 2), y0 = std::min(static_cast<int>(y), p.height - 2);
  const double fx = x - x0, fy = y - y0;
  return (1 - fx) * (1 - fy) * p(x0, y0) + fx * (1 - fy) * p(x0 + 1, y0) + (1 - fx) * fy * p(x0, y0 + 1) +
         fx * fy * p(x0 + 1, y0 + 1);
}

inline double bilinear_clamped(const Plane& p, double x, double y) {
  x = std::clamp(x, 0.0, p.width - 1.0);
  y = std::clamp(y, 0.0, p.height - 1.0);
  return bilinear(p, x, y, 0.0);
}

} // namespace detail

struct JitterDraw {
  double dx = 0.0;
  double dy = 0.0;
  double rotation = 0.0;
  double contrast = 0.0;
};

inline JitterDraw draw_jitter(const GeneratorParams& p, std::uint64_t draw_seed) {
  Rng rng(derive_seed(p.seed, {0x6a6974746572ULL, draw_seed}));
  JitterDraw d;
  d.dx = rng.uniform(-1.0, 1.0) * p.jitter.max_translation;
  d.dy = rng.uniform(-1.0, 1.0) * p.jitter.max_translation;
  d.rotation = rng.uniform(-1.0, 1.0) * p.jitter.max_rotation;
  d.contrast = rng.uniform(-1.0, 1.0) * p.jitter.contrast_jitter;
  return d;
}

inline constexpr double kValleyLevel = 215.0;
inline constexpr double kRidgeLevel = 45.0;
inline constexpr double kSensorBackground = 250.0;

// Render the master pattern through the sensor window under a rigid jitter.
// Sensor noise is a function of the finger seed only.
inline FingerprintImage render(const MasterPattern& mp, const GeneratorParams& p, const JitterDraw& d) {
  const int w = mp.width, h = mp.height;
  const double cx = 0.5 * w, cy = 0.5 * h;
  const double mcx = cx + mp.margin, mcy = cy + mp.margin;
  const double c = std::cos(d.rotation), s = std::sin(d.rotation);
  const double amp = (kValleyLevel - kRidgeLevel) * std::max(0.1, 1.0 + d.contrast);
  const double mid = 0.5 * (kValleyLevel + kRidgeLevel);
  Plane out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      // Sensor point -> finger (canvas) point: undo translation then rotation.
      const double ux = x - cx - d.dx, uy = y - cy - d.dy;
      const double fx = c * ux + s * uy + mcx, fy = -s * ux + c * uy + mcy;
      const double v = detail::bilinear(mp.ridges, fx, fy, 0.0);
      const double alpha = detail::bilinear(mp.footprint, fx, fy, 0.0);
      const double finger = mid - 0.5 * amp * v;
      out(x, y) = alpha * finger + (1.0 - alpha) * kSensorBackground;
    }
  out = gaussian_blur(out, 0.7);
  Rng noise(derive_seed(p.seed, {0x6e6f697365ULL}));
  const double sd = 3.0 + 60.0 * p.noise_level;
  for (auto& v : out.data) v += sd * noise.normal();
  return to_image(out);
}

inline MasterPattern build_master(const GeneratorParams& p, int width, int height) {
  return detail::grow_master(p, width, height);
}

inline FingerprintImage generate_fingerprint(const GeneratorParams& p, int width, int height) {
  return render(build_master(p, width, height), p, JitterDraw{});
}

inline FingerprintImage impression(const MasterPattern& mp, const GeneratorParams& p, std::uint64_t draw_seed) {
  return render(mp, p, draw_jitter(p, draw_seed));
}

inline FingerprintImage impression(const GeneratorParams& p, int width, int height, std::uint64_t draw_seed) {
  return impression(build_master(p, width, height), p, draw_seed);
}

// ---- spoof degradation ----------------------------------------------------

inline constexpr double kNonCoopIncrement = 0.15;
inline constexpr double kMaxWarp = 3.0;
inline constexpr int kMaxSpecks = 1000;

// Severity-scaled warp, blur, blob dropouts and contrast compression. Random
// draws do not depend on severity, so for a fixed seed the damage at a higher
// severity contains the damage at a lower one.
inline FingerprintImage degrade(const FingerprintImage& img, double severity, std::uint64_t seed) {
  severity = std::clamp(severity, 0.0, 1.0);
  if (severity <= 0.0) return img;
  Rng rng(derive_seed(seed, {0x66616b65ULL}));
  const int w = img.width(), h = img.height();
  Plane src = to_plane(img);

  // Elastic warp: sum of a few random low-frequency waves per axis.
  struct Wave {
    double kx, ky, phase, weight;
  };
  std::array<Wave, 6> waves{};
  for (auto& wv : waves) {
    const double period = rng.uniform(60.0, 160.0);
    const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
    wv = {std::cos(dir) * 2.0 * std::numbers::pi / period, std::sin(dir) * 2.0 * std::numbers::pi / period,
          rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(-1.0, 1.0)};
  }
  const double amp = kMaxWarp * severity / 3.0;
  Plane warped(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double ux = 0.0, uy = 0.0;
      for (int i = 0; i < 3; ++i) ux += waves[i].weight * std::sin(waves[i].kx * x + waves[i].ky * y + waves[i].phase);
      for (int i = 3; i < 6; ++i) uy += waves[i].weight * std::sin(waves[i].kx * x + waves[i].ky * y + waves[i].phase);
      warped(x, y) = detail::bilinear_clamped(src, x + amp * ux, y + amp * uy);
    }

  Plane blurred = gaussian_blur(warped, 2.2 * severity);

  // Dropouts: smeared patches that fade toward the valley level.
  constexpr int kBlobs = 4;
  const int active = static_cast<int>(std::lround(kBlobs * severity));
  for (int b = 0; b < kBlobs; ++b) {
    const double bx = rng.uniform(0.0, w), by = rng.uniform(0.0, h);
    const double base_r = rng.uniform(6.0, 12.0);
    if (b >= active) continue;
    const double rad = base_r + 10.0 * severity;
    const int x0 = std::max(0, static_cast<int>(bx - rad)), x1 = std::min(w - 1, static_cast<int>(bx + rad));
    const int y0 = std::max(0, static_cast<int>(by - rad)), y1 = std::min(h - 1, static_cast<int>(by + rad));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double d = std::hypot(x - bx, y - by) / rad;
        if (d >= 1.0) continue;
        const double wgt = 0.85 * (1.0 - d * d);
        blurred(x, y) += (kValleyLevel + 15.0 - blurred(x, y)) * wgt;
      }
  }

  // Cast artefacts: small bubbles that break ridges and specks that bridge
  // valleys. They add spurious minutiae while leaving cell texture intact.
  const int specks = static_cast<int>(std::lround(kMaxSpecks * severity));
  for (int b = 0; b < kMaxSpecks; ++b) {
    const double sx = rng.uniform(0.0, w), sy = rng.uniform(0.0, h);
    const double rad = rng.uniform(1.5, 3.0);
    const double level = rng.uniform() < 0.5 ? kValleyLevel : kRidgeLevel;
    if (b >= specks) continue;
    const int x0 = std::max(0, static_cast<int>(sx - rad)), x1 = std::min(w - 1, static_cast<int>(sx + rad));
    const int y0 = std::max(0, static_cast<int>(sy - rad)), y1 = std::min(h - 1, static_cast<int>(sy + rad));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        if (blurred(x, y) > kSensorBackground - 8.0) continue; // outside the finger
        const double d = std::hypot(x - sx, y - sy) / rad;
        if (d < 1.0) blurred(x, y) += (level - blurred(x, y)) * (1.0 - d * d);
      }
  }

  // Contrast compression toward the sensor background.
  const double keep = 1.0 - 0.75 * severity;
  for (auto& v : blurred.data) v = kSensorBackground - (kSensorBackground - v) * keep;
  return to_image(blurred, img.dpi());
}

inline FingerprintImage degrade_to_fake(const FingerprintImage& img, double penalty, Coop coop, std::uint64_t seed,
                                        double noncoop_increment = kNonCoopIncrement) {
  double severity = penalty;
  if (coop == Coop::non_cooperative) severity += noncoop_increment;
  return degrade(img, std::clamp(severity, 0.0, 1.0), seed);
}

// ---- sensor profiles and corpora ------------------------------------------

struct SensorProfile {
  std::string name;
  double fake_quality_penalty = 0.0;
  double real_quality_penalty = 0.0;
  double noncoop_increment = kNonCoopIncrement;
};

inline SensorProfile optical_profile() { return {"optical", 0.2, 0.05, kNonCoopIncrement}; }
inline SensorProfile capacitive_profile() { return {"capacitive", 0.5, 0.1, kNonCoopIncrement}; }
inline SensorProfile thermal_profile() { return {"thermal", 0.7, 0.1, 0.0}; }

inline std::vector<SensorProfile> default_profiles() {
  return {optical_profile(), capacitive_profile(), thermal_profile()};
}

inline SensorProfile profile_by_name(const std::string& name) {
  for (auto& p : default_profiles())
    if (p.name == name) return p;
  throw ParameterError("unknown sensor profile '" + name + "'");
}

inline void validate(const SensorProfile& p) {
  if (p.fake_quality_penalty < p.real_quality_penalty)
    throw ParameterError("profile " + p.name + ": fake penalty below real penalty");
  if (p.fake_quality_penalty < 0.0 || p.fake_quality_penalty > 1.0 || p.real_quality_penalty < 0.0)
    throw ParameterError("profile " + p.name + ": penalties must lie in [0, 1]");
}

// Per-finger identity drawn from the master seed: period, pattern class and
// singular point placement.
inline GeneratorParams finger_params(std::uint64_t master_seed, int subject, int finger, int width, int height) {
  GeneratorParams p;
  p.seed = derive_seed(master_seed, {static_cast<std::uint64_t>(subject), static_cast<std::uint64_t>(finger)});
  Rng rng(derive_seed(p.seed, {0x69646eULL}));
  p.ridge_period = rng.uniform(8.0, 10.5);
  p.base_orientation = rng.uniform(-0.25, 0.25);
  const double cx = 0.5 * width, cy = 0.5 * height;
  auto jitter = [&](double v, double span) { return v + rng.uniform(-span, span); };
  switch (rng.below(4)) {
  case 0: // arch-like: no singular points
    break;
  case 1: { // loop
    const double lx = jitter(cx, 0.15 * width), ly = jitter(0.40 * height, 0.08 * height);
    const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
    p.singular_points.push_back({SingularKind::loop, lx, ly});
    p.singular_points.push_back({SingularKind::delta, std::clamp(lx + side * rng.uniform(0.25, 0.35) * width, 1.0, width - 2.0),
                                 std::clamp(ly + rng.uniform(0.30, 0.40) * height, 1.0, height - 2.0)});
    break;
  }
  case 2: { // whorl: two loops and two deltas
    const double lx = jitter(cx, 0.1 * width), ly = jitter(0.42 * height, 0.06 * height);
    const double sep = rng.uniform(0.06, 0.12) * height;
    p.singular_points.push_back({SingularKind::loop, lx, ly - 0.5 * sep});
    p.singular_points.push_back({SingularKind::loop, lx, ly + 0.5 * sep});
    p.singular_points.push_back({SingularKind::delta, std::clamp(lx - rng.uniform(0.28, 0.36) * width, 1.0, width - 2.0),
                                 std::clamp(ly + rng.uniform(0.30, 0.40) * height, 1.0, height - 2.0)});
    p.singular_points.push_back({SingularKind::delta, std::clamp(lx + rng.uniform(0.28, 0.36) * width, 1.0, width - 2.0),
                                 std::clamp(ly + rng.uniform(0.30, 0.40) * height, 1.0, height - 2.0)});
    break;
  }
  default: { // tented arch: loop above a delta
    const double lx = jitter(cx, 0.1 * width), ly = jitter(0.45 * height, 0.08 * height);
    p.singular_points.push_back({SingularKind::loop, lx, ly});
    p.singular_points.push_back({SingularKind::delta, std::clamp(lx + rng.uniform(-0.05, 0.05) * width, 1.0, width - 2.0),
                                 std::clamp(ly + rng.uniform(0.18, 0.26) * height, 1.0, height - 2.0)});
    break;
  }
  }
  return p;
}

struct CorpusSpec {
  int subjects = 17;
  int fingers_per_subject = 4;
  int samples_per_finger = 4;
  std::vector<SensorProfile> profiles = default_profiles();
  std::uint64_t seed = 1;
  int width = 256;
  int height = 256;
  int dpi = 500;
  int jobs = 1;
};

inline std::string image_file_name(const SampleRecord& r) { return "images/" + r.key() + ".pgm"; }

// Generates every record of the corpus and hands (record, image) to `sink`
// in manifest order. One finger is generated at a time; work inside a finger
// is spread over spec.jobs threads.
inline CorpusManifest generate_corpus(const CorpusSpec& spec,
                                      const std::function<void(const SampleRecord&, const FingerprintImage&)>& sink) {
  if (spec.subjects < 1 || spec.fingers_per_subject < 1 || spec.samples_per_finger < 1 || spec.profiles.empty())
    throw ParameterError("corpus counts must be at least 1");
  for (const auto& p : spec.profiles) validate(p);

  CorpusManifest m;
  m.subjects = spec.subjects;
  m.fingers = spec.fingers_per_subject;
  m.samples = spec.samples_per_finger;
  for (const auto& p : spec.profiles) m.profiles.push_back(p.name);

  const std::array<std::pair<Realness, Coop>, 3> kinds = {std::pair{Realness::real, Coop::none},
                                                          std::pair{Realness::fake, Coop::cooperative},
                                                          std::pair{Realness::fake, Coop::non_cooperative}};
  for (int s = 0; s < spec.subjects; ++s) {
    for (int f = 0; f < spec.fingers_per_subject; ++f) {
      const GeneratorParams gp = finger_params(spec.seed, s, f, spec.width, spec.height);
      const MasterPattern master = build_master(gp, spec.width, spec.height);
      std::vector<SampleRecord> recs;
      for (std::size_t pi = 0; pi < spec.profiles.size(); ++pi)
        for (const auto& [realness, coop] : kinds)
          for (int n = 0; n < spec.samples_per_finger; ++n) {
            SampleRecord r;
            r.subject = s;
            r.finger = f;
            r.sample = n;
            r.profile = spec.profiles[pi].name;
            r.realness = realness;
            r.coop = coop;
            r.path = image_file_name(r);
            recs.push_back(r);
          }
      std::vector<FingerprintImage> imgs(recs.size());
      parallel_for(recs.size(), spec.jobs, [&](std::size_t i) {
        const auto& r = recs[i];
        const auto profile = std::find_if(spec.profiles.begin(), spec.profiles.end(),
                                          [&](const SensorProfile& p) { return p.name == r.profile; });
        const std::uint64_t profile_tag = fnv1a(r.profile);
        // Every capture is a separate draw; fakes of one mode share nothing
        // with the other mode except the finger identity.
        const std::uint64_t draw = derive_seed(
            gp.seed, {profile_tag, static_cast<std::uint64_t>(r.realness), static_cast<std::uint64_t>(r.coop),
                      static_cast<std::uint64_t>(r.sample)});
        FingerprintImage imp = impression(master, gp, draw);
        if (r.realness == Realness::real) {
          imp = degrade(imp, profile->real_quality_penalty, draw);
        } else {
          imp = degrade_to_fake(imp, profile->fake_quality_penalty, r.coop, draw, profile->noncoop_increment);
        }
        imp.set_dpi(spec.dpi);
        imgs[i] = std::move(imp);
      });
      for (std::size_t i = 0; i < recs.size(); ++i) {
        sink(recs[i], imgs[i]);
        m.records.push_back(recs[i]);
      }
    }
  }
  m.sort();
  return m;
}

// Writes images and manifest.csv under out_dir.
inline CorpusManifest build_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "images").string() + ": " + ec.message());
  auto m = generate_corpus(spec, [&](const SampleRecord& r, const FingerprintImage& img) {
    write_pgm(img, out_dir / r.path);
  });
  write_manifest(m, out_dir / "manifest.csv");
  return m;
}

} // namespace fpvuln
