#pragma once

// Fake-quality sweep: one set of real captures and, per penalty, fakes drawn
// from the same impressions with increasing damage. Both matchers are scored
// at a FAR-anchored threshold fixed on the shared real set.

#include <cstdint>
#include <string>
#include <vector>

#include "protocol.hpp"
#include "quality.hpp"
#include "synthdb.hpp"

namespace fpvuln {

struct SweepConfig {
  std::uint64_t seed = 1;
  int fingers = 20;
  int samples = 4;
  std::vector<double> penalties = {0.1, 0.3, 0.5, 0.7};
  double real_penalty = 0.05;
  Coop coop = Coop::cooperative;
  double far_target = 1.0;
  int width = 256;
  int height = 256;
  int jobs = 1;
};

struct SweepPoint {
  double penalty = 0.0;
  double sr_minutiae = 0.0;
  double sr_ridge = 0.0;
  double mean_fake_quality = 0.0; // mean quality level of the fakes
};

struct SweepResult {
  OperatingPoint op_minutiae, op_ridge;
  std::vector<SweepPoint> points;
};

inline SweepResult penalty_sweep(const SweepConfig& cfg) {
  if (cfg.fingers < 2 || cfg.samples < 1 || cfg.penalties.empty())
    throw ParameterError("sweep needs at least two fingers, one sample and one penalty");
  const std::string profile = "sweep";
  const auto bank = build_gabor_bank();

  CorpusManifest reals;
  std::vector<SampleRecord> fakes;
  for (int f = 0; f < cfg.fingers; ++f)
    for (int n = 0; n < cfg.samples; ++n) {
      SampleRecord r;
      r.subject = f;
      r.sample = n;
      r.profile = profile;
      reals.records.push_back(r);
      r.realness = Realness::fake;
      r.coop = cfg.coop;
      fakes.push_back(r);
    }

  // Impressions for every (finger, sample, realness); masters one at a time.
  const std::size_t per_kind = reals.records.size();
  std::vector<FingerprintImage> real_imgs(per_kind), fake_base(per_kind);
  std::vector<std::uint64_t> fake_seed(per_kind);
  for (int f = 0; f < cfg.fingers; ++f) {
    const auto gp = finger_params(cfg.seed, f, 0, cfg.width, cfg.height);
    const auto master = build_master(gp, cfg.width, cfg.height);
    parallel_for(static_cast<std::size_t>(2 * cfg.samples), cfg.jobs, [&](std::size_t j) {
      const std::size_t n = j % static_cast<std::size_t>(cfg.samples);
      const std::size_t idx = static_cast<std::size_t>(f * cfg.samples) + n;
      const bool fake = j >= static_cast<std::size_t>(cfg.samples);
      const auto draw = derive_seed(gp.seed, {fake ? 1ULL : 0ULL, n});
      auto img = impression(master, gp, draw);
      if (fake) {
        fake_base[idx] = std::move(img);
        fake_seed[idx] = draw;
      } else {
        real_imgs[idx] = degrade(img, cfg.real_penalty, draw);
      }
    });
  }

  TemplateStore store;
  {
    std::vector<MinutiaTemplate> mt(per_kind);
    std::vector<RidgeFeatureVector> rv(per_kind);
    parallel_for(per_kind, cfg.jobs, [&](std::size_t i) {
      mt[i] = minutiae_from_image(real_imgs[i]);
      rv[i] = ridge_features(real_imgs[i], bank);
    });
    for (std::size_t i = 0; i < per_kind; ++i) {
      store.put(reals.records[i].key(), std::move(mt[i]));
      store.put(reals.records[i].key(), std::move(rv[i]));
    }
  }
  const auto imp = impostor_pairs(reals, profile);
  SweepResult res;
  res.op_minutiae = threshold_at_far(score_pairs(imp, ScoreKind::impostor, Matcher::minutiae, store, cfg.jobs),
                                     cfg.far_target);
  res.op_ridge = threshold_at_far(score_pairs(imp, ScoreKind::impostor, Matcher::ridge, store, cfg.jobs),
                                  cfg.far_target);

  CorpusManifest m = reals;
  m.records.insert(m.records.end(), fakes.begin(), fakes.end());
  const auto pairs = attack2_pairs(m, profile, cfg.coop);
  for (double penalty : cfg.penalties) {
    std::vector<MinutiaTemplate> mt(per_kind);
    std::vector<RidgeFeatureVector> rv(per_kind);
    std::vector<int> levels(per_kind);
    parallel_for(per_kind, cfg.jobs, [&](std::size_t i) {
      const auto img = degrade_to_fake(fake_base[i], penalty, cfg.coop, fake_seed[i]);
      mt[i] = minutiae_from_image(img);
      rv[i] = ridge_features(img, bank);
      levels[i] = assess_quality(img).level;
    });
    for (std::size_t i = 0; i < per_kind; ++i) {
      store.put(fakes[i].key(), std::move(mt[i]));
      store.put(fakes[i].key(), std::move(rv[i]));
    }
    SweepPoint pt;
    pt.penalty = penalty;
    pt.sr_minutiae = success_rate(score_pairs(pairs, ScoreKind::attack2, Matcher::minutiae, store, cfg.jobs),
                                  res.op_minutiae);
    pt.sr_ridge = success_rate(score_pairs(pairs, ScoreKind::attack2, Matcher::ridge, store, cfg.jobs), res.op_ridge);
    double q = 0.0;
    for (int l : levels) q += l;
    pt.mean_fake_quality = q / static_cast<double>(per_kind);
    res.points.push_back(pt);
  }
  return res;
}

} // namespace fpvuln
