#pragma once

// Beta-Binomial confidence intervals for rates measured over several
// subjects, each contributing several correlated trials.

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace fpvuln {

struct SubjectCount {
  long trials = 0;
  long successes = 0;
};

using SubjectCounts = std::vector<SubjectCount>;

struct BetaBinomialFit {
  double p_hat = 0.0;
  double rho_hat = 0.0;
  long total_trials = 0;
  int subjects = 0; // subjects with at least one trial
};

struct ConfidenceInterval {
  double point = 0.0; // percent
  double lo = 0.0;
  double hi = 0.0;
  double confidence = 0.95;
};

inline constexpr double kMaxRho = 0.999;

inline void check_counts(const SubjectCounts& counts) {
  int active = 0;
  for (const auto& c : counts) {
    if (c.trials < 0 || c.successes < 0 || c.successes > c.trials)
      throw ParameterError("subject counts must satisfy 0 <= successes <= trials");
    active += c.trials > 0 ? 1 : 0;
  }
  if (active < 2) throw InsufficientDataError("need at least two subjects with trials");
}

// p_hat is the pooled rate; rho_hat is the one-way ANOVA (method of moments)
// intra-class correlation, clamped to [0, 0.999].
inline BetaBinomialFit fit_beta_binomial(const SubjectCounts& counts) {
  check_counts(counts);
  BetaBinomialFit fit;
  long x = 0;
  double sum_m2 = 0.0;
  for (const auto& c : counts) {
    if (c.trials == 0) continue;
    fit.total_trials += c.trials;
    x += c.successes;
    sum_m2 += static_cast<double>(c.trials) * static_cast<double>(c.trials);
    ++fit.subjects;
  }
  const double N = static_cast<double>(fit.total_trials);
  const double n = fit.subjects;
  fit.p_hat = static_cast<double>(x) / N;

  double between = 0.0, within = 0.0;
  for (const auto& c : counts) {
    if (c.trials == 0) continue;
    const double pi = static_cast<double>(c.successes) / static_cast<double>(c.trials);
    between += c.trials * (pi - fit.p_hat) * (pi - fit.p_hat);
    within += c.trials * pi * (1.0 - pi);
  }
  if (N <= n) return fit; // one trial per subject: no within-subject information
  const double msb = between / (n - 1.0);
  const double msw = within / (N - n);
  const double m0 = (N - sum_m2 / N) / (n - 1.0);
  const double denom = msb + (m0 - 1.0) * msw;
  if (denom > 0.0) fit.rho_hat = std::clamp((msb - msw) / denom, 0.0, kMaxRho);
  return fit;
}

// Logit-normal interval with the Beta-Binomial variance inflation
// 1 + (mean_trials - 1) * rho. At p = 0 or 1 the interval is the one-sided
// exact Beta quantile at the inflated effective sample size.
inline ConfidenceInterval logit_interval(double p_hat, double rho, double total_trials, double mean_trials,
                                         double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw ParameterError("confidence must lie in (0, 1)");
  if (!(total_trials > 0.0)) throw InsufficientDataError("no trials");
  ConfidenceInterval ci;
  ci.confidence = confidence;
  ci.point = 100.0 * p_hat;
  const double deff = 1.0 + std::max(0.0, mean_trials - 1.0) * rho;
  const double n_eff = total_trials / deff;
  if (p_hat <= 0.0) {
    ci.lo = 0.0;
    ci.hi = 100.0 * boost::math::quantile(boost::math::beta_distribution<>(1.0, n_eff), confidence);
    return ci;
  }
  if (p_hat >= 1.0) {
    ci.lo = 100.0 * boost::math::quantile(boost::math::beta_distribution<>(n_eff, 1.0), 1.0 - confidence);
    ci.hi = 100.0;
    return ci;
  }
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * confidence);
  const double se = std::sqrt(deff / (total_trials * p_hat * (1.0 - p_hat)));
  const double centre = std::log(p_hat / (1.0 - p_hat));
  auto expit = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  ci.lo = 100.0 * expit(centre - z * se);
  ci.hi = 100.0 * expit(centre + z * se);
  return ci;
}

inline ConfidenceInterval beta_binomial_ci(const SubjectCounts& counts, double confidence = 0.95) {
  const auto fit = fit_beta_binomial(counts);
  return logit_interval(fit.p_hat, fit.rho_hat, static_cast<double>(fit.total_trials),
                        static_cast<double>(fit.total_trials) / fit.subjects, confidence);
}

// Percentile bootstrap over subjects, for cross-checking the model interval.
inline ConfidenceInterval bootstrap_ci(const SubjectCounts& counts, double confidence = 0.95,
                                       int resamples = 10000, std::uint64_t seed = 1) {
  check_counts(counts);
  if (!(confidence > 0.0 && confidence < 1.0)) throw ParameterError("confidence must lie in (0, 1)");
  SubjectCounts active;
  long x = 0, m = 0;
  for (const auto& c : counts)
    if (c.trials > 0) {
      active.push_back(c);
      x += c.successes;
      m += c.trials;
    }
  Rng rng(seed);
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    long bx = 0, bm = 0;
    for (std::size_t i = 0; i < active.size(); ++i) {
      const auto& c = active[rng.below(active.size())];
      bx += c.successes;
      bm += c.trials;
    }
    stats.push_back(static_cast<double>(bx) / static_cast<double>(bm));
  }
  std::sort(stats.begin(), stats.end());
  const double alpha = 1.0 - confidence;
  auto pick = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::clamp(q * (resamples - 1), 0.0, resamples - 1.0));
    return stats[idx];
  };
  ConfidenceInterval ci;
  ci.confidence = confidence;
  ci.point = 100.0 * static_cast<double>(x) / static_cast<double>(m);
  ci.lo = std::min(ci.point, 100.0 * pick(alpha / 2.0));
  ci.hi = std::max(ci.point, 100.0 * pick(1.0 - alpha / 2.0));
  return ci;
}

// "93.15 (91.30,95.44)"
inline std::string format_ci(const ConfidenceInterval& ci) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f (%.2f,%.2f)", ci.point, ci.lo, ci.hi);
  return buf;
}

// Standard normal quantile, used for DET axes.
inline double probit(double p) {
  return boost::math::quantile(boost::math::normal(), std::clamp(p, 1e-12, 1.0 - 1e-12));
}

// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw ParameterError("spearman needs two equal-length samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

} // namespace fpvuln
