#pragma once

// Direct-attack evaluation protocol: pairing rules for normal operation
// (genuine / impostor), Attack 1 (fake enrolment, fake test) and Attack 2
// (real enrolment, fake test); FAR-anchored thresholds; success rates; DET.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "error.hpp"
#include "manifest.hpp"
#include "minutiae.hpp"
#include "parallel.hpp"
#include "ridgefeat.hpp"
#include "stats.hpp"

namespace fpvuln {

enum class Matcher { minutiae, ridge };

inline std::string to_string(Matcher m) { return m == Matcher::minutiae ? "minutiae" : "ridge"; }

inline Matcher parse_matcher(const std::string& s) {
  if (s == "minutiae") return Matcher::minutiae;
  if (s == "ridge") return Matcher::ridge;
  throw ParameterError("unknown matcher '" + s + "'");
}

enum class ScoreKind { genuine, impostor, attack1, attack2 };

inline std::string to_string(ScoreKind k) {
  switch (k) {
  case ScoreKind::genuine: return "genuine";
  case ScoreKind::impostor: return "impostor";
  case ScoreKind::attack1: return "attack1";
  default: return "attack2";
  }
}

struct SamplePair {
  std::string a; // enrolment sample key
  std::string b; // test sample key
  std::string group; // finger the trial is attributed to

  std::string id() const { return a + "|" + b; }
  bool operator<(const SamplePair& o) const { return std::tie(a, b) < std::tie(o.a, o.b); }
  bool operator==(const SamplePair& o) const { return a == o.a && b == o.b; }
};

using PairList = std::vector<SamplePair>;

namespace detail {

// Records of one profile and kind, grouped by finger in manifest order.
inline std::map<std::string, std::vector<const SampleRecord*>>
by_finger(const CorpusManifest& m, const std::string& profile, Realness realness, Coop coop) {
  std::map<std::string, std::vector<const SampleRecord*>> groups;
  for (const auto& r : m.records)
    if (r.profile == profile && r.realness == realness && r.coop == coop) groups[r.finger_key()].push_back(&r);
  for (auto& [k, v] : groups)
    std::sort(v.begin(), v.end(), [](auto* x, auto* y) { return x->sample < y->sample; });
  return groups;
}

inline PairList within_finger_pairs(const std::map<std::string, std::vector<const SampleRecord*>>& groups) {
  PairList out;
  for (const auto& [finger, recs] : groups)
    for (std::size_t i = 0; i < recs.size(); ++i)
      for (std::size_t j = i + 1; j < recs.size(); ++j) out.push_back({recs[i]->key(), recs[j]->key(), finger});
  return out;
}

} // namespace detail

// Same finger, real samples, unordered: F * s(s-1)/2.
inline PairList genuine_pairs(const CorpusManifest& m, const std::string& profile) {
  return detail::within_finger_pairs(detail::by_finger(m, profile, Realness::real, Coop::none));
}

// Different fingers, real samples, unordered: C(F,2) * s^2. Fingers are the
// identities, so two fingers of one subject form impostor pairs.
inline PairList impostor_pairs(const CorpusManifest& m, const std::string& profile) {
  const auto groups = detail::by_finger(m, profile, Realness::real, Coop::none);
  PairList out;
  for (auto i = groups.begin(); i != groups.end(); ++i)
    for (auto j = std::next(i); j != groups.end(); ++j)
      for (const auto* ra : i->second)
        for (const auto* rb : j->second) out.push_back({ra->key(), rb->key(), i->first});
  return out;
}

// Same finger, fake samples of one cooperation mode, unordered.
inline PairList attack1_pairs(const CorpusManifest& m, const std::string& profile, Coop coop) {
  return detail::within_finger_pairs(detail::by_finger(m, profile, Realness::fake, coop));
}

// Same finger, every real sample against every fake of one mode.
inline PairList attack2_pairs(const CorpusManifest& m, const std::string& profile, Coop coop) {
  const auto reals = detail::by_finger(m, profile, Realness::real, Coop::none);
  const auto fakes = detail::by_finger(m, profile, Realness::fake, coop);
  PairList out;
  for (const auto& [finger, real_recs] : reals) {
    auto it = fakes.find(finger);
    if (it == fakes.end()) continue;
    for (const auto* r : real_recs)
      for (const auto* f : it->second) out.push_back({r->key(), f->key(), finger});
  }
  return out;
}

// ---- templates and scores -------------------------------------------------

class TemplateStore {
public:
  void put(const std::string& key, MinutiaTemplate t) { minutiae_[key] = std::move(t); }
  void put(const std::string& key, RidgeFeatureVector v) { ridge_[key] = std::move(v); }

  const MinutiaTemplate& minutiae(const std::string& key) const {
    auto it = minutiae_.find(key);
    if (it == minutiae_.end()) throw LookupError("no minutiae template for sample " + key);
    return it->second;
  }
  const RidgeFeatureVector& ridge(const std::string& key) const {
    auto it = ridge_.find(key);
    if (it == ridge_.end()) throw LookupError("no ridge feature vector for sample " + key);
    return it->second;
  }

  double score(Matcher m, const std::string& a, const std::string& b) const {
    return m == Matcher::minutiae ? match_minutiae(minutiae(a), minutiae(b)) : match_ridge(ridge(a), ridge(b));
  }

private:
  std::map<std::string, MinutiaTemplate> minutiae_;
  std::map<std::string, RidgeFeatureVector> ridge_;
};

struct Score {
  SamplePair pair;
  double value = 0.0;
};

struct ScoreSet {
  ScoreKind kind = ScoreKind::genuine;
  std::vector<Score> scores;

  std::size_t size() const { return scores.size(); }
  bool empty() const { return scores.empty(); }
  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(scores.size());
    for (const auto& s : scores) v.push_back(s.value);
    return v;
  }
};

// Throws ProtocolError if a pair repeats (in either order) or pairs a sample
// with itself.
inline void check_pairs(const PairList& pairs) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& p : pairs) {
    if (p.a == p.b) throw ProtocolError("self-pair " + p.a);
    const auto key = std::minmax(p.a, p.b);
    if (!seen.emplace(key.first, key.second).second) throw ProtocolError("duplicate pair " + p.id());
  }
}

inline ScoreSet score_pairs(const PairList& pairs, ScoreKind kind, Matcher matcher, const TemplateStore& store,
                            int jobs = 1) {
  ScoreSet set;
  set.kind = kind;
  set.scores.resize(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    set.scores[i] = {pairs[i], store.score(matcher, pairs[i].a, pairs[i].b)};
  });
  return set;
}

// ---- operating points -----------------------------------------------------

struct OperatingPoint {
  double target_far = 0.0;   // percent
  double threshold = 0.0;
  double achieved_far = 0.0; // percent
  double frr_at_threshold = std::numeric_limits<double>::quiet_NaN(); // percent
};

// Fraction (percent) of values accepted under the rule score >= threshold.
inline double accept_percent(const std::vector<double>& sorted_values, double threshold) {
  if (sorted_values.empty()) return 0.0;
  const auto it = std::lower_bound(sorted_values.begin(), sorted_values.end(), threshold);
  return 100.0 * static_cast<double>(sorted_values.end() - it) / static_cast<double>(sorted_values.size());
}

// The smallest observed score (or the sentinel just above the maximum) whose
// impostor accept fraction does not exceed the target.
inline OperatingPoint threshold_at_far(const ScoreSet& impostor, double target_far) {
  if (impostor.empty()) throw ProtocolError("impostor score set is empty");
  if (!(target_far > 0.0 && target_far <= 100.0)) throw ParameterError("FAR target must lie in (0, 100]");
  auto v = impostor.values();
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  const auto allowed = static_cast<std::size_t>(std::floor(target_far * static_cast<double>(n) / 100.0 + 1e-9));
  OperatingPoint op;
  op.target_far = target_far;
  op.threshold = std::nextafter(v.back(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; i = static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), v[i]) - v.begin())) {
    if (n - i <= allowed) {
      op.threshold = v[i];
      break;
    }
  }
  op.achieved_far = accept_percent(v, op.threshold);
  return op;
}

inline double false_reject_percent(const ScoreSet& genuine, double threshold) {
  if (genuine.empty()) throw ProtocolError("genuine score set is empty");
  std::size_t rejected = 0;
  for (const auto& s : genuine.scores) rejected += s.value < threshold ? 1 : 0;
  return 100.0 * static_cast<double>(rejected) / static_cast<double>(genuine.size());
}

// SR = percent of attack attempts accepted. For Attack 1 this is 1 - FNMR of
// the fake-fake matings, for Attack 2 the FMR of the real-fake matings.
inline double success_rate(const ScoreSet& attack, const OperatingPoint& op) {
  if (attack.kind != ScoreKind::attack1 && attack.kind != ScoreKind::attack2)
    throw ProtocolError("success rate needs an attack score set");
  if (attack.empty()) throw ProtocolError("attack score set is empty");
  std::size_t acc = 0;
  for (const auto& s : attack.scores) acc += s.value >= op.threshold ? 1 : 0;
  return 100.0 * static_cast<double>(acc) / static_cast<double>(attack.size());
}

// Per-finger accept counts, the grouping the Beta-Binomial interval assumes.
inline SubjectCounts accept_counts_by_group(const ScoreSet& set, double threshold) {
  std::map<std::string, SubjectCount> groups;
  for (const auto& s : set.scores) {
    auto& g = groups[s.pair.group];
    ++g.trials;
    g.successes += s.value >= threshold ? 1 : 0;
  }
  SubjectCounts out;
  for (const auto& [k, c] : groups) out.push_back(c);
  return out;
}

enum class CiMethod { beta_binomial, bootstrap };

inline CiMethod parse_ci_method(const std::string& s) {
  if (s == "beta-binomial") return CiMethod::beta_binomial;
  if (s == "bootstrap") return CiMethod::bootstrap;
  throw ParameterError("unknown interval method '" + s + "'");
}

inline ConfidenceInterval success_rate_ci(const ScoreSet& attack, const OperatingPoint& op,
                                          CiMethod method = CiMethod::beta_binomial, double confidence = 0.95) {
  const auto counts = accept_counts_by_group(attack, op.threshold);
  auto ci = method == CiMethod::bootstrap ? bootstrap_ci(counts, confidence) : beta_binomial_ci(counts, confidence);
  ci.point = success_rate(attack, op);
  return ci;
}

// ---- DET ------------------------------------------------------------------

struct DetPoint {
  double threshold = 0.0;
  double fmr = 0.0;  // percent of impostor scores >= threshold
  double fnmr = 0.0; // percent of genuine scores < threshold
};

struct Rates {
  double fmr;
  double fnmr;
};

inline Rates rates_at(const ScoreSet& genuine, const ScoreSet& impostor, double threshold) {
  auto g = genuine.values(), i = impostor.values();
  std::sort(g.begin(), g.end());
  std::sort(i.begin(), i.end());
  return {accept_percent(i, threshold), 100.0 - accept_percent(g, threshold)};
}

// Threshold sweep over every observed score plus one sentinel on each side.
inline std::vector<DetPoint> compute_det(const ScoreSet& genuine, const ScoreSet& impostor) {
  if (genuine.empty() || impostor.empty()) throw ProtocolError("DET needs non-empty genuine and impostor sets");
  auto g = genuine.values(), im = impostor.values();
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());
  std::vector<double> thresholds;
  thresholds.reserve(g.size() + im.size() + 2);
  thresholds.insert(thresholds.end(), g.begin(), g.end());
  thresholds.insert(thresholds.end(), im.begin(), im.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  const double inf = std::numeric_limits<double>::infinity();
  thresholds.insert(thresholds.begin(), std::nextafter(thresholds.front(), -inf));
  thresholds.push_back(std::nextafter(thresholds.back(), inf));

  std::vector<DetPoint> det;
  det.reserve(thresholds.size());
  for (double t : thresholds) det.push_back({t, accept_percent(im, t), 100.0 - accept_percent(g, t)});
  return det;
}

// Equal error rate: mean of FMR and FNMR at the point where they are closest.
inline double equal_error_rate(const std::vector<DetPoint>& det) {
  if (det.empty()) throw ProtocolError("empty DET curve");
  const DetPoint* best = &det.front();
  for (const auto& p : det)
    if (std::abs(p.fmr - p.fnmr) < std::abs(best->fmr - best->fnmr)) best = &p;
  return 0.5 * (best->fmr + best->fnmr);
}

// ---- full evaluation ------------------------------------------------------

inline const std::vector<double>& default_far_targets() {
  static const std::vector<double> t = {0.1, 1.0, 10.0};
  return t;
}

struct OperatingRow {
  OperatingPoint op;
  // keyed by "coop" / "noncoop"
  std::map<std::string, ConfidenceInterval> attack1;
  std::map<std::string, ConfidenceInterval> attack2;
};

struct EvaluationReport {
  std::string matcher;
  std::string profile;
  std::map<std::string, std::size_t> counts; // score-set sizes
  double eer = 0.0;
  std::vector<OperatingRow> rows;
  std::map<std::string, std::vector<DetPoint>> det; // "nom", "coop", "noncoop"
};

struct EvaluationScores {
  ScoreSet genuine, impostor;
  std::map<std::string, ScoreSet> attack1, attack2;
};

struct EvaluationResult {
  EvaluationReport report;
  EvaluationScores scores;
};

inline const std::vector<std::pair<std::string, Coop>>& coop_modes() {
  static const std::vector<std::pair<std::string, Coop>> modes = {{"coop", Coop::cooperative},
                                                                  {"noncoop", Coop::non_cooperative}};
  return modes;
}

inline EvaluationResult evaluate(const CorpusManifest& m, const TemplateStore& store, Matcher matcher,
                                 const std::string& profile,
                                 const std::vector<double>& far_targets = default_far_targets(), int jobs = 1,
                                 CiMethod ci = CiMethod::beta_binomial) {
  EvaluationResult res;
  auto& rep = res.report;
  auto& sc = res.scores;
  rep.matcher = to_string(matcher);
  rep.profile = profile;

  const auto gen = genuine_pairs(m, profile);
  const auto imp = impostor_pairs(m, profile);
  if (gen.empty()) throw ProtocolError("profile " + profile + " has no genuine pairs");
  if (imp.empty()) throw ProtocolError("profile " + profile + " has no impostor pairs");
  sc.genuine = score_pairs(gen, ScoreKind::genuine, matcher, store, jobs);
  sc.impostor = score_pairs(imp, ScoreKind::impostor, matcher, store, jobs);
  rep.counts["genuine"] = sc.genuine.size();
  rep.counts["impostor"] = sc.impostor.size();
  for (const auto& [name, coop] : coop_modes()) {
    sc.attack1[name] = score_pairs(attack1_pairs(m, profile, coop), ScoreKind::attack1, matcher, store, jobs);
    sc.attack2[name] = score_pairs(attack2_pairs(m, profile, coop), ScoreKind::attack2, matcher, store, jobs);
    rep.counts["attack1_" + name] = sc.attack1[name].size();
    rep.counts["attack2_" + name] = sc.attack2[name].size();
  }

  for (double target : far_targets) {
    OperatingRow row;
    row.op = threshold_at_far(sc.impostor, target);
    row.op.frr_at_threshold = false_reject_percent(sc.genuine, row.op.threshold);
    for (const auto& [name, coop] : coop_modes()) {
      row.attack1[name] = success_rate_ci(sc.attack1[name], row.op, ci);
      row.attack2[name] = success_rate_ci(sc.attack2[name], row.op, ci);
    }
    rep.rows.push_back(std::move(row));
  }

  rep.det["nom"] = compute_det(sc.genuine, sc.impostor);
  rep.eer = equal_error_rate(rep.det["nom"]);
  // Attack curves: enrolled real samples against the fakes of each mode.
  for (const auto& [name, coop] : coop_modes()) rep.det[name] = compute_det(sc.genuine, sc.attack2[name]);
  return res;
}

} // namespace fpvuln
