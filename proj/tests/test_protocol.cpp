#include <gtest/gtest.h>

#include <set>

#include "fpvuln/protocol.hpp"
#include "fpvuln/synthdb.hpp"
#include "oracles.hpp"

using namespace fpvuln;
using namespace fpvuln::test;

TEST(Pairs, CountExamples) {
  // 17 subjects x 4 fingers = 68 fingers, 4 samples each.
  const auto m = manifest({17, 4, 4, 4, 4});
  EXPECT_EQ(genuine_pairs(m, "optical").size(), 408u);
  EXPECT_EQ(impostor_pairs(m, "optical").size(), 36448u);
  EXPECT_EQ(attack1_pairs(m, "optical", Coop::cooperative).size(), 408u);
  EXPECT_EQ(attack2_pairs(m, "optical", Coop::non_cooperative).size(), 1088u);

  EXPECT_EQ(genuine_pairs(manifest({1, 1, 1, 1, 1}), "optical").size(), 0u);
  EXPECT_EQ(genuine_pairs(manifest({3, 1, 3, 1, 1}), "optical").size(), 9u);
  EXPECT_EQ(impostor_pairs(manifest({1, 1, 4, 1, 1}), "optical").size(), 0u);
  EXPECT_EQ(impostor_pairs(manifest({3, 1, 2, 1, 1}), "optical").size(), 12u);
  EXPECT_EQ(attack1_pairs(manifest({2, 2, 1, 1, 1}), "optical", Coop::cooperative).size(), 0u);
  EXPECT_EQ(attack1_pairs(manifest({1, 2, 1, 3, 1}), "optical", Coop::cooperative).size(), 6u);
  EXPECT_EQ(attack2_pairs(manifest({2, 1, 2, 0, 0}), "optical", Coop::cooperative).size(), 0u);
  EXPECT_EQ(attack2_pairs(manifest({2, 1, 2, 2, 1}), "optical", Coop::cooperative).size(), 8u);
}

TEST(Pairs, FingersOfOneSubjectAreImpostors) {
  const auto m = manifest({1, 2, 1, 0, 0});
  const auto imp = impostor_pairs(m, "optical");
  ASSERT_EQ(imp.size(), 1u);
  EXPECT_EQ(imp[0].id(), "0_0_0_optical_real_na|0_1_0_optical_real_na");
}

TEST(Pairs, MatchBruteForceOnRandomShapes) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    Shape sh;
    sh.subjects = 1 + static_cast<int>(rng.below(3));
    sh.fingers = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(6 / sh.subjects)));
    sh.reals = 1 + static_cast<int>(rng.below(5));
    sh.coop_fakes = static_cast<int>(rng.below(6));
    sh.noncoop_fakes = static_cast<int>(rng.below(6));
    const auto m = manifest(sh, {"capacitive", "optical"});
    const int F = sh.subjects * sh.fingers;
    ASSERT_LE(F, 6);
    for (const std::string profile : {"capacitive", "optical"}) {
      auto bf = brute_force(m, profile);
      const auto gen = genuine_pairs(m, profile), imp = impostor_pairs(m, profile);
      EXPECT_EQ(unordered(gen), bf.genuine) << "trial " << trial;
      EXPECT_EQ(unordered(imp), bf.impostor) << "trial " << trial;
      EXPECT_EQ(gen.size(), static_cast<std::size_t>(F * sh.reals * (sh.reals - 1) / 2));
      EXPECT_EQ(imp.size(), static_cast<std::size_t>(F * (F - 1) / 2 * sh.reals * sh.reals));
      EXPECT_NO_THROW(check_pairs(gen));
      EXPECT_NO_THROW(check_pairs(imp));
      for (Coop c : {Coop::cooperative, Coop::non_cooperative}) {
        const int fakes = c == Coop::cooperative ? sh.coop_fakes : sh.noncoop_fakes;
        const auto a1 = attack1_pairs(m, profile, c), a2 = attack2_pairs(m, profile, c);
        EXPECT_EQ(unordered(a1), bf.attack1[c]) << "trial " << trial;
        EXPECT_EQ(unordered(a2), bf.attack2[c]) << "trial " << trial;
        EXPECT_EQ(a1.size(), static_cast<std::size_t>(F * fakes * (fakes - 1) / 2));
        EXPECT_EQ(a2.size(), static_cast<std::size_t>(F * sh.reals * fakes));
        EXPECT_NO_THROW(check_pairs(a1));
        EXPECT_NO_THROW(check_pairs(a2));
        for (const auto& p : a2) {
          EXPECT_NE(p.a.find("_real_"), std::string::npos);
          EXPECT_NE(p.b.find("_fake_"), std::string::npos);
        }
      }
    }
  }
}

TEST(Pairs, GroupIsTheFinger) {
  const auto m = manifest({2, 2, 2, 2, 2});
  for (const auto& p : attack2_pairs(m, "optical", Coop::cooperative)) EXPECT_EQ(p.a.substr(0, 3), p.group);
  for (const auto& p : impostor_pairs(m, "optical")) EXPECT_EQ(p.a.substr(0, 3), p.group);
}

TEST(Pairs, CheckRejectsDuplicatesAndSelfPairs) {
  EXPECT_THROW(check_pairs({{"x", "x", "g"}}), ProtocolError);
  EXPECT_THROW(check_pairs({{"x", "y", "g"}, {"y", "x", "g"}}), ProtocolError);
  EXPECT_THROW(check_pairs({{"x", "y", "g"}, {"x", "y", "g"}}), ProtocolError);
  EXPECT_NO_THROW(check_pairs({{"x", "y", "g"}, {"x", "z", "g"}}));
}

TEST(Scoring, EmptySelfAndMissing) {
  const auto img = generate_fingerprint(finger_params(2, 0, 0, 256, 256), 256, 256);
  TemplateStore store;
  store.put("s", minutiae_from_image(img));
  store.put("s", ridge_features(img, build_gabor_bank()));
  EXPECT_TRUE(score_pairs({}, ScoreKind::genuine, Matcher::minutiae, store).empty());
  for (Matcher m : {Matcher::minutiae, Matcher::ridge}) {
    const auto set = score_pairs({{"s", "s", "g"}}, ScoreKind::genuine, m, store);
    ASSERT_EQ(set.size(), 1u);
    EXPECT_EQ(set.scores[0].value, 1.0) << to_string(m);
  }
  try {
    score_pairs({{"s", "missing", "g"}}, ScoreKind::genuine, Matcher::ridge, store);
    FAIL() << "expected LookupError";
  } catch (const LookupError& e) {
    EXPECT_NE(std::string(e.what()).find("missing"), std::string::npos);
  }
}

TEST(Scoring, ScheduleIndependent) {
  Rng rng(9);
  TemplateStore store;
  PairList pairs;
  for (int i = 0; i < 30; ++i) {
    MinutiaTemplate t;
    for (int k = 0; k < 15; ++k)
      t.minutiae.push_back({rng.uniform(0.0, 200.0), rng.uniform(0.0, 200.0), rng.uniform(0.0, 6.28),
                            MinutiaKind::termination, 0.5});
    store.put("k" + std::to_string(i), t);
    if (i > 0) pairs.push_back({"k0", "k" + std::to_string(i), "g"});
  }
  const auto one = score_pairs(pairs, ScoreKind::impostor, Matcher::minutiae, store, 1);
  const auto many = score_pairs(pairs, ScoreKind::impostor, Matcher::minutiae, store, 4);
  EXPECT_EQ(one.values(), many.values());
  EXPECT_EQ(one.values(), score_pairs(pairs, ScoreKind::impostor, Matcher::minutiae, store, 1).values());
}

TEST(Threshold, Examples) {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i / 100.0);
  const auto op = threshold_at_far(score_set(ScoreKind::impostor, v), 10.0);
  EXPECT_EQ(op.threshold, 0.91);
  EXPECT_EQ(op.achieved_far, 10.0);

  const auto all = threshold_at_far(score_set(ScoreKind::impostor, v), 100.0);
  EXPECT_EQ(all.threshold, 0.01);
  EXPECT_EQ(all.achieved_far, 100.0);

  const auto tied = threshold_at_far(score_set(ScoreKind::impostor, std::vector<double>(50, 0.4)), 10.0);
  EXPECT_GT(tied.threshold, 0.4);
  EXPECT_EQ(tied.achieved_far, 0.0);
}

TEST(Threshold, Errors) {
  EXPECT_THROW(threshold_at_far(ScoreSet{ScoreKind::impostor, {}}, 1.0), ProtocolError);
  const auto s = score_set(ScoreKind::impostor, {0.1, 0.2});
  EXPECT_THROW(threshold_at_far(s, 0.0), ParameterError);
  EXPECT_THROW(threshold_at_far(s, 101.0), ParameterError);
}

TEST(Threshold, LargestFarNotExceedingTarget) {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(400);
    std::vector<double> v(n);
    // Coarse grid so ties are common.
    for (auto& x : v) x = static_cast<double>(rng.below(40)) / 40.0;
    const auto set = score_set(ScoreKind::impostor, v);
    const double target = rng.uniform(0.05, 100.0);
    const auto op = threshold_at_far(set, target);
    std::sort(v.begin(), v.end());
    EXPECT_LE(op.achieved_far, target);
    EXPECT_EQ(op.achieved_far, accept_percent(v, op.threshold));
    // The next observed score below the threshold must overshoot the target.
    auto below = std::lower_bound(v.begin(), v.end(), op.threshold);
    if (below != v.begin()) EXPECT_GT(accept_percent(v, *std::prev(below)), target) << "trial " << trial;
  }
}

TEST(SuccessRate, Examples) {
  OperatingPoint op;
  op.threshold = 0.5;
  EXPECT_EQ(success_rate(score_set(ScoreKind::attack2, {0.9, 0.8, 0.2, 0.1}), op), 50.0);
  EXPECT_EQ(success_rate(score_set(ScoreKind::attack1, {0.1, 0.2}), op), 0.0);
  EXPECT_EQ(success_rate(score_set(ScoreKind::attack1, {0.5, 0.7}), op), 100.0);
  EXPECT_THROW(success_rate(ScoreSet{ScoreKind::attack1, {}}, op), ProtocolError);
  EXPECT_THROW(success_rate(score_set(ScoreKind::genuine, {0.5}), op), ProtocolError);
}

TEST(SuccessRate, NonIncreasingInThreshold) {
  Rng rng(12);
  std::vector<double> v(200);
  for (auto& x : v) x = rng.uniform();
  const auto set = score_set(ScoreKind::attack2, v);
  double prev = 101.0;
  for (int i = 0; i <= 100; ++i) {
    OperatingPoint op;
    op.threshold = i / 100.0;
    const double sr = success_rate(set, op);
    EXPECT_LE(sr, prev);
    prev = sr;
  }
}

TEST(SuccessRate, IntervalBracketsPoint) {
  Rng rng(13);
  std::vector<double> v(160);
  for (auto& x : v) x = rng.uniform();
  const auto set = score_set(ScoreKind::attack2, v, 16);
  OperatingPoint op;
  op.threshold = 0.3;
  for (CiMethod m : {CiMethod::beta_binomial, CiMethod::bootstrap}) {
    const auto ci = success_rate_ci(set, op, m);
    EXPECT_EQ(ci.point, success_rate(set, op));
    EXPECT_LE(ci.lo, ci.point);
    EXPECT_GE(ci.hi, ci.point);
  }
  const auto counts = accept_counts_by_group(set, 0.3);
  EXPECT_EQ(counts.size(), 16u);
  for (const auto& c : counts) EXPECT_EQ(c.trials, 10);
  EXPECT_EQ(parse_ci_method("bootstrap"), CiMethod::bootstrap);
  EXPECT_THROW(parse_ci_method("wilson"), ParameterError);
}

TEST(Det, HandEnumeration) {
  const auto g = score_set(ScoreKind::genuine, {0.9, 0.7}), i = score_set(ScoreKind::impostor, {0.6, 0.3});
  const auto r = rates_at(g, i, 0.65);
  EXPECT_EQ(r.fmr, 0.0);
  EXPECT_EQ(r.fnmr, 0.0);
  const auto det = compute_det(g, i);
  ASSERT_EQ(det.size(), 6u);
  EXPECT_EQ(det.front().fmr, 100.0);
  EXPECT_EQ(det.front().fnmr, 0.0);
  EXPECT_EQ(det.back().fmr, 0.0);
  EXPECT_EQ(det.back().fnmr, 100.0);
  EXPECT_EQ(equal_error_rate(det), 0.0);
}

TEST(Det, SeparatedAndIdenticalSets) {
  Rng rng(14);
  std::vector<double> lo(50), hi(50);
  for (auto& x : lo) x = rng.uniform(0.0, 0.4);
  for (auto& x : hi) x = rng.uniform(0.6, 1.0);
  const auto sep = compute_det(score_set(ScoreKind::genuine, hi), score_set(ScoreKind::impostor, lo));
  EXPECT_TRUE(std::any_of(sep.begin(), sep.end(), [](const DetPoint& p) { return p.fmr == 0.0 && p.fnmr == 0.0; }));
  EXPECT_EQ(equal_error_rate(sep), 0.0);

  const auto same = compute_det(score_set(ScoreKind::genuine, lo), score_set(ScoreKind::impostor, lo));
  EXPECT_NEAR(equal_error_rate(same), 50.0, 1.0);
  for (const auto& p : same) EXPECT_NEAR(p.fmr + p.fnmr, 100.0, 1e-9);
}

TEST(Det, Monotone) {
  Rng rng(15);
  std::vector<double> g(120), i(300);
  for (auto& x : g) x = std::round(rng.uniform(0.2, 1.0) * 50) / 50;
  for (auto& x : i) x = std::round(rng.uniform(0.0, 0.7) * 50) / 50;
  const auto det = compute_det(score_set(ScoreKind::genuine, g), score_set(ScoreKind::impostor, i));
  for (std::size_t k = 1; k < det.size(); ++k) {
    EXPECT_GT(det[k].threshold, det[k - 1].threshold);
    EXPECT_LE(det[k].fmr, det[k - 1].fmr);
    EXPECT_GE(det[k].fnmr, det[k - 1].fnmr);
  }
  EXPECT_THROW(compute_det(ScoreSet{}, score_set(ScoreKind::impostor, i)), ProtocolError);
}

TEST(Evaluate, SingleFingerHasNoImpostors) {
  const auto m = manifest({1, 1, 4, 4, 4});
  TemplateStore store;
  for (const auto& r : m.records) store.put(r.key(), MinutiaTemplate{});
  EXPECT_THROW(evaluate(m, store, Matcher::minutiae, "optical"), ProtocolError);
}

TEST(Evaluate, ReportStructure) {
  const auto m = manifest({2, 2, 4, 4, 4});
  Rng rng(16);
  TemplateStore store;
  // Each finger has a base template; samples are perturbed copies of it.
  std::map<std::string, MinutiaTemplate> base;
  for (const auto& r : m.records) {
    auto [it, fresh] = base.try_emplace(r.finger_key());
    if (fresh)
      for (int k = 0; k < 25; ++k)
        it->second.minutiae.push_back({rng.uniform(10.0, 240.0), rng.uniform(10.0, 240.0), rng.uniform(0.0, 6.28),
                                       MinutiaKind::bifurcation, 0.5});
    auto t = it->second;
    const std::size_t drop = r.realness == Realness::real ? 2 : 10;
    for (std::size_t k = 0; k < drop; ++k) t.minutiae.erase(t.minutiae.begin() + static_cast<long>(rng.below(t.size())));
    store.put(r.key(), rigid_transform(t, rng.uniform(-0.2, 0.2), rng.uniform(-10, 10), rng.uniform(-10, 10)));
  }
  const auto res = evaluate(m, store, Matcher::minutiae, "optical");
  const auto& rep = res.report;
  EXPECT_EQ(rep.matcher, "minutiae");
  EXPECT_EQ(rep.counts.at("genuine"), 24u);
  EXPECT_EQ(rep.counts.at("impostor"), 96u);
  EXPECT_EQ(rep.counts.at("attack1_coop"), 24u);
  EXPECT_EQ(rep.counts.at("attack2_noncoop"), 64u);
  ASSERT_EQ(rep.rows.size(), 3u);
  int cells = 0;
  for (const auto& row : rep.rows) {
    EXPECT_LE(row.op.achieved_far, row.op.target_far);
    EXPECT_GE(row.op.frr_at_threshold, 0.0);
    for (const auto* block : {&row.attack1, &row.attack2})
      for (const auto& [mode, ci] : *block) {
        ++cells;
        EXPECT_GE(ci.point, 0.0);
        EXPECT_LE(ci.point, 100.0);
        EXPECT_LE(ci.lo, ci.point);
        EXPECT_GE(ci.hi, ci.point);
      }
  }
  EXPECT_EQ(cells, 12);
  EXPECT_EQ(rep.det.size(), 3u);
  EXPECT_EQ(rep.eer, equal_error_rate(rep.det.at("nom")));
  EXPECT_EQ(format_ci({93.15, 91.30, 95.44}), "93.15 (91.30,95.44)");
}
