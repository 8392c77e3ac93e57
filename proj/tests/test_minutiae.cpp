#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "fpvuln/minutiae.hpp"
#include "fpvuln/synthdb.hpp"
#include "test_support.hpp"

using namespace fpvuln;
using fpvuln::test::full_mask;

namespace {

struct Segment {
  double x0, y0, x1, y1;
};

double distance_to_segment(double px, double py, const Segment& s) {
  const double vx = s.x1 - s.x0, vy = s.y1 - s.y0;
  const double t = std::clamp(((px - s.x0) * vx + (py - s.y0) * vy) / (vx * vx + vy * vy), 0.0, 1.0);
  return std::hypot(px - (s.x0 + t * vx), py - (s.y0 + t * vy));
}

// Dark ridges of the given half-width on a light background.
FingerprintImage draw_ridges(int w, int h, const std::vector<Segment>& segs, double half_width = 2.0) {
  Plane p(w, h, 200.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (const auto& s : segs)
        if (distance_to_segment(x, y, s) <= half_width) p(x, y) = 60.0;
  return to_image(p);
}

MinutiaTemplate random_template(Rng& rng, int n = 20) {
  MinutiaTemplate t;
  t.width = t.height = 256;
  std::set<std::pair<long, long>> used;
  while (static_cast<int>(t.size()) < n) {
    Minutia m;
    m.x = rng.uniform(10.0, 246.0);
    m.y = rng.uniform(10.0, 246.0);
    if (!used.emplace(std::lround(m.x * 1000), std::lround(m.y * 1000)).second) continue;
    m.theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    m.kind = rng.uniform() < 0.5 ? MinutiaKind::termination : MinutiaKind::bifurcation;
    m.quality = rng.uniform();
    t.minutiae.push_back(m);
  }
  return t;
}

} // namespace

TEST(Extraction, BlankImageIsEmpty) {
  const auto img = FingerprintImage(128, 128, 180);
  EXPECT_TRUE(extract_minutiae(img, full_mask(128, 128)).empty());
  EXPECT_TRUE(minutiae_from_image(img).empty());
}

TEST(Extraction, SingleRidgeEnding) {
  const double px = 120.0, py = 96.0;
  const auto img = draw_ridges(192, 192, {{0.0, py, px, py}});
  const auto t = extract_minutiae(img, full_mask(192, 192));
  ASSERT_EQ(t.size(), 1u);
  const auto& m = t.minutiae[0];
  EXPECT_EQ(m.kind, MinutiaKind::termination);
  EXPECT_LE(std::hypot(m.x - px, m.y - py), 5.0);
  // The ridge runs away from the ending towards -x.
  EXPECT_LE(direction_distance(m.theta, std::numbers::pi), 0.3);
}

TEST(Extraction, YShapedFork) {
  const double bx = 100.0, by = 96.0;
  const double a = 25.0 * std::numbers::pi / 180.0;
  const auto img = draw_ridges(192, 192,
                               {{0.0, by, bx, by},
                                {bx, by, 191.0, by - 91.0 * std::tan(a)},
                                {bx, by, 191.0, by + 91.0 * std::tan(a)}});
  const auto t = extract_minutiae(img, full_mask(192, 192));
  int forks = 0;
  for (const auto& m : t.minutiae)
    if (m.kind == MinutiaKind::bifurcation) {
      ++forks;
      EXPECT_LE(std::hypot(m.x - bx, m.y - by), 5.0);
      // Direction points into the fork, somewhere between the two branches.
      EXPECT_LE(direction_distance(m.theta, 0.0), a);
    }
  EXPECT_EQ(forks, 1);
}

TEST(Extraction, InvariantsOnSyntheticFingers) {
  for (int s = 0; s < 4; ++s) {
    const auto img = generate_fingerprint(finger_params(40 + s, 0, 0, 256, 256), 256, 256);
    const auto t = minutiae_from_image(img);
    EXPECT_GT(t.size(), 5u);
    std::set<std::pair<double, double>> seen;
    for (const auto& m : t.minutiae) {
      EXPECT_GE(m.x, 0.0);
      EXPECT_LT(m.x, 256.0);
      EXPECT_GE(m.y, 0.0);
      EXPECT_LT(m.y, 256.0);
      EXPECT_GE(m.theta, 0.0);
      EXPECT_LT(m.theta, 2.0 * std::numbers::pi);
      EXPECT_GE(m.quality, 0.0);
      EXPECT_LE(m.quality, 1.0);
      EXPECT_TRUE(seen.emplace(m.x, m.y).second);
    }
    EXPECT_EQ(minutiae_from_image(img), t);
  }
}

TEST(Binarization, ThinningGivesOnePixelSkeleton) {
  const auto img = draw_ridges(96, 96, {{0.0, 48.0, 95.0, 48.0}}, 3.0);
  const auto skel = thin(binarize(img, full_mask(96, 96)));
  for (int x = 10; x < 86; ++x) {
    int on = 0;
    for (int y = 0; y < 96; ++y) on += skel.get(x, y);
    EXPECT_EQ(on, 1) << "column " << x;
  }
}

TEST(RigidTransform, IdentityLeavesTemplateUnchanged) {
  Rng rng(1);
  const auto t = random_template(rng);
  const auto r = rigid_transform(t, 0.0, 0.0, 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_NEAR(r.minutiae[i].x, t.minutiae[i].x, 1e-9);
    EXPECT_NEAR(r.minutiae[i].y, t.minutiae[i].y, 1e-9);
    EXPECT_EQ(r.minutiae[i].theta, t.minutiae[i].theta);
    EXPECT_EQ(r.minutiae[i].kind, t.minutiae[i].kind);
  }
}

TEST(RigidTransform, HalfTurnTwiceRestores) {
  Rng rng(2);
  const auto t = random_template(rng);
  const auto back = rigid_transform(rigid_transform(t, std::numbers::pi, 0.0, 0.0), std::numbers::pi, 0.0, 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_NEAR(back.minutiae[i].x, t.minutiae[i].x, 1e-9);
    EXPECT_NEAR(back.minutiae[i].y, t.minutiae[i].y, 1e-9);
    EXPECT_LE(direction_distance(back.minutiae[i].theta, t.minutiae[i].theta), 1e-9);
  }
}

TEST(RigidTransform, CentroidIsFixed) {
  MinutiaTemplate t;
  t.minutiae.push_back({50.0, 60.0, 0.4, MinutiaKind::termination, 0.5});
  const auto r = rigid_transform(t, 1.1, 0.0, 0.0);
  EXPECT_NEAR(r.minutiae[0].x, 50.0, 1e-12);
  EXPECT_NEAR(r.minutiae[0].y, 60.0, 1e-12);
  EXPECT_NEAR(r.minutiae[0].theta, 1.5, 1e-12);
}

TEST(MinutiaeMatch, SelfMatchIsOne) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto t = random_template(rng, 5 + i);
    EXPECT_EQ(match_minutiae(t, t), 1.0);
  }
}

TEST(MinutiaeMatch, EmptyTemplateScoresZero) {
  Rng rng(4);
  const auto t = random_template(rng);
  EXPECT_EQ(match_minutiae(t, MinutiaTemplate{}), 0.0);
  EXPECT_EQ(match_minutiae(MinutiaTemplate{}, t), 0.0);
  EXPECT_EQ(match_minutiae(MinutiaTemplate{}, MinutiaTemplate{}), 0.0);
}

TEST(MinutiaeMatch, RotationAndTranslationInvariant) {
  Rng rng(5);
  const auto t = random_template(rng);
  const auto moved = rigid_transform(t, 37.0 * std::numbers::pi / 180.0, 40.0, -25.0);
  EXPECT_NEAR(match_minutiae(t, moved), match_minutiae(t, t), 1e-6);
}

TEST(MinutiaeMatch, SymmetricAndBounded) {
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_template(rng, 10 + static_cast<int>(rng.below(15)));
    auto b = random_template(rng, 10 + static_cast<int>(rng.below(15)));
    // Share part of the geometry so the scores are not all zero.
    if (i % 2 == 0)
      for (std::size_t k = 0; k < std::min(a.size(), b.size()) / 2; ++k) b.minutiae[k] = a.minutiae[k];
    const double ab = match_minutiae(a, b), ba = match_minutiae(b, a);
    EXPECT_EQ(ab, ba);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(MinutiaeMatch, SubsetScoreUsesLargerTemplate) {
  Rng rng(7);
  const auto a = random_template(rng, 20);
  MinutiaTemplate b = a;
  b.minutiae.resize(10);
  // Every minutia of the smaller template pairs; 10 of 20 overall.
  EXPECT_NEAR(match_minutiae(a, b), 0.5, 1e-12);
}

TEST(MinutiaeMatch, GenuineAboveImpostorOnSyntheticFingers) {
  const auto p1 = finger_params(77, 0, 0, 256, 256), p2 = finger_params(77, 1, 0, 256, 256);
  const auto m1 = build_master(p1, 256, 256), m2 = build_master(p2, 256, 256);
  const auto a = minutiae_from_image(impression(m1, p1, 1));
  const auto b = minutiae_from_image(impression(m1, p1, 2));
  const auto c = minutiae_from_image(impression(m2, p2, 1));
  EXPECT_GT(match_minutiae(a, b), match_minutiae(a, c));
}

TEST(MinutiaeFormat, TextLayout) {
  MinutiaTemplate t;
  t.width = 256;
  t.height = 200;
  t.minutiae.push_back({10.0, 20.5, std::numbers::pi / 2, MinutiaKind::termination, 0.25});
  t.minutiae.push_back({30.0, 40.0, std::numbers::pi, MinutiaKind::bifurcation, 1.0});
  EXPECT_EQ(encode_minutiae(t), "MINUTIAE v1 2 256 200\n"
                                "10.000000 20.500000 90.000000 termination 0.250000\n"
                                "30.000000 40.000000 180.000000 bifurcation 1.000000\n");
  const auto back = decode_minutiae(encode_minutiae(t));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.width, 256);
  EXPECT_NEAR(back.minutiae[0].theta, std::numbers::pi / 2, 1e-9);
  EXPECT_EQ(back.minutiae[1].kind, MinutiaKind::bifurcation);
}

TEST(MinutiaeFormat, RejectsMalformedText) {
  EXPECT_THROW(decode_minutiae("MINUTIAE v2 0 1 1\n"), FormatError);
  EXPECT_THROW(decode_minutiae("MINUTIAE v1 2 10 10\n1 2 3 termination 0.5\n"), FormatError);
  EXPECT_THROW(decode_minutiae("MINUTIAE v1 1 10 10\n1 2 3 loop 0.5\n"), FormatError);
}
