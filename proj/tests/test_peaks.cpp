#include <gtest/gtest.h>

#include <cmath>

#include "mmcyto/error.hpp"
#include "mmcyto/peaks.hpp"
#include "mmcyto/phantom.hpp"

using namespace mmcyto;

namespace {

void add_bump(Plane& p, double cx, double cy, double peak, double sigma = 2.0) {
  for (int y = 0; y < p.height(); ++y)
    for (int x = 0; x < p.width(); ++x)
      p.at(y, x) += static_cast<float>(peak * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * sigma * sigma)));
}

// Every strict 8-neighborhood maximum above t, by exhaustive scan.
int count_maxima(const Plane& p, double t) {
  int n = 0;
  for (int y = 0; y < p.height(); ++y)
    for (int x = 0; x < p.width(); ++x) {
      if (!(p.at(y, x) > t)) continue;
      bool ok = true;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if ((dy || dx) && yy >= 0 && xx >= 0 && yy < p.height() && xx < p.width() && p.at(yy, xx) >= p.at(y, x)) ok = false;
        }
      n += ok;
    }
  return n;
}

Plane disk(int n, double r, double cx, double cy) {
  Plane p(n, n, 1.0F);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      if (std::hypot(x - cx, y - cy) <= r) p.at(y, x) = 0.2F;
  return p;
}

}  // namespace

TEST(Peaks, SingleBumpAtArgmaxTimesFour) {
  Plane h(40, 50);
  add_bump(h, 21, 13, 0.9);
  const auto r = detect_peaks(h);
  ASSERT_EQ(r.size(), 1U);
  EXPECT_EQ(r[0].x_px, 84.0);
  EXPECT_EQ(r[0].y_px, 52.0);
  EXPECT_NEAR(r[0].score, 0.9, 1e-6);
}

TEST(Peaks, BelowThresholdNeverDetected) {
  Plane h(40, 40);
  add_bump(h, 20, 20, 0.4);
  EXPECT_TRUE(detect_peaks(h).empty());
  Plane e(40, 40);
  add_bump(e, 20, 20, 0.5);
  EXPECT_TRUE(detect_peaks(e).empty());
}

TEST(Peaks, SuppressionDistance) {
  Plane h(40, 60);
  add_bump(h, 20, 20, 0.9);
  add_bump(h, 30, 20, 0.8);
  PeakConfig c;
  c.min_distance = 4;
  EXPECT_EQ(detect_peaks(h, c).size(), 2U);
  EXPECT_EQ(static_cast<int>(detect_peaks(h, c).size()), count_maxima(h, 0.5));
  c.min_distance = 16;
  const auto one = detect_peaks(h, c);
  ASSERT_EQ(one.size(), 1U);
  EXPECT_EQ(one[0].x_px, 80.0);
}

TEST(Peaks, CountMonotoneInThresholdAndDistance) {
  Plane h(64, 64);
  for (int i = 0; i < 12; ++i) add_bump(h, 5 + 5 * i, 8 + (i * 37) % 50, 0.52 + 0.04 * i, 1.5);
  std::size_t prev = 1000;
  for (double t = 0.05; t <= 1.0; t += 0.05) {
    PeakConfig c;
    c.threshold = t;
    const auto n = detect_peaks(h, c).size();
    EXPECT_LE(n, prev);
    EXPECT_EQ(static_cast<int>(detect_peaks(h, {t, 1.0}).size()), count_maxima(h, t));
    prev = n;
  }
  prev = 1000;
  for (double d = 1.0; d <= 40.0; d += 1.0) {
    const auto n = detect_peaks(h, {0.5, d}).size();
    EXPECT_LE(n, prev);
    prev = n;
  }
}

TEST(Peaks, RejectsBadConfig) {
  EXPECT_THROW((void)detect_peaks(Plane(4, 4), {0.0, 4.0}), Error);
  EXPECT_THROW((void)detect_peaks(Plane(4, 4), {0.5, 0.5}), Error);
}

TEST(MergeZ, SameCoordinateTwoLevels) {
  const std::vector<std::vector<NucleusRecord>> l{{{"s", 100, 100, 0.7, 0}}, {{"s", 102, 101, 0.9, 1}}};
  const auto m = merge_across_z(l, 8.0);
  ASSERT_EQ(m.size(), 1U);
  EXPECT_EQ(m[0].source_z, 1);
  EXPECT_EQ(m[0].score, 0.9);
}

TEST(MergeZ, KeepsSingleLevelDetections) {
  const std::vector<std::vector<NucleusRecord>> l{{}, {{"s", 10, 10, 0.6, 1}}, {{"s", 300, 40, 0.55, 2}}};
  EXPECT_EQ(merge_across_z(l, 8.0).size(), 2U);
}

TEST(MergeZ, FarApartStaySeparate) {
  const std::vector<std::vector<NucleusRecord>> l{{{"s", 0, 0, 0.7, 0}}, {{"s", 50, 0, 0.7, 1}}};
  EXPECT_EQ(merge_across_z(l, 8.0).size(), 2U);
}

TEST(MergeZ, ZeroRadiusIsDedupedUnionAndIdempotent) {
  const NucleusRecord a{"s", 5, 5, 0.8, 0}, b{"s", 5, 5, 0.8, 0}, c{"s", 6, 5, 0.7, 1};
  const auto m = merge_across_z({{a, c}, {b}}, 0.0);
  EXPECT_EQ(m, (std::vector<NucleusRecord>{a, c}));
  EXPECT_EQ(merge_across_z({m}, 0.0), m);
  const auto r8 = merge_across_z({{a, c}, {b}}, 8.0);
  EXPECT_EQ(merge_across_z({r8}, 8.0), r8);
}

TEST(BlobDetector, BlankPlaneIsZero) {
  const Plane r = baseline_blob_detector(Plane(32, 32, 0.8F), 2.0);
  for (float v : r.pixels()) EXPECT_EQ(v, 0.0F);
  EXPECT_THROW((void)baseline_blob_detector(Plane(8, 8), 0.0), Error);
}

TEST(BlobDetector, ResponsePeaksNearRadiusOverRootTwo) {
  const double r = 6.0;
  const Plane p = disk(81, r, 40, 40);
  double best = -1, best_sigma = 0;
  for (double s = 1.0; s <= 10.0; s += 0.25) {
    const double v = dog_response(p, s).at(40, 40);
    if (v > best) {
      best = v;
      best_sigma = s;
    }
  }
  EXPECT_NEAR(best_sigma, r / std::sqrt(2.0), 1.0);
}

TEST(BlobDetector, FindsPhantomNuclei) {
  PhantomSpec s;
  s.n_nuclei = 20;
  s.bf_levels = 1;
  s.fl_levels = 1;
  const auto ph = synth_phantom(11, s);
  const auto& img = ph.bf.levels[0];
  Plane mean(img.height(), img.width());
  for (const auto& c : img.channels)
    for (std::size_t k = 0; k < mean.size(); ++k) mean.pixels()[k] += c.pixels()[k] / 3.0F;
  const auto found = detect_peaks(baseline_blob_detector(downsample_box(mean, 4), 7.0 / 4));
  int hit = 0, total = 0;
  for (const auto& n : ph.truth.nuclei) {
    ++total;
    for (const auto& f : found) {
      // Peak coordinates name the top-left of a 4x4 block.
      if (std::hypot(f.x_px + 1.5 - n.x_px, f.y_px + 1.5 - n.y_px) <= 4.0) {
        ++hit;
        break;
      }
    }
  }
  EXPECT_EQ(total, 20);
  EXPECT_GE(hit * 20, total * 19) << hit << "/" << total;
}
