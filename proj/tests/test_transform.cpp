#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mmcyto/error.hpp"
#include "mmcyto/patch.hpp"
#include "mmcyto/transform.hpp"
#include "oracles.hpp"

using namespace mmcyto;

TEST(Resample, IdentityIsBitExact) {
  const Plane p = oracle::random_plane(21, 17, 4);
  const auto r = resample_rigid(p, {}, 21, 17);
  EXPECT_EQ(r.plane.pixels().size(), p.pixels().size());
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(r.plane.pixels()[i], p.pixels()[i]);
  for (auto v : r.valid) EXPECT_EQ(v, 1);
}

TEST(Resample, TranslationOnRamp) {
  Plane p(8, 12);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 12; ++x) p.at(y, x) = static_cast<float>(x);
  const auto r = resample_rigid(p, {0.0, 3.0, 0.0, 1.0}, 8, 12);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 12; ++x) {
      const bool inside = x + 3 <= 11;
      EXPECT_EQ(r.valid[y * 12 + x] != 0, inside);
      EXPECT_FLOAT_EQ(r.plane.at(y, x), inside ? static_cast<float>(x + 3) : 0.0F);
    }
  }
}

TEST(Resample, QuarterTurnIsIndexPermutation) {
  const Plane p = oracle::random_plane(5, 5, 8);
  // Output (x, y) samples source (-y, x) + (4, 0) = (4 - y, x).
  const RigidTransform2D t{std::numbers::pi / 2, 4.0, 0.0, 1.0};
  const auto r = resample_rigid(p, t, 5, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) EXPECT_FLOAT_EQ(r.plane.at(y, x), p.at(x, 4 - y)) << x << "," << y;
}

TEST(Resample, RoundTripRecoversSmoothInterior) {
  Plane p(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) p.at(y, x) = static_cast<float>(0.5 + 0.4 * std::sin(x / 7.0) * std::cos(y / 9.0));
  const RigidTransform2D t{0.3, 5.5, -2.25, 1.0};
  const auto fwd = resample_rigid(p, t, 64, 64);
  const auto back = resample_rigid(fwd.plane, t.inverse(), 64, 64);
  for (int y = 20; y < 44; ++y)
    for (int x = 20; x < 44; ++x) EXPECT_NEAR(back.plane.at(y, x), p.at(y, x), 2e-2);
}

TEST(Resample, RejectsEmptyShape) {
  try {
    (void)resample_rigid(Plane(4, 4), {}, 0, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyOutput);
  }
}

TEST(Transform, InverseComposesToIdentity) {
  const RigidTransform2D t{deg_to_rad(17.0), 31.0, -12.5, 1.472};
  const auto inv = t.inverse();
  for (const Point2 p : {Point2{0, 0}, Point2{100, 3}, Point2{-20, 512}}) {
    const Point2 q = inv.apply(t.apply(p));
    EXPECT_NEAR(q.x, p.x, 1e-9);
    EXPECT_NEAR(q.y, p.y, 1e-9);
  }
}

TEST(Transform, DownsampleRoundTrip) {
  const RigidTransform2D t{0.2, 40.0, -9.0, 1.472};
  const auto c = t.at_downsample(4);
  const auto back = c.from_downsample(4);
  EXPECT_NEAR(back.theta_rad, t.theta_rad, 1e-12);
  EXPECT_NEAR(back.tx_px, t.tx_px, 1e-9);
  EXPECT_NEAR(back.ty_px, t.ty_px, 1e-9);
  // A coarse pixel center maps where its full-resolution center maps.
  const Point2 u{10, 7};
  const Point2 mc = c.apply(u);
  const Point2 mf = t.apply({4 * u.x + 1.5, 4 * u.y + 1.5});
  EXPECT_NEAR(4 * mc.x + 1.5, mf.x, 1e-9);
  EXPECT_NEAR(4 * mc.y + 1.5, mf.y, 1e-9);
}

TEST(Transform, WrapAngle) {
  EXPECT_NEAR(wrap_angle(3 * std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(wrap_angle(-std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(wrap_angle(0.25), 0.25, 1e-15);
}

TEST(MapToMoving, IdentityAndTranslation) {
  const Point2 p{123.0, 45.0};
  EXPECT_EQ(map_to_moving(p, {}), p);
  const Point2 q = map_to_moving(p, {0.0, 10.0, 0.0, 1.0});
  EXPECT_DOUBLE_EQ(q.x, 133.0);
  EXPECT_DOUBLE_EQ(q.y, 45.0);
}

TEST(MapToMoving, QuarterTurnWithScale) {
  const Point2 q = map_to_moving({100.0, 0.0}, {std::numbers::pi / 2, 0.0, 0.0, 1.472});
  // R(90) (100, 0) = (0, 100), then divided by the scale.
  EXPECT_NEAR(q.x, 0.0, 1e-9);
  EXPECT_NEAR(q.y, 100.0 / 1.472, 1e-9);
}

TEST(MapToMoving, BoundsCheck) {
  try {
    (void)map_to_moving({10.0, 10.0}, {0.0, -20.0, 0.0, 1.0}, 100, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfMovingBounds);
  }
  EXPECT_NO_THROW((void)map_to_moving({10.0, 10.0}, {}, 100, 100));
}
