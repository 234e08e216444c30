#pragma once

#include <cstdint>
#include <vector>

#include "mmcyto/image.hpp"

namespace mmcyto {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Maps fixed-frame (BF) pixel coordinates to moving-frame (FL) coordinates:
///
///   moving = (R(theta) * fixed + t) / scale
///
/// The translation is expressed in fixed-frame pixels and `scale` is the
/// number of fixed pixels per moving pixel (1.472 for the BF/FL scanner pair).
struct RigidTransform2D {
  double theta_rad = 0.0;
  double tx_px = 0.0;
  double ty_px = 0.0;
  double scale = 1.0;

  [[nodiscard]] Point2 apply(Point2 p) const noexcept;
  [[nodiscard]] RigidTransform2D inverse() const;

  /// Same mapping expressed for images box-downsampled by `factor` in both
  /// frames (pixel centers at factor*u + (factor-1)/2).
  [[nodiscard]] RigidTransform2D at_downsample(int factor) const;
  /// Inverse of at_downsample: full-resolution transform from a coarse one.
  [[nodiscard]] RigidTransform2D from_downsample(int factor) const;

  /// Precomposes a fixed-frame translation: result(u) = this(u + offset).
  [[nodiscard]] RigidTransform2D shifted_input(Point2 offset) const noexcept;
  /// Postcomposes a moving-frame translation: result(u) = this(u) - offset.
  [[nodiscard]] RigidTransform2D shifted_output(Point2 offset) const noexcept;

  void validate() const;

  friend bool operator==(const RigidTransform2D&, const RigidTransform2D&) = default;
};

/// theta wrapped into (-pi, pi].
double wrap_angle(double theta_rad) noexcept;
double deg_to_rad(double deg) noexcept;
double rad_to_deg(double rad) noexcept;

struct Resampled {
  Plane plane;
  /// 1 where the sample position fell inside the source, 0 where zero-filled.
  std::vector<std::uint8_t> valid;
};

/// Bilinear resampling: output pixel (x, y) takes the source value at
/// t.apply((x, y)). Samples outside the source are 0 and flagged invalid.
Resampled resample_rigid(const Plane& p, const RigidTransform2D& t, int out_h, int out_w);

}  // namespace mmcyto
