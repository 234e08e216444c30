#include "mmcyto/transform.hpp"

#include <cmath>
#include <numbers>

#include "mmcyto/error.hpp"

namespace mmcyto {

namespace {

// Coordinates within this distance of an integer are snapped to it, so that
// rotations by multiples of 90 degrees hit pixel centers exactly.
constexpr double kSnap = 1e-9;

inline double snap(double v) noexcept {
  const double r = std::round(v);
  return std::abs(v - r) < kSnap ? r : v;
}

}  // namespace

double wrap_angle(double theta_rad) noexcept {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double t = std::fmod(theta_rad, two_pi);
  if (t <= -std::numbers::pi) t += two_pi;
  if (t > std::numbers::pi) t -= two_pi;
  return t;
}

double deg_to_rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

Point2 RigidTransform2D::apply(Point2 p) const noexcept {
  const double c = std::cos(theta_rad);
  const double s = std::sin(theta_rad);
  return {(c * p.x - s * p.y + tx_px) / scale, (s * p.x + c * p.y + ty_px) / scale};
}

RigidTransform2D RigidTransform2D::inverse() const {
  validate();
  // fixed = R(-theta) * (scale * moving - t)  ==  (R(-theta) m + t') / (1/scale)
  const double c = std::cos(-theta_rad);
  const double s = std::sin(-theta_rad);
  RigidTransform2D inv;
  inv.theta_rad = wrap_angle(-theta_rad);
  inv.scale = 1.0 / scale;
  inv.tx_px = -(c * tx_px - s * ty_px) / scale;
  inv.ty_px = -(s * tx_px + c * ty_px) / scale;
  return inv;
}

RigidTransform2D RigidTransform2D::at_downsample(int factor) const {
  if (factor < 1) throw Error(ErrorCode::InvalidArgument, "downsample factor must be >= 1");
  const double k = factor;
  const double off = (k - 1.0) / 2.0;
  const double c = std::cos(theta_rad);
  const double s = std::sin(theta_rad);
  RigidTransform2D out = *this;
  out.tx_px = ((c - s) * off + tx_px - scale * off) / k;
  out.ty_px = ((s + c) * off + ty_px - scale * off) / k;
  return out;
}

RigidTransform2D RigidTransform2D::from_downsample(int factor) const {
  if (factor < 1) throw Error(ErrorCode::InvalidArgument, "downsample factor must be >= 1");
  const double k = factor;
  const double off = (k - 1.0) / 2.0;
  const double c = std::cos(theta_rad);
  const double s = std::sin(theta_rad);
  RigidTransform2D out = *this;
  out.tx_px = k * tx_px - (c - s) * off + scale * off;
  out.ty_px = k * ty_px - (s + c) * off + scale * off;
  return out;
}

RigidTransform2D RigidTransform2D::shifted_input(Point2 offset) const noexcept {
  const double c = std::cos(theta_rad);
  const double s = std::sin(theta_rad);
  RigidTransform2D out = *this;
  out.tx_px += c * offset.x - s * offset.y;
  out.ty_px += s * offset.x + c * offset.y;
  return out;
}

RigidTransform2D RigidTransform2D::shifted_output(Point2 offset) const noexcept {
  RigidTransform2D out = *this;
  out.tx_px -= scale * offset.x;
  out.ty_px -= scale * offset.y;
  return out;
}

void RigidTransform2D::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::InvalidArgument, "transform scale must be > 0");
  }
  if (!std::isfinite(theta_rad) || !std::isfinite(tx_px) || !std::isfinite(ty_px)) {
    throw Error(ErrorCode::InvalidArgument, "transform parameters must be finite");
  }
}

Resampled resample_rigid(const Plane& p, const RigidTransform2D& t, int out_h, int out_w) {
  t.validate();
  if (out_h <= 0 || out_w <= 0) {
    throw Error(ErrorCode::EmptyOutput, "resample_rigid: output shape must be positive");
  }
  // Output lives in the fixed grid: one output pixel spans 1/scale source pixels.
  Resampled r{Plane(out_h, out_w, 0.0F, p.pixel_size_um() / t.scale),
              std::vector<std::uint8_t>(static_cast<std::size_t>(out_h) * out_w, 0)};
  if (p.empty()) return r;

  const double c = std::cos(t.theta_rad) / t.scale;
  const double s = std::sin(t.theta_rad) / t.scale;
  const double ox = t.tx_px / t.scale;
  const double oy = t.ty_px / t.scale;
  const int h = p.height();
  const int w = p.width();

  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const double sx = snap(c * x - s * y + ox);
      const double sy = snap(s * x + c * y + oy);
      if (!(sx >= 0.0 && sy >= 0.0 && sx <= w - 1 && sy <= h - 1)) continue;
      const int x0 = static_cast<int>(sx);
      const int y0 = static_cast<int>(sy);
      const double fx = sx - x0;
      const double fy = sy - y0;
      const int x1 = fx > 0.0 ? x0 + 1 : x0;
      const int y1 = fy > 0.0 ? y0 + 1 : y0;
      double v;
      if (fx == 0.0 && fy == 0.0) {
        v = p.at(y0, x0);
      } else {
        v = (1.0 - fy) * ((1.0 - fx) * p.at(y0, x0) + fx * p.at(y0, x1)) +
            fy * ((1.0 - fx) * p.at(y1, x0) + fx * p.at(y1, x1));
      }
      const auto idx = static_cast<std::size_t>(y) * out_w + x;
      r.plane.pixels()[idx] = static_cast<float>(v);
      r.valid[idx] = 1;
    }
  }
  return r;
}

}  // namespace mmcyto
