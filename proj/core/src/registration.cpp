#include <algorithm>
#include <cmath>

#include "mmcyto/cmif.hpp"
#include "mmcyto/error.hpp"

namespace mmcyto {

namespace {

// Moving image resampled into the fixed frame for a given rotation, on a
// canvas just large enough to hold its footprint. canvas(u) corresponds to
// fixed-frame position u + origin.
struct Canvas {
  Plane plane;
  std::vector<std::uint8_t> valid;
  Offset origin;
};

struct Footprint {
  Offset origin;
  int height = 0;
  int width = 0;
};

// Integer bounding box of the moving image's pixel centers in the fixed frame.
Footprint footprint(const Plane& moving, double theta, double scale) {
  const RigidTransform2D inv = RigidTransform2D{theta, 0.0, 0.0, scale}.inverse();
  const double w = moving.width() - 1;
  const double h = moving.height() - 1;
  double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
  for (const Point2 m : {Point2{0, 0}, Point2{w, 0}, Point2{0, h}, Point2{w, h}}) {
    const Point2 f = inv.apply(m);
    min_x = std::min(min_x, f.x);
    min_y = std::min(min_y, f.y);
    max_x = std::max(max_x, f.x);
    max_y = std::max(max_y, f.y);
  }
  Footprint fp;
  fp.origin = {static_cast<int>(std::floor(min_y)), static_cast<int>(std::floor(min_x))};
  fp.height = static_cast<int>(std::ceil(max_y)) - fp.origin.dy + 1;
  fp.width = static_cast<int>(std::ceil(max_x)) - fp.origin.dx + 1;
  return fp;
}

Canvas moving_canvas(const Plane& moving, double theta, double scale) {
  const Footprint fp = footprint(moving, theta, scale);
  const RigidTransform2D rot{theta, 0.0, 0.0, scale};
  auto r = resample_rigid(
      moving,
      rot.shifted_input({static_cast<double>(fp.origin.dx), static_cast<double>(fp.origin.dy)}),
      fp.height, fp.width);
  return {std::move(r.plane), std::move(r.valid), fp.origin};
}

Point2 rotate(double theta, Point2 p) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

struct Best {
  double theta = 0.0;
  double tx = 0.0;
  double ty = 0.0;
  double mi = -std::numeric_limits<double>::infinity();
  bool found = false;
  // Sub-pixel optimum in the rotated frame, R(-theta) t.
  double ux = 0.0;
  double uy = 0.0;
};

// Vertex of the parabola through (-1, a), (0, b), (1, c); 0 if not a peak.
double parabola_vertex(double a, double b, double c) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) return 0.0;
  const double den = a - 2.0 * b + c;
  if (!(den < 0.0)) return 0.0;
  return std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
}

struct LevelData {
  Plane fixed;
  Plane moving;
  LabelPlane fixed_labels;
  QuantizationEdges moving_edges;
  std::int64_t min_overlap = 0;
};

// Scores one angle at one level; offsets restricted to `window` (in canvas
// offset coordinates) or, when `window` is empty, to every offset with a
// possible overlap.
void score_angle(const LevelData& lv, double theta, double scale, int max_shift,
                 const OffsetWindow* local, bool use_fft, Best& best) {
  const Canvas canvas = moving_canvas(lv.moving, theta, scale);
  const LabelPlane labels = apply_edges(canvas.plane, canvas.valid, lv.moving_edges);
  if (labels.degenerate) return;

  OffsetWindow w;
  if (local != nullptr) {
    w = *local;
  } else {
    w = {-(lv.fixed.height() - 1), canvas.plane.height() - 1, -(lv.fixed.width() - 1),
         canvas.plane.width() - 1};
  }
  if (max_shift >= 0) {
    w.dy_min = std::max(w.dy_min, -max_shift - canvas.origin.dy);
    w.dy_max = std::min(w.dy_max, max_shift - canvas.origin.dy);
    w.dx_min = std::max(w.dx_min, -max_shift - canvas.origin.dx);
    w.dx_max = std::min(w.dx_max, max_shift - canvas.origin.dx);
  }
  if (w.empty()) return;

  const MISurface s = use_fft ? mi_surface(lv.fixed_labels, labels, w, lv.min_overlap)
                              : mi_surface_direct(lv.fixed_labels, labels, w, lv.min_overlap);
  if (!s.any_admissible) return;
  const double tol = 1e-12 * std::max(1.0, std::abs(best.mi));
  if (best.found && !(s.best_mi > best.mi + tol)) return;
  const Offset o = s.best_offset;
  auto at = [&](int dy, int dx) {
    const Offset q{o.dy + dy, o.dx + dx};
    return s.window.contains(q) ? s.mi_at(q) : -std::numeric_limits<double>::infinity();
  };
  const Point2 t = rotate(theta, {static_cast<double>(o.dx + canvas.origin.dx),
                                  static_cast<double>(o.dy + canvas.origin.dy)});
  best = {theta, t.x, t.y, s.best_mi, true,
          o.dx + canvas.origin.dx + parabola_vertex(at(0, -1), s.best_mi, at(0, 1)),
          o.dy + canvas.origin.dy + parabola_vertex(at(-1, 0), s.best_mi, at(1, 0))};
}

// Canvas-offset window centered on where translation `t_at_ref` (found at
// angle `theta_ref`) predicts the optimum for angle `theta`, keeping the
// image of the fixed-plane center unchanged.
OffsetWindow predicted_window(const LevelData& lv, double theta_ref, Point2 t_ref, double theta,
                              double scale, int radius) {
  const Point2 c{(lv.fixed.width() - 1) / 2.0, (lv.fixed.height() - 1) / 2.0};
  const Point2 rc_ref = rotate(theta_ref, c);
  const Point2 rc = rotate(theta, c);
  const Point2 t{t_ref.x + rc_ref.x - rc.x, t_ref.y + rc_ref.y - rc.y};
  const Point2 u = rotate(-theta, t);
  const Offset origin = footprint(lv.moving, theta, scale).origin;
  const Offset centre{static_cast<int>(std::lround(u.y)) - origin.dy,
                      static_cast<int>(std::lround(u.x)) - origin.dx};
  return OffsetWindow::around(centre, radius);
}

std::vector<double> angle_range(double center_deg, double span_deg, double step_deg) {
  std::vector<double> out;
  const int n = static_cast<int>(std::floor(span_deg / step_deg + 1e-9));
  for (int k = -n; k <= n; ++k) out.push_back(center_deg + k * step_deg);
  return out;
}

// Interpolates the optimum between grid angles and pixels. `sweep` holds the
// best result per angle in increasing angle order; the centre of the fixed
// plane keeps its image when the angle moves off the grid.
Best polish(const std::vector<Best>& sweep, const Plane& fixed, double step_rad) {
  std::size_t i = 0;
  for (std::size_t k = 1; k < sweep.size(); ++k) {
    if (sweep[k].found && (!sweep[i].found || sweep[k].mi > sweep[i].mi + 1e-12 * std::max(1.0, std::abs(sweep[i].mi)))) i = k;
  }
  Best b = sweep[i];
  const double d = i > 0 && i + 1 < sweep.size() && sweep[i - 1].found && sweep[i + 1].found
                       ? parabola_vertex(sweep[i - 1].mi, b.mi, sweep[i + 1].mi)
                       : 0.0;
  const Point2 c{(fixed.width() - 1) / 2.0, (fixed.height() - 1) / 2.0};
  const Point2 t = rotate(b.theta, {b.ux, b.uy});
  const double theta = wrap_angle(b.theta + d * step_rad);
  const Point2 rc_b = rotate(b.theta, c);
  const Point2 rc = rotate(theta, c);
  b.theta = theta;
  b.tx = t.x + rc_b.x - rc.x;
  b.ty = t.y + rc_b.y - rc.y;
  return b;
}

bool is_constant(const Plane& p) {
  const auto px = p.pixels();
  return std::all_of(px.begin(), px.end(), [&](float v) { return v == px.front(); });
}

}  // namespace

std::vector<double> GlobalRegistrationConfig::effective_angle_grid() const {
  if (!angle_grid_deg.empty()) return angle_grid_deg;
  std::vector<double> grid;
  const int n = static_cast<int>(std::round(360.0 / coarse_step_deg));
  for (int k = 0; k < n; ++k) grid.push_back(180.0 - (n - 1 - k) * coarse_step_deg);
  return grid;
}

GlobalRegistrationResult register_rigid_global(const Plane& fixed, const Plane& moving,
                                               const GlobalRegistrationConfig& cfg) {
  if (fixed.empty() || moving.empty()) {
    throw Error(ErrorCode::InvalidArgument, "register_rigid_global: empty plane");
  }
  if (!(cfg.scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "register_rigid_global: scale must be > 0");
  if (!(cfg.coarse_step_deg > 0.0) || !(cfg.fine_step_deg > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "register_rigid_global: angle steps must be > 0");
  }
  if (is_constant(fixed) || is_constant(moving)) {
    throw Error(ErrorCode::DegenerateInput, "register_rigid_global: constant projection");
  }

  int levels = cfg.pyramid_levels;
  if (levels < 0) {
    levels = 0;
    int side = std::max(fixed.height(), fixed.width());
    while (side > cfg.coarse_max_side && std::min(moving.height(), moving.width()) >> (levels + 1) >= 16) {
      side /= 2;
      ++levels;
    }
  }

  std::vector<LevelData> pyramid(static_cast<std::size_t>(levels) + 1);
  for (int l = 0; l <= levels; ++l) {
    auto& lv = pyramid[static_cast<std::size_t>(l)];
    lv.fixed = l == 0 ? fixed : downsample_box(pyramid[static_cast<std::size_t>(l) - 1].fixed, 2);
    lv.moving = l == 0 ? moving : downsample_box(pyramid[static_cast<std::size_t>(l) - 1].moving, 2);
    lv.fixed_labels = quantize_equal_count(lv.fixed, cfg.levels);
    lv.moving_edges = equal_count_edges(lv.moving, {}, cfg.levels);
    lv.min_overlap = static_cast<std::int64_t>(
        std::ceil(cfg.min_overlap_frac * lv.fixed.height() * lv.fixed.width()));
  }
  auto shift_at = [&](int l) { return cfg.max_shift_px < 0 ? -1 : cfg.max_shift_px >> l; };

  // Coarse search over the full angle grid at the top level.
  const auto& top = pyramid.back();
  LevelData screen;
  if (levels > 0 && cfg.coarse_levels > 0 && cfg.coarse_levels != cfg.levels) {
    screen.fixed = top.fixed;
    screen.moving = top.moving;
    screen.fixed_labels = quantize_equal_count(top.fixed, cfg.coarse_levels);
    screen.moving_edges = equal_count_edges(top.moving, {}, cfg.coarse_levels);
    screen.min_overlap = top.min_overlap;
  }
  const LevelData& coarse = screen.fixed.empty() ? top : screen;
  std::vector<Best> per_angle;
  for (double deg : cfg.effective_angle_grid()) {
    Best b;
    score_angle(coarse, wrap_angle(deg_to_rad(deg)), cfg.scale, shift_at(levels), nullptr, true, b);
    if (b.found) per_angle.push_back(b);
  }
  if (per_angle.empty()) {
    throw Error(ErrorCode::NoValidOverlap, "register_rigid_global: no offset reaches the overlap floor");
  }

  // Strongest angles, pairwise more than two coarse steps apart.
  std::stable_sort(per_angle.begin(), per_angle.end(), [](const Best& a, const Best& b) { return a.mi > b.mi; });
  std::vector<Best> candidates;
  const double min_sep = deg_to_rad(2.0 * cfg.coarse_step_deg);
  for (const auto& b : per_angle) {
    if (static_cast<int>(candidates.size()) >= std::max(1, cfg.coarse_candidates)) break;
    const bool distinct = std::all_of(candidates.begin(), candidates.end(), [&](const Best& c) {
      return std::abs(wrap_angle(b.theta - c.theta)) > min_sep;
    });
    if (distinct) candidates.push_back(b);
  }

  const double fine = deg_to_rad(cfg.fine_step_deg);
  auto better = [](const Best& a, const Best& b) {
    return a.found && (!b.found || a.mi > b.mi + 1e-12 * std::max(1.0, std::abs(b.mi)));
  };
  Best best;
  if (levels == 0) {
    for (const auto& cand : candidates) {
      std::vector<Best> sweep;
      for (double deg : angle_range(rad_to_deg(cand.theta), cfg.coarse_step_deg, cfg.fine_step_deg)) {
        sweep.emplace_back();
        score_angle(top, wrap_angle(deg_to_rad(deg)), cfg.scale, shift_at(0), nullptr, true, sweep.back());
      }
      const Best b = polish(sweep, fixed, fine);
      if (better(b, best)) best = b;
    }
  } else {
    // Sweeps `span` around `from` (found one level up) with a local offset window.
    auto sweep_at = [&](const Best& from, int l, double span) {
      const auto& lv = pyramid[static_cast<std::size_t>(l)];
      const RigidTransform2D here = RigidTransform2D{from.theta, from.tx, from.ty, cfg.scale}.from_downsample(2);
      const Point2 t_ref{here.tx_px, here.ty_px};
      std::vector<Best> sweep;
      for (double deg : angle_range(rad_to_deg(from.theta), span, cfg.fine_step_deg)) {
        const double theta = wrap_angle(deg_to_rad(deg));
        const OffsetWindow w = predicted_window(lv, from.theta, t_ref, theta, cfg.scale, cfg.local_radius);
        sweep.emplace_back();
        score_angle(lv, theta, cfg.scale, shift_at(l), &w, false, sweep.back());
      }
      if (std::none_of(sweep.begin(), sweep.end(), [](const Best& b) { return b.found; })) {
        Best kept{from.theta, t_ref.x, t_ref.y, -std::numeric_limits<double>::infinity(), true};
        const Point2 u = rotate(-from.theta, t_ref);
        kept.ux = u.x;
        kept.uy = u.y;
        return std::vector<Best>{kept};
      }
      return sweep;
    };
    auto pick = [&](const std::vector<Best>& sweep) {
      Best b;
      for (const auto& s : sweep) {
        if (better(s, b)) b = s;
      }
      return b;
    };

    // One level down: refine each candidate over +-coarse_step and keep the best.
    std::vector<Best> sweep;
    for (const auto& cand : candidates) {
      auto s = sweep_at(cand, levels - 1, cfg.coarse_step_deg);
      const Best b = pick(s);
      if (better(b, best) || !best.found) {
        best = b;
        sweep = std::move(s);
      }
    }
    for (int l = levels - 2; l >= 0; --l) {
      sweep = sweep_at(best, l, 3.0 * cfg.fine_step_deg);
      best = pick(sweep);
    }
    best = polish(sweep, pyramid.front().fixed, fine);
    if (best.mi == -std::numeric_limits<double>::infinity()) best.mi = 0.0;
  }

  GlobalRegistrationResult out;
  out.transform = {best.theta, best.tx, best.ty, cfg.scale};
  out.mi_nats = best.mi;
  out.pyramid_levels = levels;
  return out;
}

}  // namespace mmcyto
