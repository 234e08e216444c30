#include "mmcyto/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "mmcyto/error.hpp"

namespace mmcyto {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

constexpr double kSharpSigma = 0.8;   // px, in-focus edge width
constexpr double kBlurPerUm = 3.0;    // px of edge width per um of defocus
constexpr double kTexSpacing = 3.0;   // px between texture lattice nodes
constexpr double kRingWidth = 1.5;

struct Cell {
  double x, y;            // BF frame
  double rx, ry;          // FL content center (x + residual)
  double nuc_a, nuc_b, nuc_phi;
  double cyto_a, cyto_b, cyto_phi;
  double z_sharp_um;
  int sharp_bf, sharp_fl;
  std::array<double, 3> nuc_od, cyto_od;
  std::array<double, 4> fl_cyto, fl_nuc, fl_ring;
  std::uint64_t tex_seed;
  bool inside;
};

double unit_hash(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  const auto h = mix_seed(seed ^ (static_cast<std::uint64_t>(ix) * 0x632BE59BD9B4E019ULL),
                          static_cast<std::uint64_t>(iy));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Smooth value noise in [-0.5, 0.5].
double value_noise(std::uint64_t seed, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
  double tx = x - fx, ty = y - fy;
  tx = tx * tx * (3 - 2 * tx);
  ty = ty * ty * (3 - 2 * ty);
  const double a = unit_hash(seed, ix, iy), b = unit_hash(seed, ix + 1, iy);
  const double c = unit_hash(seed, ix, iy + 1), d = unit_hash(seed, ix + 1, iy + 1);
  return (a + (b - a) * tx) * (1 - ty) + (c + (d - c) * tx) * ty - 0.5;
}

double soft_step(double dist, double sigma) {
  return 0.5 * std::erfc(dist / (std::numbers::sqrt2 * sigma));
}

/// Approximate signed distance to an ellipse boundary (negative inside).
double ellipse_distance(double u, double v, double a, double b, double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  const double pu = c * u + s * v, pv = -s * u + c * v;
  const double rho = std::sqrt((pu / a) * (pu / a) + (pv / b) * (pv / b));
  return (rho - 1.0) * std::sqrt(a * b);
}

double edge_sigma(double defocus_um, double pixel_blur) {
  const double d = kBlurPerUm * defocus_um;
  return std::sqrt(kSharpSigma * kSharpSigma + d * d + pixel_blur * pixel_blur);
}

double texture_gain(double sigma) {
  const double w = 2.0 * std::numbers::pi / (2.0 * kTexSpacing);
  return std::exp(-0.5 * sigma * sigma * w * w);
}

struct Region {
  double x0, y0, x1, y1;
};

std::vector<double> offsets(int n, double step) {
  std::vector<double> z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = (i - (n - 1) / 2.0) * step;
  return z;
}

}  // namespace

Phantom synth_phantom(std::uint64_t seed, const PhantomSpec& spec) {
  if (spec.slide_px < 64) throw Error(ErrorCode::InvalidArgument, "synth_phantom: slide_px too small");
  if (spec.n_nuclei < 0 || spec.bf_levels < 1 || spec.fl_levels < 1) {
    throw Error(ErrorCode::InvalidArgument, "synth_phantom: bad counts");
  }
  spec.transform.validate();
  const auto& t = spec.transform;
  const auto inv = t.inverse();
  const int S = spec.slide_px;
  const int F = spec.fl_slide_px > 0 ? spec.fl_slide_px : static_cast<int>(std::lround(S / t.scale));
  const auto bf_z = offsets(spec.bf_levels, spec.bf_z_step_um);
  const auto fl_z = offsets(spec.fl_levels, spec.fl_z_step_um);
  const double ce = spec.positive ? spec.class_effect : 0.0;

  // Cells must cover the BF slide and the part of the FL slide mapped back.
  Region reg{0, 0, static_cast<double>(S), static_cast<double>(S)};
  for (double cx : {0.0, static_cast<double>(F)}) {
    for (double cy : {0.0, static_cast<double>(F)}) {
      const Point2 p = inv.apply({cx, cy});
      reg.x0 = std::min(reg.x0, p.x);
      reg.y0 = std::min(reg.y0, p.y);
      reg.x1 = std::max(reg.x1, p.x);
      reg.y1 = std::max(reg.y1, p.y);
    }
  }
  const double pad = 6.0 * spec.nucleus_radius_px;
  reg = {reg.x0 - pad, reg.y0 - pad, reg.x1 + pad, reg.y1 + pad};

  std::mt19937_64 rng(mix_seed(seed, 0));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double area = static_cast<double>(S) * S;
  const double outer = (reg.x1 - reg.x0) * (reg.y1 - reg.y0) - area;
  const auto n_in = static_cast<std::size_t>(spec.n_nuclei);
  const auto n_out = static_cast<std::size_t>(std::lround(spec.n_nuclei * std::max(0.0, outer) / area));
  double spacing = std::max(2.4 * spec.nucleus_radius_px * (1.0 + 0.4 * ce),
                            0.6 * std::sqrt(area / std::max<std::size_t>(1, n_in)));

  std::vector<Point2> pos;
  auto place = [&](std::size_t count, bool inside) {
    std::size_t placed = 0;
    std::size_t tries = 0;
    while (placed < count) {
      Point2 p;
      if (inside) {
        p = {uni(rng) * S, uni(rng) * S};
      } else {
        p = {reg.x0 + uni(rng) * (reg.x1 - reg.x0), reg.y0 + uni(rng) * (reg.y1 - reg.y0)};
        if (p.x >= 0 && p.x < S && p.y >= 0 && p.y < S) continue;
      }
      bool ok = true;
      for (const auto& q : pos) {
        if ((q.x - p.x) * (q.x - p.x) + (q.y - p.y) * (q.y - p.y) < spacing * spacing) {
          ok = false;
          break;
        }
      }
      if (++tries > 200 * (count + 1)) {
        spacing *= 0.9;
        tries = 0;
      }
      if (!ok) continue;
      pos.push_back(p);
      ++placed;
    }
  };
  place(n_in, true);
  place(n_out, false);

  // Smooth drift field bounded by jitter_px.
  std::array<double, 12> drift{};
  for (auto& v : drift) v = uni(rng);
  const double lambda = 1.5 * S;
  auto residual = [&](double x, double y, int axis) {
    const double* d = drift.data() + 6 * axis;
    const double a1 = 2 * std::numbers::pi * d[0], a2 = 2 * std::numbers::pi * d[1];
    const double s1 = std::sin(2 * std::numbers::pi * (x * std::cos(a1) + y * std::sin(a1)) / lambda + 2 * std::numbers::pi * d[2]);
    const double s2 = std::sin(2 * std::numbers::pi * (x * std::cos(a2) + y * std::sin(a2)) / (0.7 * lambda) +
                               2 * std::numbers::pi * d[3]);
    return spec.jitter_px * (0.6 * s1 + 0.4 * s2);
  };

  std::vector<Cell> cells;
  cells.reserve(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    std::mt19937_64 cr(mix_seed(seed, 1000 + i));
    auto u = [&](double lo, double hi) { return lo + (hi - lo) * uni(cr); };
    Cell c{};
    c.x = pos[i].x;
    c.y = pos[i].y;
    c.rx = c.x + residual(c.x, c.y, 0);
    c.ry = c.y + residual(c.x, c.y, 1);
    const double r = spec.nucleus_radius_px * (1.0 + 0.4 * ce);
    c.nuc_a = r * u(0.85, 1.15);
    c.nuc_b = r * u(0.75, 1.05);
    c.nuc_phi = u(0.0, std::numbers::pi);
    c.cyto_a = r * u(2.4, 3.2);
    c.cyto_b = r * u(2.0, 2.8);
    c.cyto_phi = u(0.0, std::numbers::pi);
    c.sharp_bf = static_cast<int>(cr() % static_cast<std::uint64_t>(spec.bf_levels));
    c.z_sharp_um = bf_z[static_cast<std::size_t>(c.sharp_bf)];
    c.sharp_fl = 0;
    for (int j = 1; j < spec.fl_levels; ++j) {
      if (std::abs(fl_z[static_cast<std::size_t>(j)] - c.z_sharp_um) <
          std::abs(fl_z[static_cast<std::size_t>(c.sharp_fl)] - c.z_sharp_um)) {
        c.sharp_fl = j;
      }
    }
    const double g = u(0.8, 1.2) * (1.0 + 0.5 * ce);
    c.nuc_od = {0.8 * g, 1.0 * g, 0.5 * g};
    const double gc = u(0.6, 1.2);
    c.cyto_od = {0.25 * gc, 0.12 * gc, 0.16 * gc};
    const double fc = u(0.7, 1.3);
    c.fl_cyto = {0.15 * fc, 0.30 * fc, 0.25 * fc, 0.10 * fc};
    const double fn = u(0.7, 1.3) * (1.0 + ce);
    c.fl_nuc = {0.05 * fn, 0.08 * fn, 0.06 * fn, 0.04 * fn};
    const double fr = u(0.7, 1.3) * (1.0 + ce);
    c.fl_ring = {0.25 * fr, 0.20 * fr, 0.35 * fr, 0.15 * fr};
    c.tex_seed = mix_seed(seed, 500000 + i);
    c.inside = i < n_in;
    cells.push_back(c);
  }

  Phantom out;
  out.truth.seed = seed;
  out.truth.spec = spec;
  for (const auto& c : cells) {
    if (!c.inside) continue;
    out.truth.nuclei.push_back({c.x, c.y, c.sharp_bf, c.sharp_fl, c.rx - c.x, c.ry - c.y, std::sqrt(c.nuc_a * c.nuc_b)});
  }

  const std::array<double, 3> bf_bg{0.92, 0.90, 0.94};
  const double bf_px = spec.bf_pixel_um;
  const double fl_px = spec.bf_pixel_um * t.scale;

  // Brightfield: Beer-Lambert over summed optical density.
  out.bf.z_offsets_um = bf_z;
  for (int lv = 0; lv < spec.bf_levels; ++lv) {
    std::array<std::vector<float>, 3> od;
    for (auto& o : od) o.assign(static_cast<std::size_t>(S) * S, 0.0F);
    for (const auto& c : cells) {
      const double sig = edge_sigma(std::abs(bf_z[static_cast<std::size_t>(lv)] - c.z_sharp_um), 0.0);
      const double tg = 0.6 * texture_gain(sig);
      const double reach = std::max(c.cyto_a, c.cyto_b) + 4.0 * sig + 2.0;
      const int y0 = std::max(0, static_cast<int>(std::floor(c.y - reach)));
      const int y1 = std::min(S - 1, static_cast<int>(std::ceil(c.y + reach)));
      const int x0 = std::max(0, static_cast<int>(std::floor(c.x - reach)));
      const int x1 = std::min(S - 1, static_cast<int>(std::ceil(c.x + reach)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double u = x - c.x, v = y - c.y;
          const double mc = soft_step(ellipse_distance(u, v, c.cyto_a, c.cyto_b, c.cyto_phi), sig);
          const double mn = soft_step(ellipse_distance(u, v, c.nuc_a, c.nuc_b, c.nuc_phi), sig);
          if (mc < 1e-6 && mn < 1e-6) continue;
          const double tex = mn > 1e-6 ? value_noise(c.tex_seed, u / kTexSpacing, v / kTexSpacing) : 0.0;
          const std::size_t k = static_cast<std::size_t>(y) * S + x;
          for (std::size_t ch = 0; ch < 3; ++ch) {
            od[ch][k] += static_cast<float>(c.cyto_od[ch] * mc + c.nuc_od[ch] * mn * (1.0 + 2.0 * tg * tex));
          }
        }
      }
    }
    MultiChannelImage img{Modality::BF, {}, default_channel_names(Modality::BF)};
    for (std::size_t ch = 0; ch < 3; ++ch) {
      std::mt19937_64 nr(mix_seed(seed, 100 + static_cast<std::uint64_t>(lv) * 8 + ch));
      std::normal_distribution<double> noise(0.0, spec.noise_sigma);
      std::vector<float> px(od[ch].size());
      for (std::size_t k = 0; k < px.size(); ++k) {
        px[k] = static_cast<float>(std::clamp(bf_bg[ch] * std::exp(-static_cast<double>(od[ch][k])) + noise(nr), 0.0, 1.0));
      }
      img.channels.emplace_back(S, S, std::move(px), bf_px);
    }
    out.bf.levels.push_back(std::move(img));
  }

  // Fluorescence: rendered in the moving frame through the inverse mapping.
  out.fl.z_offsets_um = fl_z;
  const double pixel_blur = 0.4 * t.scale;
  for (int lv = 0; lv < spec.fl_levels; ++lv) {
    std::array<std::vector<float>, 4> acc;
    for (auto& a : acc) a.assign(static_cast<std::size_t>(F) * F, 0.02F);
    for (const auto& c : cells) {
      const double sig = edge_sigma(std::abs(fl_z[static_cast<std::size_t>(lv)] - c.z_sharp_um), pixel_blur);
      const double tg = 0.5 * texture_gain(sig);
      const double ring_w = std::sqrt(kRingWidth * kRingWidth + sig * sig);
      const double ring_gain = kRingWidth / ring_w;
      const double reach = (std::max(c.cyto_a, c.cyto_b) + 4.0 * sig + 2.0) / t.scale;
      const Point2 m = t.apply({c.rx, c.ry});
      const int y0 = std::max(0, static_cast<int>(std::floor(m.y - reach)));
      const int y1 = std::min(F - 1, static_cast<int>(std::ceil(m.y + reach)));
      const int x0 = std::max(0, static_cast<int>(std::floor(m.x - reach)));
      const int x1 = std::min(F - 1, static_cast<int>(std::ceil(m.x + reach)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const Point2 p = inv.apply({static_cast<double>(x), static_cast<double>(y)});
          const double u = p.x - c.rx, v = p.y - c.ry;
          const double mc = soft_step(ellipse_distance(u, v, c.cyto_a, c.cyto_b, c.cyto_phi), sig);
          const double dn = ellipse_distance(u, v, c.nuc_a, c.nuc_b, c.nuc_phi);
          const double mn = soft_step(dn, sig);
          const double ring = ring_gain * std::exp(-0.5 * dn * dn / (ring_w * ring_w));
          if (mc < 1e-6 && mn < 1e-6 && ring < 1e-6) continue;
          const double tex = mn > 1e-6 ? value_noise(c.tex_seed, u / kTexSpacing, v / kTexSpacing) : 0.0;
          const std::size_t k = static_cast<std::size_t>(y) * F + x;
          for (std::size_t ch = 0; ch < 4; ++ch) {
            acc[ch][k] += static_cast<float>(c.fl_cyto[ch] * mc * (1.0 - mn) + c.fl_nuc[ch] * mn * (1.0 + 2.0 * tg * tex) +
                                             c.fl_ring[ch] * ring);
          }
        }
      }
    }
    MultiChannelImage img{Modality::FL, {}, default_channel_names(Modality::FL)};
    for (std::size_t ch = 0; ch < 4; ++ch) {
      std::mt19937_64 nr(mix_seed(seed, 200 + static_cast<std::uint64_t>(lv) * 8 + ch));
      std::normal_distribution<double> noise(0.0, spec.noise_sigma);
      const double phase = 0.7 * static_cast<double>(ch);
      std::vector<float> px(acc[ch].size());
      for (int y = 0; y < F; ++y) {
        for (int x = 0; x < F; ++x) {
          const double bias = 0.5 + 0.5 * std::cos(std::numbers::pi * x / F + phase) * std::cos(0.8 * std::numbers::pi * y / F);
          const std::size_t k = static_cast<std::size_t>(y) * F + x;
          px[k] = static_cast<float>(std::max(0.0, acc[ch][k] + spec.bias_strength * bias + noise(nr)));
        }
      }
      img.channels.emplace_back(F, F, std::move(px), fl_px);
    }
    out.fl.levels.push_back(std::move(img));
  }
  return out;
}

}  // namespace mmcyto
