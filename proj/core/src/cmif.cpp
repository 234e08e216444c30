#include "mmcyto/cmif.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fft.hpp"
#include "mmcyto/error.hpp"

namespace mmcyto {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_levels(int levels) {
  if (levels < 2 || levels > 65535) {
    throw Error(ErrorCode::InvalidArgument, "quantization needs 2..65535 levels");
  }
}

std::vector<std::uint32_t> sorted_valid_indices(const Plane& p, std::span<const std::uint8_t> valid) {
  const auto px = p.pixels();
  std::vector<std::uint32_t> idx;
  idx.reserve(px.size());
  for (std::uint32_t i = 0; i < px.size(); ++i) {
    if (valid.empty() || valid[i] != 0) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
    return px[a] < px[b] || (px[a] == px[b] && a < b);
  });
  return idx;
}

// Walks tie groups in sorted order and reports (first rank, group end, label).
template <typename Fn>
void for_each_tie_group(const Plane& p, const std::vector<std::uint32_t>& order, int levels, Fn&& fn) {
  const auto px = p.pixels();
  const auto n = static_cast<std::int64_t>(order.size());
  std::int64_t r = 0;
  while (r < n) {
    std::int64_t e = r + 1;
    while (e < n && px[order[static_cast<std::size_t>(e)]] == px[order[static_cast<std::size_t>(r)]]) ++e;
    const auto label = static_cast<std::uint16_t>((r * levels) / n);
    fn(r, e, label);
    r = e;
  }
}

bool better(double mi, Offset o, double best_mi, Offset best) {
  const double tol = 1e-12 * std::max(1.0, std::abs(best_mi));
  if (best_mi == kNegInf) return mi != kNegInf;
  if (mi > best_mi + tol) return true;
  if (mi < best_mi - tol) return false;
  const long n_new = static_cast<long>(o.dy) * o.dy + static_cast<long>(o.dx) * o.dx;
  const long n_old = static_cast<long>(best.dy) * best.dy + static_cast<long>(best.dx) * best.dx;
  if (n_new != n_old) return n_new < n_old;
  return o.dy < best.dy || (o.dy == best.dy && o.dx < best.dx);
}

void validate_pair(const LabelPlane& fixed, const LabelPlane& moving, const OffsetWindow& window) {
  if (fixed.labels.empty() || moving.labels.empty()) {
    throw Error(ErrorCode::InvalidArgument, "mi_surface: empty label plane");
  }
  if (window.empty()) throw Error(ErrorCode::InvalidArgument, "mi_surface: empty offset window");
  check_levels(fixed.levels);
  check_levels(moving.levels);
}

void select_best(MISurface& s, std::int64_t min_overlap) {
  const std::int64_t floor = std::max<std::int64_t>(1, min_overlap);
  for (std::size_t c = 0; c < s.mi.size(); ++c) {
    if (s.overlap[c] < floor) {
      s.mi[c] = kNegInf;
      continue;
    }
    s.any_admissible = true;
    if (s.degenerate) s.mi[c] = 0.0;
  }
  if (s.degenerate) {
    s.best_offset = {0, 0};
    s.best_mi = 0.0;
    return;
  }
  for (std::size_t c = 0; c < s.mi.size(); ++c) {
    const Offset o = s.window.offset(c);
    if (s.mi[c] != kNegInf && better(s.mi[c], o, s.best_mi, s.best_offset)) {
      s.best_mi = s.mi[c];
      s.best_offset = o;
    }
  }
}

std::vector<double> xlogx_table(std::int64_t max_count) {
  std::vector<double> t(static_cast<std::size_t>(max_count) + 1, 0.0);
  for (std::int64_t c = 2; c <= max_count; ++c) {
    t[static_cast<std::size_t>(c)] = static_cast<double>(c) * std::log(static_cast<double>(c));
  }
  return t;
}

std::int64_t valid_count(const LabelPlane& l) {
  if (l.valid.empty()) return static_cast<std::int64_t>(l.labels.size());
  return std::count_if(l.valid.begin(), l.valid.end(), [](std::uint8_t v) { return v != 0; });
}

std::vector<char> labels_present(const LabelPlane& l) {
  std::vector<char> present(static_cast<std::size_t>(l.levels), 0);
  for (std::size_t i = 0; i < l.labels.size(); ++i) {
    if (l.is_valid(i)) present[l.labels[i]] = 1;
  }
  return present;
}

}  // namespace

int LabelPlane::distinct_labels() const {
  const auto present = labels_present(*this);
  return static_cast<int>(std::count(present.begin(), present.end(), 1));
}

LabelPlane quantize_equal_count(const Plane& p, int levels) { return quantize_equal_count(p, {}, levels); }

LabelPlane quantize_equal_count(const Plane& p, std::span<const std::uint8_t> valid, int levels) {
  check_levels(levels);
  if (p.empty()) throw Error(ErrorCode::InvalidArgument, "quantize_equal_count: empty plane");
  if (!valid.empty() && valid.size() != p.size()) {
    throw Error(ErrorCode::InvalidArgument, "quantize_equal_count: mask size mismatch");
  }
  LabelPlane out;
  out.height = p.height();
  out.width = p.width();
  out.levels = levels;
  out.labels.assign(p.size(), 0);
  out.valid.assign(valid.begin(), valid.end());
  const auto order = sorted_valid_indices(p, valid);
  int groups_labels = 0;
  std::uint16_t last = 0;
  for_each_tie_group(p, order, levels, [&](std::int64_t r, std::int64_t e, std::uint16_t label) {
    for (std::int64_t k = r; k < e; ++k) out.labels[order[static_cast<std::size_t>(k)]] = label;
    if (groups_labels == 0 || label != last) ++groups_labels;
    last = label;
  });
  out.degenerate = groups_labels < 2;
  return out;
}

QuantizationEdges equal_count_edges(const Plane& p, std::span<const std::uint8_t> valid, int levels) {
  check_levels(levels);
  if (p.empty()) throw Error(ErrorCode::InvalidArgument, "equal_count_edges: empty plane");
  QuantizationEdges edges;
  edges.levels = levels;
  const auto order = sorted_valid_indices(p, valid);
  const auto px = p.pixels();
  for_each_tie_group(p, order, levels, [&](std::int64_t r, std::int64_t, std::uint16_t label) {
    if (edges.label.empty() || edges.label.back() != label) {
      edges.lower.push_back(px[order[static_cast<std::size_t>(r)]]);
      edges.label.push_back(label);
    }
  });
  return edges;
}

LabelPlane apply_edges(const Plane& p, std::span<const std::uint8_t> valid, const QuantizationEdges& edges) {
  LabelPlane out;
  out.height = p.height();
  out.width = p.width();
  out.levels = edges.levels;
  out.labels.assign(p.size(), 0);
  out.valid.assign(valid.begin(), valid.end());
  const auto px = p.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (!out.is_valid(i)) continue;
    auto it = std::upper_bound(edges.lower.begin(), edges.lower.end(), px[i]);
    if (it == edges.lower.begin()) continue;
    out.labels[i] = edges.label[static_cast<std::size_t>(it - edges.lower.begin() - 1)];
  }
  out.degenerate = out.distinct_labels() < 2;
  return out;
}

double mutual_information(std::span<const std::int64_t> joint, int fixed_levels, int moving_levels) {
  if (joint.size() != static_cast<std::size_t>(fixed_levels) * moving_levels) {
    throw Error(ErrorCode::InvalidArgument, "mutual_information: table size mismatch");
  }
  auto xlogx = [](std::int64_t c) { return c > 1 ? static_cast<double>(c) * std::log(static_cast<double>(c)) : 0.0; };
  std::vector<std::int64_t> b(static_cast<std::size_t>(moving_levels), 0);
  double s_joint = 0.0;
  double s_a = 0.0;
  std::int64_t n = 0;
  for (int i = 0; i < fixed_levels; ++i) {
    std::int64_t a = 0;
    for (int j = 0; j < moving_levels; ++j) {
      const auto c = joint[static_cast<std::size_t>(i) * moving_levels + j];
      s_joint += xlogx(c);
      a += c;
      b[static_cast<std::size_t>(j)] += c;
    }
    s_a += xlogx(a);
    n += a;
  }
  if (n == 0) return 0.0;
  double s_b = 0.0;
  for (auto c : b) s_b += xlogx(c);
  const double mi = (s_joint - s_a - s_b) / static_cast<double>(n) + std::log(static_cast<double>(n));
  return std::max(0.0, mi);
}

MISurface mi_surface(const LabelPlane& fixed, const LabelPlane& moving, const OffsetWindow& window,
                     std::int64_t min_overlap) {
  validate_pair(fixed, moving, window);
  MISurface s;
  s.window = window;
  const std::size_t cells = window.cell_count();
  s.mi.assign(cells, 0.0);
  s.overlap.assign(cells, 0);
  s.degenerate = fixed.distinct_labels() < 2 || moving.distinct_labels() < 2;

  const int hf = fixed.height, wf = fixed.width, hm = moving.height, wm = moving.width;
  const int ny = detail::good_fft_size(std::max({hm - window.dy_min, hf + window.dy_max, hf, hm}));
  const int nx = detail::good_fft_size(std::max({wm - window.dx_min, wf + window.dx_max, wf, wm}));
  const detail::RealFft2D fft(ny, nx);
  const std::size_t spec_n = fft.spectrum_size();

  auto spectra = [&](const LabelPlane& l, int h, int w, const std::vector<char>& present) {
    std::vector<detail::FftwArray<std::complex<double>>> out(static_cast<std::size_t>(l.levels));
    auto buf = detail::alloc_real(fft.real_size());
    for (int q = 0; q < l.levels; ++q) {
      if (present[static_cast<std::size_t>(q)] == 0) continue;
      std::fill(buf.get(), buf.get() + fft.real_size(), 0.0);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const auto i = static_cast<std::size_t>(y) * w + x;
          if (l.is_valid(i) && l.labels[i] == q) buf[static_cast<std::size_t>(y) * nx + x] = 1.0;
        }
      }
      out[static_cast<std::size_t>(q)] = detail::alloc_complex(spec_n);
      fft.forward(buf.get(), out[static_cast<std::size_t>(q)].get());
    }
    return out;
  };
  const auto present_f = labels_present(fixed);
  const auto present_m = labels_present(moving);
  const auto fspec = spectra(fixed, hf, wf, present_f);
  const auto mspec = spectra(moving, hm, wm, present_m);

  // Real-buffer index of every offset in the window (circular wrap).
  std::vector<std::size_t> where(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    const Offset o = window.offset(c);
    const int ry = ((o.dy % ny) + ny) % ny;
    const int rx = ((o.dx % nx) + nx) % nx;
    where[c] = static_cast<std::size_t>(ry) * nx + rx;
  }

  const auto table = xlogx_table(std::min(valid_count(fixed), valid_count(moving)));
  const double norm = 1.0 / (static_cast<double>(ny) * nx);
  std::vector<double> s_joint(cells, 0.0), s_a(cells, 0.0);
  std::vector<std::int64_t> a(cells);
  std::vector<std::vector<std::int64_t>> b(static_cast<std::size_t>(moving.levels));
  auto prod = detail::alloc_complex(spec_n);
  auto out = detail::alloc_real(fft.real_size());

  for (int i = 0; i < fixed.levels; ++i) {
    if (present_f[static_cast<std::size_t>(i)] == 0) continue;
    std::fill(a.begin(), a.end(), 0);
    const auto* fi = fspec[static_cast<std::size_t>(i)].get();
    for (int j = 0; j < moving.levels; ++j) {
      if (present_m[static_cast<std::size_t>(j)] == 0) continue;
      auto& bj = b[static_cast<std::size_t>(j)];
      if (bj.empty()) bj.assign(cells, 0);
      const auto* mj = mspec[static_cast<std::size_t>(j)].get();
      for (std::size_t k = 0; k < spec_n; ++k) prod[k] = std::conj(fi[k]) * mj[k];
      fft.inverse(prod.get(), out.get());
      const double* o = out.get();
      const std::size_t* wh = where.data();
      double* sj = s_joint.data();
      std::int64_t* ac = a.data();
      std::int64_t* bc = bj.data();
      for (std::size_t c = 0; c < cells; ++c) {
        // Exact counts: round half up; FFT noise never approaches 0.5.
        const auto count = static_cast<std::int64_t>(o[wh[c]] * norm + 0.5);
        sj[c] += table[static_cast<std::size_t>(count)];
        ac[c] += count;
        bc[c] += count;
      }
    }
    for (std::size_t c = 0; c < cells; ++c) {
      s_a[c] += table[static_cast<std::size_t>(a[c])];
      s.overlap[c] += a[c];
    }
  }

  for (std::size_t c = 0; c < cells; ++c) {
    const auto n = s.overlap[c];
    if (n == 0) continue;
    double s_b = 0.0;
    for (const auto& bj : b) {
      if (!bj.empty()) s_b += table[static_cast<std::size_t>(bj[c])];
    }
    const double mi = (s_joint[c] - s_a[c] - s_b) / static_cast<double>(n) +
                      std::log(static_cast<double>(n));
    s.mi[c] = std::max(0.0, mi);
  }
  select_best(s, min_overlap);
  return s;
}

MISurface mi_surface_direct(const LabelPlane& fixed, const LabelPlane& moving,
                            const OffsetWindow& window, std::int64_t min_overlap) {
  validate_pair(fixed, moving, window);
  MISurface s;
  s.window = window;
  const std::size_t cells = window.cell_count();
  s.mi.assign(cells, 0.0);
  s.overlap.assign(cells, 0);
  s.degenerate = fixed.distinct_labels() < 2 || moving.distinct_labels() < 2;

  const int qf = fixed.levels, qm = moving.levels;
  std::vector<std::int64_t> joint(static_cast<std::size_t>(qf) * qm);
  for (std::size_t c = 0; c < cells; ++c) {
    const Offset o = window.offset(c);
    std::fill(joint.begin(), joint.end(), 0);
    std::int64_t n = 0;
    const int y0 = std::max(0, -o.dy), y1 = std::min(fixed.height, moving.height - o.dy);
    const int x0 = std::max(0, -o.dx), x1 = std::min(fixed.width, moving.width - o.dx);
    for (int y = y0; y < y1; ++y) {
      const std::size_t frow = static_cast<std::size_t>(y) * fixed.width;
      const std::size_t mrow = static_cast<std::size_t>(y + o.dy) * moving.width;
      for (int x = x0; x < x1; ++x) {
        const std::size_t fi = frow + x;
        const std::size_t mi = mrow + x + o.dx;
        if (!fixed.is_valid(fi) || !moving.is_valid(mi)) continue;
        ++joint[static_cast<std::size_t>(fixed.labels[fi]) * qm + moving.labels[mi]];
        ++n;
      }
    }
    s.overlap[c] = n;
    if (n > 0) s.mi[c] = mutual_information(joint, qf, qm);
  }
  select_best(s, min_overlap);
  return s;
}

MISurface mi_surface_translation(const LabelPlane& fixed, const LabelPlane& moving, int radius,
                                 std::int64_t min_overlap) {
  if (radius < 0) throw Error(ErrorCode::InvalidArgument, "mi_surface_translation: R must be >= 0");
  return mi_surface(fixed, moving, OffsetWindow::square(radius), min_overlap);
}

Plane reduce_for_registration(const MultiChannelImage& img) {
  img.validate();
  const int h = img.height(), w = img.width();
  Plane out(h, w, 0.0F, img.pixel_size_um());
  auto dst = out.pixels();
  const double inv_c = 1.0 / static_cast<double>(img.channels.size());
  std::vector<double> mean(dst.size(), 0.0);
  for (const auto& ch : img.channels) {
    const auto src = ch.pixels();
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += src[i];
  }
  for (auto& v : mean) v *= inv_c;
  if (img.modality == Modality::FL) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(mean[i]);
    return out;
  }
  const double mx = mean.empty() ? 0.0 : *std::max_element(mean.begin(), mean.end());
  if (!(mx > 0.0)) {
    std::fill(dst.begin(), dst.end(), 1.0F);
    return out;
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(1.0 - mean[i] / mx);
  return out;
}

RefineResult refine_translation(const Plane& fixed_patch, const Plane& moving_region,
                                std::span<const std::uint8_t> moving_valid, const RefineConfig& cfg) {
  if (fixed_patch.empty()) throw Error(ErrorCode::InvalidArgument, "refine_translation: empty patch");
  if (moving_region.height() <= fixed_patch.height() || moving_region.width() <= fixed_patch.width()) {
    throw Error(ErrorCode::InvalidArgument,
                "refine_translation: moving region must be strictly larger than the patch");
  }
  if (!moving_valid.empty() && moving_valid.size() != moving_region.size()) {
    throw Error(ErrorCode::InvalidArgument, "refine_translation: mask size mismatch");
  }
  const int radius = std::max(0, cfg.max_shift_px);
  const int hf = fixed_patch.height(), wf = fixed_patch.width();
  const int base_y = (moving_region.height() - hf) / 2;
  const int base_x = (moving_region.width() - wf) / 2;

  // Only the part of the region reachable within the search radius matters.
  const int y0 = std::max(0, base_y - radius);
  const int x0 = std::max(0, base_x - radius);
  const int y1 = std::min(moving_region.height(), base_y + radius + hf);
  const int x1 = std::min(moving_region.width(), base_x + radius + wf);
  const Plane crop = moving_region.crop(y0, x0, y1 - y0, x1 - x0);
  std::vector<std::uint8_t> crop_valid;
  if (!moving_valid.empty()) {
    crop_valid.reserve(crop.size());
    for (int y = y0; y < y1; ++y) {
      const auto* row = moving_valid.data() + static_cast<std::size_t>(y) * moving_region.width();
      crop_valid.insert(crop_valid.end(), row + x0, row + x1);
    }
  }

  RefineResult result;
  const auto fixed_labels = quantize_equal_count(fixed_patch, cfg.levels);
  const auto moving_labels = quantize_equal_count(crop, crop_valid, cfg.levels);
  if (fixed_labels.degenerate || moving_labels.degenerate) {
    result.low_contrast = true;
    return result;
  }
  const Offset center{base_y - y0, base_x - x0};
  const auto min_overlap = static_cast<std::int64_t>(std::ceil(cfg.min_overlap_frac * hf * wf));
  const auto surface = mi_surface(fixed_labels, moving_labels, OffsetWindow::around(center, radius), min_overlap);
  if (!surface.any_admissible) {
    result.no_overlap = true;
    return result;
  }
  // Ties are broken relative to the centered placement, not the crop corner.
  Offset best = surface.best_offset;
  double best_mi = kNegInf;
  for (std::size_t c = 0; c < surface.mi.size(); ++c) {
    const Offset o = surface.window.offset(c);
    const Offset rel{o.dy - center.dy, o.dx - center.dx};
    if (surface.mi[c] != kNegInf && better(surface.mi[c], rel, best_mi, best)) {
      best_mi = surface.mi[c];
      best = rel;
    }
  }
  result.offset = best;
  result.mi_nats = best_mi;
  return result;
}

}  // namespace mmcyto
