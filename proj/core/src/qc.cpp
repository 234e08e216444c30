#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mmcyto/error.hpp"
#include "mmcyto/patch.hpp"

namespace mmcyto {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

QcResult qc_filter(const std::vector<PatchRecord>& pairs, const QcConfig& cfg) {
  if (!(cfg.contrast_frac >= 0.0 && cfg.contrast_frac < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "qc_filter: contrast_frac must be in [0, 1)");
  }
  if (cfg.neighbors < 1) throw Error(ErrorCode::InvalidArgument, "qc_filter: neighbors must be >= 1");

  std::vector<std::optional<QcFlag>> removed(pairs.size());
  std::map<std::string, std::vector<std::size_t>> slides;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].qc_flags.has(QcFlag::Border)) {
      removed[i] = QcFlag::Border;
    } else {
      slides[pairs[i].slide_id].push_back(i);
    }
  }

  for (const auto& [slide, idx] : slides) {
    auto order = idx;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (pairs[a].contrast_fl != pairs[b].contrast_fl) return pairs[a].contrast_fl < pairs[b].contrast_fl;
      return pairs[a].id < pairs[b].id;
    });
    const auto drop = static_cast<std::size_t>(std::floor(cfg.contrast_frac * static_cast<double>(idx.size()) + 1e-9));
    for (std::size_t k = 0; k < drop; ++k) removed[order[k]] = QcFlag::LowContrast;

    std::vector<std::size_t> alive;
    for (auto i : idx) {
      if (removed[i]) continue;
      if (pairs[i].qc_flags.has(QcFlag::FailedRegistration)) {
        removed[i] = QcFlag::FailedRegistration;
      } else {
        alive.push_back(i);
      }
    }

    const double cap2 = cfg.neighbor_cap_px * cfg.neighbor_cap_px;
    std::vector<std::size_t> flagged;
    for (auto i : alive) {
      std::vector<std::pair<double, std::size_t>> near;
      for (auto j : alive) {
        if (j == i) continue;
        const double dx = pairs[j].x_px - pairs[i].x_px;
        const double dy = pairs[j].y_px - pairs[i].y_px;
        const double d2 = dx * dx + dy * dy;
        if (d2 <= cap2) near.emplace_back(d2, j);
      }
      if (near.empty()) continue;
      const std::size_t k = std::min(near.size(), static_cast<std::size_t>(cfg.neighbors));
      std::partial_sort(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(k), near.end(),
                        [&](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first < b.first;
                          return pairs[a.second].id < pairs[b.second].id;
                        });
      std::vector<double> ny, nx;
      for (std::size_t m = 0; m < k; ++m) {
        ny.push_back(pairs[near[m].second].refine_dy);
        nx.push_back(pairs[near[m].second].refine_dx);
      }
      const double dev = std::max(std::abs(pairs[i].refine_dy - median(ny)), std::abs(pairs[i].refine_dx - median(nx)));
      if (dev > cfg.tolerance_px) flagged.push_back(i);
    }
    for (auto i : flagged) removed[i] = QcFlag::NeighborInconsistent;
  }

  QcResult out;
  out.report.input = static_cast<std::int64_t>(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!removed[i]) {
      out.kept.push_back(pairs[i]);
      continue;
    }
    auto rec = pairs[i];
    rec.qc_flags.set(*removed[i]);
    out.rejected.push_back(std::move(rec));
    switch (*removed[i]) {
      case QcFlag::LowContrast: ++out.report.low_contrast; break;
      case QcFlag::FailedRegistration: ++out.report.failed_registration; break;
      case QcFlag::NeighborInconsistent: ++out.report.neighbor_inconsistent; break;
      case QcFlag::Border: ++out.report.border; break;
    }
  }
  out.report.kept = static_cast<std::int64_t>(out.kept.size());
  return out;
}

}  // namespace mmcyto
