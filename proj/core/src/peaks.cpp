#include "mmcyto/peaks.hpp"

#include <algorithm>
#include <cmath>

#include "mmcyto/error.hpp"

namespace mmcyto {

namespace {

bool ranks_before(const NucleusRecord& a, const NucleusRecord& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.y_px != b.y_px) return a.y_px < b.y_px;
  if (a.x_px != b.x_px) return a.x_px < b.x_px;
  return a.source_z < b.source_z;
}

// Greedy suppression over records already sorted by ranks_before.
std::vector<NucleusRecord> suppress(const std::vector<NucleusRecord>& sorted, double radius) {
  std::vector<NucleusRecord> kept;
  const double r2 = radius * radius;
  for (const auto& c : sorted) {
    const bool near = std::any_of(kept.begin(), kept.end(), [&](const NucleusRecord& k) {
      const double dx = k.x_px - c.x_px;
      const double dy = k.y_px - c.y_px;
      return dx * dx + dy * dy <= r2;
    });
    if (!near) kept.push_back(c);
  }
  return kept;
}

}  // namespace

std::vector<NucleusRecord> detect_peaks(const Plane& heatmap, const PeakConfig& cfg) {
  if (!(cfg.threshold > 0.0 && cfg.threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "detect_peaks: threshold must lie in (0, 1]");
  }
  if (!(cfg.min_distance >= 1.0)) throw Error(ErrorCode::InvalidArgument, "detect_peaks: min_distance must be >= 1");
  if (cfg.downsample < 1) throw Error(ErrorCode::InvalidArgument, "detect_peaks: downsample must be >= 1");

  const int h = heatmap.height(), w = heatmap.width();
  std::vector<NucleusRecord> candidates;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float v = heatmap.at(y, x);
      if (!(v > cfg.threshold)) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dy == 0 && dx == 0) continue;
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || xx < 0 || yy >= h || xx >= w) continue;
          if (heatmap.at(yy, xx) >= v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) candidates.push_back({cfg.slide_id, static_cast<double>(x), static_cast<double>(y), v, cfg.source_z});
    }
  }
  std::sort(candidates.begin(), candidates.end(), ranks_before);
  auto kept = suppress(candidates, cfg.min_distance);
  for (auto& k : kept) {
    k.x_px *= cfg.downsample;
    k.y_px *= cfg.downsample;
  }
  return kept;
}

std::vector<NucleusRecord> merge_across_z(const std::vector<std::vector<NucleusRecord>>& per_level,
                                          double radius) {
  if (!(radius >= 0.0)) throw Error(ErrorCode::InvalidArgument, "merge_across_z: radius must be >= 0");
  std::vector<NucleusRecord> all;
  for (const auto& level : per_level) all.insert(all.end(), level.begin(), level.end());
  std::sort(all.begin(), all.end(), ranks_before);
  return suppress(all, radius);
}

Plane dog_response(const Plane& p, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::NonPositiveSigma, "dog_response: sigma must be > 0");
  constexpr double k = 1.6;
  const Plane narrow = gaussian_filter(p, sigma);
  const Plane wide = gaussian_filter(p, k * sigma);
  Plane out(p.height(), p.width(), 0.0F, p.pixel_size_um());
  auto o = out.pixels();
  const auto a = narrow.pixels();
  const auto b = wide.pixels();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = static_cast<float>((b[i] - a[i]) / (k - 1.0));
  return out;
}

Plane baseline_blob_detector(const Plane& p, double sigma) {
  Plane r = dog_response(p, sigma);
  auto px = r.pixels();
  float mx = 0.0F;
  for (auto& v : px) {
    v = std::max(0.0F, v);
    mx = std::max(mx, v);
  }
  // Float noise on a flat plane must not be amplified into a heatmap.
  if (mx <= 1e-6F) {
    std::fill(px.begin(), px.end(), 0.0F);
    return r;
  }
  for (auto& v : px) v /= mx;
  return r;
}

}  // namespace mmcyto
