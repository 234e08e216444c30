#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mmcyto/dataset.hpp"
#include "mmcyto/image.hpp"
#include "mmcyto/metrics.hpp"

namespace fixture {

// Small bright dots on a flat field plus a smooth ramp bias.
struct BiasPhantom {
  mmcyto::Plane raw;
  std::vector<std::uint8_t> background;  // far from every dot
  std::vector<std::size_t> peaks;        // dot centre pixel indices
};

inline BiasPhantom bias_phantom(std::uint64_t seed, int n = 256, double slope = 0.8) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jit(-3.0, 3.0);
  std::normal_distribution<double> noise(0.0, 0.002);
  BiasPhantom out{mmcyto::Plane(n, n, 0.0F, 0.33), std::vector<std::uint8_t>(static_cast<std::size_t>(n) * n, 1), {}};
  std::vector<std::pair<double, double>> dots;
  for (int gy = 12; gy < n - 8; gy += 24)
    for (int gx = 12; gx < n - 8; gx += 24) dots.emplace_back(gx + jit(rng), gy + jit(rng));
  const double s = 1.5;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double v = 0.1 + slope * (0.6 * x / n + 0.4 * y / static_cast<double>(n));
      for (const auto& [dx, dy] : dots) {
        const double r2 = (x - dx) * (x - dx) + (y - dy) * (y - dy);
        if (r2 < 100.0) v += 0.8 * std::exp(-r2 / (2 * s * s));
        if (r2 < 36.0) out.background[static_cast<std::size_t>(y) * n + x] = 0;
      }
      out.raw.at(y, x) = static_cast<float>(v + noise(rng));
    }
  }
  for (const auto& [dx, dy] : dots) {
    out.peaks.push_back(static_cast<std::size_t>(std::lround(dy)) * n + static_cast<std::size_t>(std::lround(dx)));
  }
  return out;
}

// Background spread in units of the dot contrast of the same image.
inline double relative_background_std(const mmcyto::Plane& p, const BiasPhantom& ph) {
  std::vector<double> bg, pk;
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!ph.background[i]) continue;
    bg.push_back(p.pixels()[i]);
    sum += p.pixels()[i];
    sum2 += p.pixels()[i] * static_cast<double>(p.pixels()[i]);
  }
  for (auto i : ph.peaks) pk.push_back(p.pixels()[i]);
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    return v[v.size() / 2];
  };
  const double n = static_cast<double>(bg.size());
  const double sd = std::sqrt(std::max(0.0, sum2 / n - (sum / n) * (sum / n)));
  return sd / (median(pk) - median(bg));
}

// Radially symmetric textured blob, blurred by |level - sharp| * step.
inline mmcyto::ZStack focus_stack(std::uint64_t seed, int levels, int sharp, int size = 96, double step = 0.8,
                                  mmcyto::Modality m = mmcyto::Modality::BF) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  mmcyto::Plane base(size, size, 0.0F);
  const double c = (size - 1) / 2.0;
  const double r = size * (0.15 + 0.1 * u(rng));
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double d = std::hypot(x - c, y - c);
      const double inside = d < r ? 1.0 : 0.0;
      base.at(y, x) = static_cast<float>(0.2 + 0.5 * inside * (0.6 + 0.4 * u(rng)) + 0.1 * u(rng));
    }
  }
  mmcyto::ZStack z;
  for (int l = 0; l < levels; ++l) {
    const double sigma = std::abs(l - sharp) * step;
    const mmcyto::Plane p = sigma > 0 ? mmcyto::gaussian_filter(base, sigma) : base;
    mmcyto::MultiChannelImage img{m, {}, mmcyto::default_channel_names(m)};
    for (int ch = 0; ch < mmcyto::channel_count(m); ++ch) {
      mmcyto::Plane q = p;
      // BF: dark structure on bright background.
      if (m == mmcyto::Modality::BF)
        for (auto& v : q.pixels()) v = 1.0F - 0.8F * v;
      img.channels.push_back(std::move(q));
    }
    z.levels.push_back(std::move(img));
    z.z_offsets_um.push_back(0.4 * (l - (levels - 1) / 2.0));
  }
  return z;
}

inline mmcyto::ZStack constant_stack(int levels, float v = 0.5F) {
  mmcyto::ZStack z;
  for (int l = 0; l < levels; ++l) {
    z.levels.push_back({mmcyto::Modality::FL, std::vector<mmcyto::Plane>(4, mmcyto::Plane(32, 32, v)),
                        mmcyto::default_channel_names(mmcyto::Modality::FL)});
    z.z_offsets_um.push_back(static_cast<double>(l));
  }
  return z;
}

// Fourteen patients: six positive well above 60 %, seven negatives well
// below, and one negative that crosses the threshold.
inline std::map<std::string, std::vector<double>> patient_mirror_scores(std::map<std::string, int>& truth) {
  std::map<std::string, std::vector<double>> scores;
  auto add = [&](const std::string& id, int positive_cells, int cells, int label) {
    std::vector<double> s;
    for (int i = 0; i < cells; ++i) s.push_back(i < positive_cells ? 0.9 : 0.2);
    scores[id] = s;
    truth[id] = label;
  };
  const int pos[] = {80, 72, 91, 66, 75, 88};
  for (int i = 0; i < 6; ++i) add("C" + std::to_string(i + 1), pos[i], 100, 1);
  const int neg[] = {5, 12, 30, 18, 41, 9, 22};
  for (int i = 0; i < 7; ++i) add("H" + std::to_string(i + 1), neg[i], 100, 0);
  add("H8", 63, 100, 0);
  return scores;
}

struct ReferencePartitions {
  std::vector<mmcyto::PatientRecord> patients;
  std::map<std::string, std::int64_t> counts;
  std::map<std::string, int> partition;
};

// tests/data/oc_partitions.csv: patient_id,diagnosis,partition,patches
inline ReferencePartitions load_reference_partitions(const std::string& path) {
  std::ifstream in(path);
  ReferencePartitions out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, dx, part, n;
    std::getline(ss, id, ',');
    std::getline(ss, dx, ',');
    std::getline(ss, part, ',');
    std::getline(ss, n, ',');
    out.patients.push_back({id, mmcyto::diagnosis_from_string(dx), {}});
    out.counts[id] = std::stoll(n);
    out.partition[id] = std::stoi(part);
  }
  return out;
}

}  // namespace fixture
