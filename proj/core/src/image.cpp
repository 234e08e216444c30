#include "mmcyto/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmcyto/error.hpp"

namespace mmcyto {

namespace {

// Symmetric (half-sample) reflection: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
// Valid for any integer, so kernels wider than the image still work.
inline int reflect_index(int i, int n) noexcept {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

}  // namespace

Plane::Plane(int height, int width, float fill, double pixel_size_um)
    : height_(height), width_(width) {
  if (height < 0 || width < 0) {
    throw Error(ErrorCode::InvalidArgument, "Plane: negative dimensions");
  }
  set_pixel_size_um(pixel_size_um);
  pixels_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
}

Plane::Plane(int height, int width, std::vector<float> pixels, double pixel_size_um)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height < 0 || width < 0 ||
      pixels_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw Error(ErrorCode::InvalidArgument, "Plane: pixel count does not match height*width");
  }
  set_pixel_size_um(pixel_size_um);
}

void Plane::set_pixel_size_um(double um) {
  if (!(um > 0.0) || !std::isfinite(um)) {
    throw Error(ErrorCode::InvalidArgument, "Plane: pixel_size_um must be positive");
  }
  pixel_size_um_ = um;
}

Plane Plane::crop(int y0, int x0, int h, int w) const {
  if (y0 < 0 || x0 < 0 || h < 0 || w < 0 || y0 + h > height_ || x0 + w > width_) {
    throw Error(ErrorCode::InvalidArgument, "Plane::crop: window outside plane");
  }
  Plane out(h, w, 0.0F, pixel_size_um_);
  for (int y = 0; y < h; ++y) {
    auto src = row(y0 + y).subspan(static_cast<std::size_t>(x0), static_cast<std::size_t>(w));
    std::copy(src.begin(), src.end(), out.row(y).begin());
  }
  return out;
}

std::string to_string(Modality m) { return m == Modality::BF ? "BF" : "FL"; }

Modality modality_from_string(const std::string& s) {
  if (s == "BF" || s == "bf") return Modality::BF;
  if (s == "FL" || s == "fl") return Modality::FL;
  throw Error(ErrorCode::Parse, "unknown modality '" + s + "'");
}

std::vector<std::string> default_channel_names(Modality m) {
  if (m == Modality::BF) return {"R", "G", "B"};
  return {"em465", "em517", "em568", "em668"};
}

void MultiChannelImage::validate() const {
  const auto expected = static_cast<std::size_t>(channel_count(modality));
  if (channels.size() != expected) {
    throw Error(ErrorCode::InvalidArgument,
                to_string(modality) + " image needs " + std::to_string(expected) +
                    " channels, got " + std::to_string(channels.size()));
  }
  for (const auto& c : channels) {
    if (!c.same_geometry(channels.front()) ||
        c.pixel_size_um() != channels.front().pixel_size_um()) {
      throw Error(ErrorCode::InvalidArgument, "channels do not share geometry");
    }
  }
  if (!channel_names.empty() && channel_names.size() != channels.size()) {
    throw Error(ErrorCode::InvalidArgument, "channel_names length mismatch");
  }
}

void ZStack::validate() const {
  if (levels.size() != z_offsets_um.size()) {
    throw Error(ErrorCode::InvalidArgument, "ZStack: levels and z offsets differ in length");
  }
  for (std::size_t i = 1; i < z_offsets_um.size(); ++i) {
    if (!(z_offsets_um[i] > z_offsets_um[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "ZStack: z offsets must be strictly increasing");
    }
  }
  for (const auto& l : levels) {
    l.validate();
    if (l.modality != levels.front().modality || l.height() != levels.front().height() ||
        l.width() != levels.front().width()) {
      throw Error(ErrorCode::InvalidArgument, "ZStack: levels differ in modality or geometry");
    }
  }
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::NonPositiveSigma, "gaussian sigma must be > 0");
  }
  const int r = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + r)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

Plane gaussian_filter(const Plane& p, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const int h = p.height();
  const int w = p.width();
  Plane out(h, w, 0.0F, p.pixel_size_um());
  if (p.empty()) return out;
  const int r = static_cast<int>(kernel.size() / 2);

  // Horizontal pass into a double buffer.
  std::vector<double> tmp(static_cast<std::size_t>(h) * static_cast<std::size_t>(w));
  std::vector<double> padded(static_cast<std::size_t>(w + 2 * r));
  for (int y = 0; y < h; ++y) {
    auto src = p.row(y);
    for (int i = -r; i < w + r; ++i) {
      padded[static_cast<std::size_t>(i + r)] = src[static_cast<std::size_t>(reflect_index(i, w))];
    }
    double* dst = tmp.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      const double* win = padded.data() + x;
      double acc = 0.0;
      for (std::size_t k = 0; k < kernel.size(); ++k) acc += kernel[k] * win[k];
      dst[x] = acc;
    }
  }

  // Vertical pass, accumulating whole rows.
  std::vector<double> acc(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int k = -r; k <= r; ++k) {
      const double wk = kernel[static_cast<std::size_t>(k + r)];
      const double* src = tmp.data() + static_cast<std::size_t>(reflect_index(y + k, h)) * w;
      for (int x = 0; x < w; ++x) acc[static_cast<std::size_t>(x)] += wk * src[x];
    }
    auto dst = out.row(y);
    for (int x = 0; x < w; ++x) dst[static_cast<std::size_t>(x)] = static_cast<float>(acc[static_cast<std::size_t>(x)]);
  }
  return out;
}

double percentile(std::span<const float> values, double q) {
  if (values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "percentile of empty data");
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw Error(ErrorCode::QOutOfRange, "percentile q must lie in [0, 1]");
  }
  std::vector<float> v(values.begin(), values.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (hi == lo) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  const double frac = pos - static_cast<double>(lo);
  return a + frac * (b - a);
}

double percentile(const Plane& p, double q) { return percentile(p.pixels(), q); }

Plane downsample_box(const Plane& p, int factor) {
  if (factor < 1) throw Error(ErrorCode::InvalidArgument, "downsample factor must be >= 1");
  if (factor == 1) return p;
  const int h = p.height() / factor;
  const int w = p.width() / factor;
  if (h == 0 || w == 0) throw Error(ErrorCode::EmptyOutput, "downsample produces an empty plane");
  Plane out(h, w, 0.0F, p.pixel_size_um() * factor);
  const double norm = 1.0 / (static_cast<double>(factor) * factor);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = 0; dy < factor; ++dy) {
        for (int dx = 0; dx < factor; ++dx) acc += p.at(y * factor + dy, x * factor + dx);
      }
      out.at(y, x) = static_cast<float>(acc * norm);
    }
  }
  return out;
}

PlaneStats plane_stats(const Plane& p) {
  PlaneStats s;
  if (p.empty()) return s;
  const auto px = p.pixels();
  const auto [mn, mx] = std::minmax_element(px.begin(), px.end());
  s.min = *mn;
  s.max = *mx;
  double sum = 0.0;
  for (float v : px) sum += v;
  s.mean = sum / static_cast<double>(px.size());
  double ss = 0.0;
  for (float v : px) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(px.size()));
  return s;
}

}  // namespace mmcyto
