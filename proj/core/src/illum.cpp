#include "mmcyto/illum.hpp"

#include <algorithm>
#include <cmath>

#include "mmcyto/error.hpp"
#include "mmcyto/parallel.hpp"

namespace mmcyto {

CorrectedPlane correct_channel(const Plane& p, const IllumConfig& cfg) {
  if (p.empty()) throw Error(ErrorCode::InvalidArgument, "correct_channel: empty plane");
  const double sigma = cfg.sigma_frac * std::max(p.height(), p.width());
  const Plane low = gaussian_filter(p, sigma);

  Plane d(p.height(), p.width(), 0.0F, p.pixel_size_um());
  auto dst = d.pixels();
  const auto src = p.pixels();
  const auto lp = low.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] - lp[i];

  const double dmin = *std::min_element(dst.begin(), dst.end());
  const double cap = cfg.cap_multiple * percentile(d, cfg.cap_percentile);

  CorrectedPlane out{Plane(p.height(), p.width(), 0.0F, p.pixel_size_um()), false};
  if (!(cap > dmin)) {
    out.low_contrast = true;
    return out;
  }
  const double inv = 1.0 / (cap - dmin);
  auto o = out.plane.pixels();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double v = (dst[i] - dmin) * inv;
    o[i] = v >= 1.0 ? 1.0F : static_cast<float>(std::max(0.0, v));
  }
  return out;
}

CorrectedImage correct_image(const MultiChannelImage& img, const IllumConfig& cfg, int threads) {
  CorrectedImage out;
  out.image.modality = img.modality;
  out.image.channel_names = img.channel_names;
  out.image.channels.resize(img.channels.size());
  std::vector<char> flags(img.channels.size(), 0);
  parallel_for(img.channels.size(), threads, [&](std::size_t c) {
    auto r = correct_channel(img.channels[c], cfg);
    out.image.channels[c] = std::move(r.plane);
    flags[c] = r.low_contrast ? 1 : 0;
  });
  out.low_contrast.assign(flags.begin(), flags.end());
  return out;
}

}  // namespace mmcyto
