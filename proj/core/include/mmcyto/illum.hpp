#pragma once

#include "mmcyto/image.hpp"

namespace mmcyto {

struct IllumConfig {
  /// Low-pass sigma as a fraction of the longer image side.
  double sigma_frac = 0.10;
  /// Saturation cap as a multiple of the 99th percentile of the high-pass image.
  double cap_multiple = 4.0;
  double cap_percentile = 0.99;
};

struct CorrectedPlane {
  Plane plane;
  /// Set when the rescale range collapsed (cap <= min); the plane is all zeros.
  bool low_contrast = false;
};

/// High-pass (image minus wide Gaussian) followed by a linear rescale to
/// [0, 1] between min and cap_multiple * P99, clipping above the cap.
CorrectedPlane correct_channel(const Plane& p, const IllumConfig& cfg = {});

struct CorrectedImage {
  MultiChannelImage image;
  std::vector<bool> low_contrast;  // per channel
};

/// Per-channel correction; channel order is preserved.
CorrectedImage correct_image(const MultiChannelImage& img, const IllumConfig& cfg = {},
                             int threads = 1);

}  // namespace mmcyto
