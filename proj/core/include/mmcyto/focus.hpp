#pragma once

#include "mmcyto/image.hpp"

namespace mmcyto {

/// Center-weighted modified Laplacian:
///   ML(x, y) = |2p(x,y) - p(x-1,y) - p(x+1,y)| + |2p(x,y) - p(x,y-1) - p(x,y+1)|
/// averaged over interior pixels with a Gaussian weight of width
/// `center_sigma` centered on the plane center. Throws TooSmall below 3x3.
double lap2_score(const Plane& p, double center_sigma);

struct FocusChoice {
  std::size_t index = 0;
  double score = 0.0;
  /// Every level scored zero; `index` is the middle level.
  bool low_contrast = false;
};

/// Best level by lap2_score of each level's registration reduction. Ties go
/// to the level nearest the middle, then the lower index.
FocusChoice select_best_focus(const ZStack& z, double center_sigma);

/// Focus-measure contrast of a single patch (lap2_score of its reduction).
double contrast_score(const MultiChannelImage& patch, double center_sigma);

inline constexpr double kDefaultCenterSigma = 64.0;

}  // namespace mmcyto
