#pragma once

#include <string>
#include <vector>

#include "mmcyto/image.hpp"

namespace mmcyto {

struct NucleusRecord {
  std::string slide_id;
  double x_px = 0.0;  // full-resolution BF frame
  double y_px = 0.0;
  double score = 0.0;
  int source_z = 0;

  friend bool operator==(const NucleusRecord&, const NucleusRecord&) = default;
};

struct PeakConfig {
  double threshold = 0.5;
  double min_distance = 4.0;  // heatmap pixels
  /// Heatmap pixel -> full-resolution pixel factor.
  int downsample = 4;
  int source_z = 0;
  std::string slide_id;
};

/// Strict 8-neighborhood maxima above the threshold, then greedy
/// non-maximum suppression by descending score: a peak is dropped when it
/// lies within min_distance (Euclidean, inclusive) of a kept one.
std::vector<NucleusRecord> detect_peaks(const Plane& heatmap, const PeakConfig& cfg = {});

/// Union of per-level detections; a record within `radius` of an already
/// kept one is merged into it. Processing order is score descending, then
/// (y, x), then source level, so the highest-scoring record survives.
std::vector<NucleusRecord> merge_across_z(const std::vector<std::vector<NucleusRecord>>& per_level,
                                          double radius = 8.0);

/// Scale-normalized difference of Gaussians for dark blobs on a bright
/// background: blur(1.6 sigma) - blur(sigma), divided by (1.6 - 1).
Plane dog_response(const Plane& p, double sigma);

/// dog_response clipped at zero and rescaled to [0, 1] by its maximum.
Plane baseline_blob_detector(const Plane& p, double sigma);

}  // namespace mmcyto
