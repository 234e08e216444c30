#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mmcyto/image.hpp"
#include "mmcyto/transform.hpp"

namespace mmcyto {

struct Offset {
  int dy = 0;
  int dx = 0;

  friend bool operator==(const Offset&, const Offset&) = default;
};

/// Quantized intensities. Pixels whose `valid` entry is 0 take part in no
/// count; an empty `valid` means every pixel is valid.
struct LabelPlane {
  int height = 0;
  int width = 0;
  int levels = 2;
  std::vector<std::uint16_t> labels;
  std::vector<std::uint8_t> valid;
  /// Fewer than two distinct labels among valid pixels.
  bool degenerate = false;

  [[nodiscard]] bool is_valid(std::size_t i) const noexcept { return valid.empty() || valid[i] != 0; }
  [[nodiscard]] std::uint16_t at(int y, int x) const noexcept {
    return labels[static_cast<std::size_t>(y) * width + x];
  }
  /// Number of distinct labels present among valid pixels.
  [[nodiscard]] int distinct_labels() const;
};

/// Lower value bound of each label run produced by equal-count binning.
/// Applying the edges to the plane they were computed from reproduces
/// quantize_equal_count exactly; applying them to a resampled copy keeps the
/// labeling consistent across resamplings.
struct QuantizationEdges {
  int levels = 2;
  std::vector<float> lower;            // ascending
  std::vector<std::uint16_t> label;    // label assigned from lower[k] upward
};

/// Equal-count (quantile) binning. Equal values always share a label; a tie
/// group starting at sorted rank r gets label floor(r * Q / N).
LabelPlane quantize_equal_count(const Plane& p, int levels);
LabelPlane quantize_equal_count(const Plane& p, std::span<const std::uint8_t> valid, int levels);

QuantizationEdges equal_count_edges(const Plane& p, std::span<const std::uint8_t> valid, int levels);
LabelPlane apply_edges(const Plane& p, std::span<const std::uint8_t> valid,
                       const QuantizationEdges& edges);

/// Inclusive rectangle of integer offsets (dy, dx).
struct OffsetWindow {
  int dy_min = 0;
  int dy_max = 0;
  int dx_min = 0;
  int dx_max = 0;

  static OffsetWindow square(int radius) { return {-radius, radius, -radius, radius}; }
  static OffsetWindow around(Offset c, int radius) {
    return {c.dy - radius, c.dy + radius, c.dx - radius, c.dx + radius};
  }
  [[nodiscard]] int rows() const noexcept { return dy_max - dy_min + 1; }
  [[nodiscard]] int cols() const noexcept { return dx_max - dx_min + 1; }
  [[nodiscard]] bool empty() const noexcept { return dy_max < dy_min || dx_max < dx_min; }
  [[nodiscard]] std::size_t cell_count() const noexcept {
    return empty() ? 0 : static_cast<std::size_t>(rows()) * cols();
  }
  [[nodiscard]] bool contains(Offset o) const noexcept {
    return o.dy >= dy_min && o.dy <= dy_max && o.dx >= dx_min && o.dx <= dx_max;
  }
  [[nodiscard]] std::size_t index(Offset o) const noexcept {
    return static_cast<std::size_t>(o.dy - dy_min) * cols() + static_cast<std::size_t>(o.dx - dx_min);
  }
  [[nodiscard]] Offset offset(std::size_t i) const noexcept {
    return {dy_min + static_cast<int>(i / cols()), dx_min + static_cast<int>(i % cols())};
  }
};

/// Mutual information (nats) as a function of integer translation t, where
/// the joint histogram at t pairs fixed(x) with moving(x + t).
struct MISurface {
  OffsetWindow window;
  std::vector<double> mi;              // -inf where overlap < min_overlap
  std::vector<std::int64_t> overlap;   // valid pixel pairs per offset
  Offset best_offset;
  double best_mi = -std::numeric_limits<double>::infinity();
  /// Either input had a single label; mi is 0 wherever admissible.
  bool degenerate = false;
  /// At least one offset reached min_overlap.
  bool any_admissible = false;

  [[nodiscard]] double mi_at(Offset o) const { return mi[window.index(o)]; }
  [[nodiscard]] std::int64_t overlap_at(Offset o) const { return overlap[window.index(o)]; }
};

/// MI from a row-major fixed-level x moving-level joint count table.
double mutual_information(std::span<const std::int64_t> joint, int fixed_levels, int moving_levels);

/// Frequency-domain evaluation: one FFT per label indicator plane, one
/// inverse FFT per label pair. Counts are exact integers.
MISurface mi_surface(const LabelPlane& fixed, const LabelPlane& moving, const OffsetWindow& window,
                     std::int64_t min_overlap);

/// Same quantities by direct per-offset counting; cheaper for small windows.
MISurface mi_surface_direct(const LabelPlane& fixed, const LabelPlane& moving,
                            const OffsetWindow& window, std::int64_t min_overlap);

/// Offsets in [-R, R]^2.
MISurface mi_surface_translation(const LabelPlane& fixed, const LabelPlane& moving, int radius,
                                 std::int64_t min_overlap);

/// BF: 1 - mean(RGB) / max(mean(RGB)), so dark stain becomes bright.
/// FL: mean of the channels.
Plane reduce_for_registration(const MultiChannelImage& img);

// ---------------------------------------------------------------------------
// Rigid registration

struct GlobalRegistrationConfig {
  double scale = 1.472;
  /// Coarse angle candidates in degrees. Empty means -179..180 in coarse steps.
  std::vector<double> angle_grid_deg;
  double coarse_step_deg = 1.0;
  double fine_step_deg = 0.1;
  /// Bound on |R(-theta) t| per axis, in fixed-frame pixels; < 0 is unbounded.
  int max_shift_px = -1;
  int levels = 16;
  double min_overlap_frac = 0.25;
  /// Number of 2x pyramid reductions before the coarse search; < 0 picks the
  /// smallest count that brings the fixed plane's longer side to at most
  /// coarse_max_side. With 0, refinement runs on the input resolution.
  int pyramid_levels = -1;
  int coarse_max_side = 64;
  /// Distinct coarse angles carried into the first refinement level.
  int coarse_candidates = 8;
  /// Quantization levels for the coarse angle screen when a pyramid is
  /// used; 0 uses `levels`. Refinement levels always use `levels`.
  int coarse_levels = 8;
  /// Translation search radius (px) around the prediction at refinement levels.
  int local_radius = 3;

  [[nodiscard]] std::vector<double> effective_angle_grid() const;
};

struct GlobalRegistrationResult {
  RigidTransform2D transform;
  double mi_nats = 0.0;
  int pyramid_levels = 0;
};

/// Rotation + translation search with known scale. Throws DegenerateInput
/// for a constant plane and NoValidOverlap when no offset reaches the
/// overlap floor at any angle.
GlobalRegistrationResult register_rigid_global(const Plane& fixed, const Plane& moving,
                                               const GlobalRegistrationConfig& cfg = {});

struct RefineConfig {
  int max_shift_px = 16;
  int levels = 16;
  double min_overlap_frac = 0.5;
};

struct RefineResult {
  /// Shift of the best window relative to the centered placement.
  Offset offset;
  double mi_nats = 0.0;
  /// Quantization collapsed (flat patch or flat region): no usable estimate.
  bool low_contrast = false;
  bool no_overlap = false;

  [[nodiscard]] bool failed() const noexcept { return low_contrast || no_overlap; }
};

/// Translation-only MI match of a fixed patch inside a larger moving region
/// already resampled into the fixed pixel grid. `moving_valid` may be empty.
RefineResult refine_translation(const Plane& fixed_patch, const Plane& moving_region,
                                std::span<const std::uint8_t> moving_valid,
                                const RefineConfig& cfg = {});

}  // namespace mmcyto
