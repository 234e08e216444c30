#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmcyto/cmif.hpp"
#include "mmcyto/image.hpp"
#include "mmcyto/peaks.hpp"
#include "mmcyto/transform.hpp"

namespace mmcyto {

enum class QcFlag : std::uint8_t { LowContrast = 0, FailedRegistration = 1, NeighborInconsistent = 2, Border = 3 };

std::string to_string(QcFlag f);
QcFlag qc_flag_from_string(const std::string& s);

class QcFlags {
 public:
  void set(QcFlag f) noexcept { bits_ |= bit(f); }
  [[nodiscard]] bool has(QcFlag f) const noexcept { return (bits_ & bit(f)) != 0; }
  [[nodiscard]] bool empty() const noexcept { return bits_ == 0; }
  /// Flags in enum order.
  [[nodiscard]] std::vector<QcFlag> list() const;

  friend bool operator==(const QcFlags&, const QcFlags&) = default;

 private:
  static constexpr std::uint8_t bit(QcFlag f) noexcept {
    return static_cast<std::uint8_t>(1U << static_cast<unsigned>(f));
  }
  std::uint8_t bits_ = 0;
};

enum class CellLabel { Negative, Positive };
std::string to_string(CellLabel l);
CellLabel cell_label_from_string(const std::string& s);

/// One manifest line: everything about a patch pair except its pixels.
struct PatchRecord {
  std::string id;
  std::string patient_id;
  std::string slide_id;
  std::optional<CellLabel> label;
  std::string bf_path;
  std::string fl_path;
  double x_px = 0.0;  // nucleus position in the full-resolution BF frame
  double y_px = 0.0;
  int refine_dy = 0;
  int refine_dx = 0;
  double mi_nats = 0.0;
  int focus_bf = 0;
  int focus_fl = 0;
  double contrast_fl = 0.0;
  QcFlags qc_flags;
  /// Horizontal BF shift injected after extraction (0 for aligned data).
  int shift_px = 0;

  friend bool operator==(const PatchRecord&, const PatchRecord&) = default;
};

struct PatchPair {
  PatchRecord record;
  MultiChannelImage bf_patch;  // 3 channels, selected BF focus level
  MultiChannelImage fl_patch;  // 4 channels, selected FL focus level, BF pixel grid
};

struct PixelWindow {
  int y0 = 0;
  int x0 = 0;
  int size = 0;
};

/// Window of `size` pixels whose top-left is center - size/2.
PixelWindow window_around(int center_x, int center_y, int size);

/// Same window cut out of every level. Throws Border when it leaves the slide.
std::vector<MultiChannelImage> extract_patch(const ZStack& stack, int center_x, int center_y, int size);

/// Fixed (BF) coordinate to moving (FL) coordinate. When bounds are given,
/// throws OutOfMovingBounds for a result outside [0, w-1] x [0, h-1].
Point2 map_to_moving(Point2 coord, const RigidTransform2D& t);
Point2 map_to_moving(Point2 coord, const RigidTransform2D& t, int moving_h, int moving_w);

struct PipelineConfig {
  int patch_size = 256;
  /// Side of the FL search region (FL pixels) cut at the middle level.
  int fl_region_size = 768;
  RefineConfig refine;
  double center_sigma = 64.0;
};

/// Steps per nucleus: BF cut-outs and focus, FL search region at the middle
/// level, resampling into the BF grid, translation refinement, FL cut-outs
/// at the refined position and focus, FL contrast. Nuclei whose windows
/// leave either slide come back with only the Border flag and no pixels.
PatchPair process_nucleus(const NucleusRecord& n, const ZStack& bf, const ZStack& fl,
                          const RigidTransform2D& t, const PipelineConfig& cfg,
                          const std::string& id = {}, const std::string& patient_id = {});

struct QcConfig {
  double contrast_frac = 0.05;
  int neighbors = 8;
  double neighbor_cap_px = 2000.0;
  double tolerance_px = 8.0;
};

struct QcReport {
  std::int64_t input = 0;
  std::int64_t border = 0;
  std::int64_t low_contrast = 0;
  std::int64_t failed_registration = 0;
  std::int64_t neighbor_inconsistent = 0;
  std::int64_t kept = 0;
};

struct QcResult {
  std::vector<PatchRecord> kept;
  std::vector<PatchRecord> rejected;  // carrying the flag that removed them
  QcReport report;
};

/// Border records are removed first and excluded from every rule below.
/// Per slide: drop floor(contrast_frac * n) lowest-contrast pairs, then
/// failed registrations, then pairs whose offset differs from the
/// componentwise median of their k nearest remaining neighbors by more than
/// the tolerance (Chebyshev). Each rejected pair is counted once, under the
/// first rule that removed it. Kept pairs retain input order.
QcResult qc_filter(const std::vector<PatchRecord>& pairs, const QcConfig& cfg = {});

}  // namespace mmcyto
