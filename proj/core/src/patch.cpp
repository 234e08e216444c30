#include "mmcyto/patch.hpp"

#include <cmath>

#include "mmcyto/error.hpp"
#include "mmcyto/focus.hpp"

namespace mmcyto {

std::string to_string(QcFlag f) {
  switch (f) {
    case QcFlag::LowContrast: return "LowContrast";
    case QcFlag::FailedRegistration: return "FailedRegistration";
    case QcFlag::NeighborInconsistent: return "NeighborInconsistent";
    case QcFlag::Border: return "Border";
  }
  return "?";
}

QcFlag qc_flag_from_string(const std::string& s) {
  for (auto f : {QcFlag::LowContrast, QcFlag::FailedRegistration, QcFlag::NeighborInconsistent, QcFlag::Border}) {
    if (to_string(f) == s) return f;
  }
  throw Error(ErrorCode::Parse, "unknown qc flag: " + s);
}

std::vector<QcFlag> QcFlags::list() const {
  std::vector<QcFlag> out;
  for (auto f : {QcFlag::LowContrast, QcFlag::FailedRegistration, QcFlag::NeighborInconsistent, QcFlag::Border}) {
    if (has(f)) out.push_back(f);
  }
  return out;
}

std::string to_string(CellLabel l) { return l == CellLabel::Positive ? "positive" : "negative"; }

CellLabel cell_label_from_string(const std::string& s) {
  if (s == "positive") return CellLabel::Positive;
  if (s == "negative") return CellLabel::Negative;
  throw Error(ErrorCode::Parse, "unknown label: " + s);
}

PixelWindow window_around(int center_x, int center_y, int size) {
  return {center_y - size / 2, center_x - size / 2, size};
}

namespace {

bool inside(const PixelWindow& w, int h, int wd) {
  return w.y0 >= 0 && w.x0 >= 0 && w.y0 + w.size <= h && w.x0 + w.size <= wd;
}

MultiChannelImage cut(const MultiChannelImage& img, const PixelWindow& w) {
  MultiChannelImage out{img.modality, {}, img.channel_names};
  out.channels.reserve(img.channels.size());
  for (const auto& c : img.channels) out.channels.push_back(c.crop(w.y0, w.x0, w.size, w.size));
  return out;
}

int round_px(double v) { return static_cast<int>(std::lround(v)); }

}  // namespace

std::vector<MultiChannelImage> extract_patch(const ZStack& stack, int center_x, int center_y, int size) {
  if (stack.empty()) throw Error(ErrorCode::InvalidArgument, "extract_patch: empty stack");
  if (size <= 0) throw Error(ErrorCode::InvalidArgument, "extract_patch: size must be positive");
  const auto w = window_around(center_x, center_y, size);
  if (!inside(w, stack.levels.front().height(), stack.levels.front().width())) {
    throw Error(ErrorCode::Border, "extract_patch: window leaves the slide");
  }
  std::vector<MultiChannelImage> out;
  out.reserve(stack.size());
  for (const auto& lv : stack.levels) out.push_back(cut(lv, w));
  return out;
}

Point2 map_to_moving(Point2 coord, const RigidTransform2D& t) { return t.apply(coord); }

Point2 map_to_moving(Point2 coord, const RigidTransform2D& t, int moving_h, int moving_w) {
  const Point2 m = t.apply(coord);
  if (!(m.x >= 0.0 && m.y >= 0.0 && m.x <= moving_w - 1 && m.y <= moving_h - 1)) {
    throw Error(ErrorCode::OutOfMovingBounds, "map_to_moving: point outside the moving image");
  }
  return m;
}

PatchPair process_nucleus(const NucleusRecord& n, const ZStack& bf, const ZStack& fl,
                          const RigidTransform2D& t, const PipelineConfig& cfg, const std::string& id,
                          const std::string& patient_id) {
  if (bf.empty() || fl.empty()) throw Error(ErrorCode::InvalidArgument, "process_nucleus: empty stack");
  PatchPair out;
  auto& rec = out.record;
  rec.id = id;
  rec.patient_id = patient_id;
  rec.slide_id = n.slide_id;
  rec.x_px = n.x_px;
  rec.y_px = n.y_px;

  const int size = cfg.patch_size;
  const int radius = cfg.refine.max_shift_px;
  const int cx = round_px(n.x_px);
  const int cy = round_px(n.y_px);
  const auto bf_win = window_around(cx, cy, size);
  const int bf_h = bf.levels.front().height();
  const int bf_w = bf.levels.front().width();
  const int fl_h = fl.levels.front().height();
  const int fl_w = fl.levels.front().width();
  if (!inside(bf_win, bf_h, bf_w)) {
    rec.qc_flags.set(QcFlag::Border);
    return out;
  }

  const Point2 cm = map_to_moving({static_cast<double>(cx), static_cast<double>(cy)}, t);
  const auto fl_win = window_around(round_px(cm.x), round_px(cm.y), cfg.fl_region_size);
  if (!inside(fl_win, fl_h, fl_w)) {
    rec.qc_flags.set(QcFlag::Border);
    return out;
  }

  ZStack bf_cut;
  bf_cut.z_offsets_um = bf.z_offsets_um;
  for (const auto& lv : bf.levels) bf_cut.levels.push_back(cut(lv, bf_win));
  const auto bf_focus = select_best_focus(bf_cut, cfg.center_sigma);
  rec.focus_bf = static_cast<int>(bf_focus.index);

  // Search region: FL middle level, resampled into a BF-grid window that
  // extends the patch by the search radius on every side.
  const auto& fl_mid = fl.levels[fl.middle_index()];
  const Plane fl_region = reduce_for_registration(cut(fl_mid, fl_win));
  const int region = size + 2 * radius;
  const Point2 region_origin{static_cast<double>(bf_win.x0 - radius), static_cast<double>(bf_win.y0 - radius)};
  const Point2 fl_origin{static_cast<double>(fl_win.x0), static_cast<double>(fl_win.y0)};
  const auto moving = resample_rigid(fl_region, t.shifted_input(region_origin).shifted_output(fl_origin), region, region);
  const Plane fixed = reduce_for_registration(bf_cut.levels[bf_cut.middle_index()]);
  const auto refined = refine_translation(fixed, moving.plane, moving.valid, cfg.refine);
  if (refined.failed()) {
    rec.qc_flags.set(QcFlag::FailedRegistration);
  } else {
    rec.refine_dy = refined.offset.dy;
    rec.refine_dx = refined.offset.dx;
    rec.mi_nats = refined.mi_nats;
  }

  // FL cut-outs at the refined position, sampled straight from each level.
  const Point2 patch_origin{static_cast<double>(bf_win.x0 + rec.refine_dx),
                            static_cast<double>(bf_win.y0 + rec.refine_dy)};
  const auto tp = t.shifted_input(patch_origin);
  const double px = bf.levels.front().pixel_size_um();
  ZStack fl_cut;
  fl_cut.z_offsets_um = fl.z_offsets_um;
  for (const auto& lv : fl.levels) {
    MultiChannelImage img{lv.modality, {}, lv.channel_names};
    for (const auto& ch : lv.channels) {
      auto r = resample_rigid(ch, tp, size, size);
      r.plane.set_pixel_size_um(px);
      img.channels.push_back(std::move(r.plane));
    }
    fl_cut.levels.push_back(std::move(img));
  }
  const auto fl_focus = select_best_focus(fl_cut, cfg.center_sigma);
  rec.focus_fl = static_cast<int>(fl_focus.index);
  out.bf_patch = std::move(bf_cut.levels[bf_focus.index]);
  out.fl_patch = std::move(fl_cut.levels[fl_focus.index]);
  rec.contrast_fl = contrast_score(out.fl_patch, cfg.center_sigma);
  return out;
}

}  // namespace mmcyto
