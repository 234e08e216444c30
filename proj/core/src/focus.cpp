#include "mmcyto/focus.hpp"

#include <cmath>
#include <cstdlib>

#include "mmcyto/cmif.hpp"
#include "mmcyto/error.hpp"

namespace mmcyto {

double lap2_score(const Plane& p, double center_sigma) {
  if (p.height() < 3 || p.width() < 3) {
    throw Error(ErrorCode::TooSmall, "lap2_score needs at least a 3x3 plane");
  }
  if (!(center_sigma > 0.0)) throw Error(ErrorCode::NonPositiveSigma, "lap2_score: center_sigma must be > 0");
  const double cy = (p.height() - 1) / 2.0;
  const double cx = (p.width() - 1) / 2.0;
  const double k = -0.5 / (center_sigma * center_sigma);

  std::vector<double> wx(static_cast<std::size_t>(p.width()));
  for (int x = 0; x < p.width(); ++x) wx[static_cast<std::size_t>(x)] = std::exp(k * (x - cx) * (x - cx));

  double num = 0.0;
  double den = 0.0;
  for (int y = 1; y < p.height() - 1; ++y) {
    const double wy = std::exp(k * (y - cy) * (y - cy));
    const auto up = p.row(y - 1);
    const auto mid = p.row(y);
    const auto dn = p.row(y + 1);
    double row_num = 0.0;
    double row_den = 0.0;
    for (int x = 1; x < p.width() - 1; ++x) {
      const auto i = static_cast<std::size_t>(x);
      const double c2 = 2.0 * mid[i];
      const double ml = std::abs(c2 - mid[i - 1] - mid[i + 1]) + std::abs(c2 - up[i] - dn[i]);
      row_num += wx[i] * ml;
      row_den += wx[i];
    }
    num += wy * row_num;
    den += wy * row_den;
  }
  return num / den;
}

FocusChoice select_best_focus(const ZStack& z, double center_sigma) {
  if (z.empty()) throw Error(ErrorCode::InvalidArgument, "select_best_focus: empty stack");
  const std::size_t n = z.size();
  const std::size_t mid = z.middle_index();
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = lap2_score(reduce_for_registration(z.levels[i]), center_sigma);

  auto dist = [&](std::size_t i) { return i > mid ? i - mid : mid - i; };
  FocusChoice best{mid, scores[mid], false};
  for (std::size_t i = 0; i < n; ++i) {
    if (scores[i] > best.score ||
        (scores[i] == best.score && (dist(i) < dist(best.index) ||
                                     (dist(i) == dist(best.index) && i < best.index)))) {
      best = {i, scores[i], false};
    }
  }
  if (best.score <= 0.0) best = {mid, 0.0, true};
  return best;
}

double contrast_score(const MultiChannelImage& patch, double center_sigma) {
  return lap2_score(reduce_for_registration(patch), center_sigma);
}

}  // namespace mmcyto
