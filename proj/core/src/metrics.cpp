#include "mmcyto/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmcyto/error.hpp"

namespace mmcyto {

ConfusionCounts confusion(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw Error(ErrorCode::LengthMismatch, "confusion: length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int p = pred[i], t = truth[i];
    if ((p != 0 && p != 1) || (t != 0 && t != 1)) throw Error(ErrorCode::InvalidArgument, "confusion: labels must be 0 or 1");
    if (p == 1 && t == 1) ++c.tp;
    else if (p == 1) ++c.fp;
    else if (t == 1) ++c.fn;
    else ++c.tn;
  }
  return c;
}

MetricReport compute_metrics(const ConfusionCounts& c) {
  if (c.tn < 0 || c.fp < 0 || c.fn < 0 || c.tp < 0) throw Error(ErrorCode::InvalidArgument, "negative count");
  if (c.total() == 0) throw Error(ErrorCode::EmptyCounts, "compute_metrics: empty confusion table");
  MetricReport r;
  auto ratio = [&](std::int64_t num, std::int64_t den, const char* name) {
    if (den == 0) {
      r.undefined.emplace_back(name);
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.accuracy = ratio(c.tp + c.tn, c.total(), "accuracy");
  r.precision = ratio(c.tp, c.tp + c.fp, "precision");
  r.recall = ratio(c.tp, c.tp + c.fn, "recall");
  r.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, "f1");
  if (c.tp == 0 && c.fn > 0 && std::find(r.undefined.begin(), r.undefined.end(), "f1") == r.undefined.end()) {
    r.undefined.emplace_back("f1");
  }
  return r;
}

double roc_auc(std::span<const double> scores, std::span<const int> truth) {
  if (scores.size() != truth.size()) throw Error(ErrorCode::LengthMismatch, "roc_auc: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::int64_t pos = 0, neg = 0;
  for (int t : truth) {
    if (t == 1) ++pos;
    else if (t == 0) ++neg;
    else throw Error(ErrorCode::InvalidArgument, "roc_auc: labels must be 0 or 1");
  }
  if (pos == 0 || neg == 0) throw Error(ErrorCode::SingleClass, "roc_auc: both classes required");

  // Twice the Mann-Whitney U statistic, kept integral.
  std::int64_t u2 = 0;
  std::int64_t neg_below = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::int64_t gp = 0, gn = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (truth[order[j]] == 1 ? gp : gn) += 1;
      ++j;
    }
    u2 += gp * (2 * neg_below + gn);
    neg_below += gn;
    i = j;
  }
  return static_cast<double>(u2) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

FoldSummary summarize_folds(const std::vector<ConfusionCounts>& per_fold,
                            const std::vector<std::optional<double>>& per_fold_auc) {
  if (per_fold.empty()) throw Error(ErrorCode::EmptyCounts, "summarize_folds: no folds");
  FoldSummary s;
  s.folds = static_cast<int>(per_fold.size());
  std::vector<MetricReport> reports;
  for (const auto& c : per_fold) {
    reports.push_back(compute_metrics(c));
    s.pooled_counts += c;
  }
  s.pooled = compute_metrics(s.pooled_counts);

  auto mean_std = [&](auto get, double& mean, double& sd) {
    double sum = 0.0;
    for (const auto& r : reports) sum += get(r);
    mean = sum / static_cast<double>(reports.size());
    double ss = 0.0;
    for (const auto& r : reports) ss += (get(r) - mean) * (get(r) - mean);
    sd = std::sqrt(ss / static_cast<double>(reports.size()));
  };
  mean_std([](const MetricReport& r) { return r.f1; }, s.mean.f1, s.stddev.f1);
  mean_std([](const MetricReport& r) { return r.accuracy; }, s.mean.accuracy, s.stddev.accuracy);
  mean_std([](const MetricReport& r) { return r.recall; }, s.mean.recall, s.stddev.recall);
  mean_std([](const MetricReport& r) { return r.precision; }, s.mean.precision, s.stddev.precision);

  std::vector<double> aucs;
  for (const auto& a : per_fold_auc) {
    if (a) aucs.push_back(*a);
  }
  if (!aucs.empty() && aucs.size() == per_fold.size()) {
    const double m = std::accumulate(aucs.begin(), aucs.end(), 0.0) / static_cast<double>(aucs.size());
    double ss = 0.0;
    for (double a : aucs) ss += (a - m) * (a - m);
    s.mean.roc_auc = m;
    s.stddev.roc_auc = std::sqrt(ss / static_cast<double>(aucs.size()));
  }
  return s;
}

std::vector<PatientPrediction> aggregate_patient(const std::map<std::string, std::vector<double>>& cell_scores,
                                                 double cell_threshold, double patient_threshold) {
  std::vector<PatientPrediction> out;
  for (const auto& [id, scores] : cell_scores) {
    if (scores.empty()) throw Error(ErrorCode::EmptyPatient, "aggregate_patient: no cells for " + id);
    PatientPrediction p;
    p.patient_id = id;
    p.cells = static_cast<std::int64_t>(scores.size());
    p.positive_cells = std::count_if(scores.begin(), scores.end(), [&](double s) { return s > cell_threshold; });
    p.ratio = static_cast<double>(p.positive_cells) / static_cast<double>(p.cells);
    p.positive = p.ratio >= patient_threshold;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace mmcyto
