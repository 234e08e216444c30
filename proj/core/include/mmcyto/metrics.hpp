#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mmcyto {

struct ConfusionCounts {
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tp = 0;

  [[nodiscard]] std::int64_t total() const noexcept { return tn + fp + fn + tp; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    tp += o.tp;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Labels are 0/1 with 1 = cancer. Throws LengthMismatch, or InvalidArgument
/// for a label other than 0 or 1.
ConfusionCounts confusion(std::span<const int> pred, std::span<const int> truth);

struct MetricReport {
  double f1 = 0.0;
  double accuracy = 0.0;
  std::optional<double> roc_auc;
  double recall = 0.0;
  double precision = 0.0;
  /// Names of metrics whose denominator was zero (reported as 0).
  std::vector<std::string> undefined;
};

/// Throws EmptyCounts for an all-zero table.
MetricReport compute_metrics(const ConfusionCounts& c);

/// Mann-Whitney AUC with ties counted one half. Throws SingleClass.
double roc_auc(std::span<const double> scores, std::span<const int> truth);

/// Per-fold summary: mean and population standard deviation of each metric,
/// plus the metrics of the pooled confusion table.
struct FoldSummary {
  MetricReport mean;
  MetricReport stddev;
  MetricReport pooled;
  ConfusionCounts pooled_counts;
  int folds = 0;
};
FoldSummary summarize_folds(const std::vector<ConfusionCounts>& per_fold,
                            const std::vector<std::optional<double>>& per_fold_auc = {});

struct PatientPrediction {
  std::string patient_id;
  std::int64_t cells = 0;
  std::int64_t positive_cells = 0;
  double ratio = 0.0;
  bool positive = false;
};

/// Per patient: ratio of cells scoring above cell_threshold; the patient is
/// positive when the ratio is at least patient_threshold. Output sorted by
/// patient id. Throws EmptyPatient for a patient without cells.
std::vector<PatientPrediction> aggregate_patient(const std::map<std::string, std::vector<double>>& cell_scores,
                                                 double cell_threshold = 0.5, double patient_threshold = 0.6);

}  // namespace mmcyto
