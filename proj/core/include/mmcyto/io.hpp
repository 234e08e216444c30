#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmcyto/dataset.hpp"
#include "mmcyto/image.hpp"
#include "mmcyto/metrics.hpp"
#include "mmcyto/patch.hpp"
#include "mmcyto/peaks.hpp"
#include "mmcyto/phantom.hpp"
#include "mmcyto/transform.hpp"

namespace mmcyto {

std::string read_file(const std::string& path);
/// Writes to a sibling temporary file, then renames over the target.
void write_file_atomic(const std::string& path, const std::string& bytes);

// Slide descriptor: {"modality","pixel_size_um","z_offsets_um","channels","paths"}
// with paths ordered z-major then channel, relative to the descriptor's
// directory. A path may select a page with a "#k" suffix.
ZStack load_slide(const std::string& descriptor_path);
/// One single-page TIFF per (z, channel) named <stem>_z<i>_c<c>.tif next to
/// the descriptor.
void save_slide(const std::string& descriptor_path, const ZStack& stack);

std::string nuclei_to_csv(const std::vector<NucleusRecord>& nuclei);
std::vector<NucleusRecord> nuclei_from_csv(const std::string& text);

/// `patient_id,diagnosis` with an optional third `slide_ids` column
/// (semicolon separated).
std::string patients_to_csv(const std::vector<PatientRecord>& patients);
std::vector<PatientRecord> patients_from_csv(const std::string& text);

std::string record_to_json(const PatchRecord& r);
PatchRecord record_from_json(const std::string& line);
std::string manifest_to_jsonl(const std::vector<PatchRecord>& records);
std::vector<PatchRecord> manifest_from_jsonl(const std::string& text);

std::string transform_to_json(const RigidTransform2D& t, double mi_nats);
RigidTransform2D transform_from_json(const std::string& text, double* mi_nats = nullptr);

std::string fold_plan_to_json(const FoldPlan& plan);
FoldPlan fold_plan_from_json(const std::string& text);

std::string phantom_truth_to_json(const PhantomTruth& truth);
PhantomTruth phantom_truth_from_json(const std::string& text);

std::string metric_report_to_json(const MetricReport& r, const ConfusionCounts* counts = nullptr);
std::string fold_summary_to_json(const FoldSummary& s);
/// Header `tn,fp,fn,tp` followed by one row per entry.
std::string confusion_to_csv(const std::vector<ConfusionCounts>& rows);

std::string patient_predictions_to_json(const std::vector<PatientPrediction>& preds,
                                        const std::map<std::string, int>& truth);

std::string qc_report_to_json(const QcReport& r);

/// Lines of {"patient_id","label","score"[,"fold"]}; label is 0/1 or
/// "positive"/"negative".
struct ScoredCell {
  std::string patient_id;
  int label = 0;
  double score = 0.0;
  int fold = 0;
};
std::vector<ScoredCell> scored_cells_from_jsonl(const std::string& text);

/// Patch pixels: pages ordered channel-major.
void write_patch(const std::string& path, const MultiChannelImage& img);
MultiChannelImage read_patch(const std::string& path, Modality m);

}  // namespace mmcyto
