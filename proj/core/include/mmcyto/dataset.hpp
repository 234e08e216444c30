#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mmcyto/patch.hpp"

namespace mmcyto {

enum class Diagnosis { Cancer, Healthy };
std::string to_string(Diagnosis d);
Diagnosis diagnosis_from_string(const std::string& s);

struct PatientRecord {
  std::string patient_id;
  Diagnosis diagnosis = Diagnosis::Healthy;
  std::vector<std::string> slide_ids;
};

struct LabelCounts {
  std::int64_t positive = 0;
  std::int64_t negative = 0;
};

/// Sets every record's label from its patient's diagnosis (cancer is
/// positive). Throws UnknownPatient for a patient id missing from the list.
LabelCounts assign_labels(std::vector<PatchRecord>& manifest, const std::vector<PatientRecord>& patients);

enum class Phase { InitialValidation, FullTraining };
std::string to_string(Phase p);
Phase phase_from_string(const std::string& s);

struct Fold {
  int index = 0;
  std::vector<int> train_partitions;
  std::optional<int> val_partition;
  int test_partition = 0;

  friend bool operator==(const Fold&, const Fold&) = default;
};

struct PartitionSummary {
  int partition = 0;
  int cancer_patients = 0;
  int healthy_patients = 0;
  std::int64_t cancer_patches = 0;
  std::int64_t healthy_patches = 0;

  [[nodiscard]] int patients() const noexcept { return cancer_patients + healthy_patients; }
  [[nodiscard]] std::int64_t patches() const noexcept { return cancer_patches + healthy_patches; }
  [[nodiscard]] double cancer_ratio() const noexcept {
    return patches() > 0 ? static_cast<double>(cancer_patches) / static_cast<double>(patches()) : 0.0;
  }
};

struct FoldPlan {
  int n_partitions = 4;
  std::map<std::string, int> partition_of_patient;
  std::vector<PartitionSummary> summary;
  Phase phase = Phase::InitialValidation;
  std::vector<Fold> folds;
  std::vector<std::string> warnings;
};

/// Explicit mode uses the given map, which must cover every patient.
/// Auto mode: cancer patients by descending patch count are dealt to
/// partitions in snake order; healthy patients are then placed on the
/// partition with the smallest total, and single moves and swaps between
/// partitions are applied while they reduce the spread of cancer ratios.
/// Fewer cancer patients than partitions adds an InfeasibleBalance warning.
FoldPlan plan_partitions(const std::vector<PatientRecord>& patients,
                         const std::map<std::string, std::int64_t>& patch_counts, int n_partitions = 4,
                         const std::optional<std::map<std::string, int>>& explicit_map = std::nullopt);

/// Three folds; fold i tests partition i + 1. InitialValidation validates on
/// partition 0, FullTraining trains on it. Throws BadPartitionCount unless
/// the plan has 4 partitions.
std::vector<Fold> make_folds(const FoldPlan& plan, Phase phase);

struct FoldPatients {
  std::set<std::string> train;
  std::set<std::string> val;
  std::set<std::string> test;
};
FoldPatients patients_in_fold(const FoldPlan& plan, const Fold& fold);

/// Shift columns right by d: column c takes former column c - d; the
/// vacated strip is filled by half-sample reflection.
MultiChannelImage shift_columns(const MultiChannelImage& img, int d);

/// BF patch shifted by (d, 0); FL untouched; shift recorded on the record.
/// Throws ShiftTooLarge when d >= patch width, InvalidArgument when d < 0.
PatchPair inject_misalignment(const PatchPair& pair, int d);

}  // namespace mmcyto
