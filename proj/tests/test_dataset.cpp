#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "mmcyto/dataset.hpp"
#include "mmcyto/error.hpp"
#include "oracles.hpp"

using namespace mmcyto;

namespace {

const std::string kPartitions = std::string(MMCYTO_TEST_DATA) + "/oc_partitions.csv";

PatchPair pair_of(int size, std::uint64_t seed) {
  PatchPair p;
  p.bf_patch = {Modality::BF, {}, default_channel_names(Modality::BF)};
  p.fl_patch = {Modality::FL, {}, default_channel_names(Modality::FL)};
  for (int c = 0; c < 3; ++c) p.bf_patch.channels.push_back(oracle::random_plane(size, size, seed + c));
  for (int c = 0; c < 4; ++c) p.fl_patch.channels.push_back(oracle::random_plane(size, size, seed + 10 + c));
  return p;
}

void expect_disjoint(const FoldPatients& f) {
  for (const auto& p : f.train) {
    EXPECT_EQ(f.val.count(p), 0U);
    EXPECT_EQ(f.test.count(p), 0U);
  }
  for (const auto& p : f.val) EXPECT_EQ(f.test.count(p), 0U);
}

}  // namespace

TEST(Labels, CancerIsPositive) {
  std::vector<PatchRecord> m(3);
  m[0].patient_id = "A";
  m[1].patient_id = "B";
  m[2].patient_id = "A";
  const auto c = assign_labels(m, {{"A", Diagnosis::Cancer, {}}, {"B", Diagnosis::Healthy, {}}});
  EXPECT_EQ(c.positive, 2);
  EXPECT_EQ(c.negative, 1);
  EXPECT_EQ(m[0].label, CellLabel::Positive);
  EXPECT_EQ(m[1].label, CellLabel::Negative);
}

TEST(Labels, EmptyManifestAndUnknownPatient) {
  std::vector<PatchRecord> m;
  const auto c = assign_labels(m, {});
  EXPECT_EQ(c.positive + c.negative, 0);
  m.resize(1);
  m[0].patient_id = "Z";
  try {
    (void)assign_labels(m, {{"A", Diagnosis::Cancer, {}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownPatient);
  }
}

TEST(Labels, DatasetTotals) {
  const auto pp = fixture::load_reference_partitions(kPartitions);
  LabelCounts total;
  for (const auto& p : pp.patients) {
    std::vector<PatchRecord> m(static_cast<std::size_t>(pp.counts.at(p.patient_id)));
    for (auto& r : m) r.patient_id = p.patient_id;
    const auto c = assign_labels(m, pp.patients);
    total.positive += c.positive;
    total.negative += c.negative;
  }
  EXPECT_EQ(total.positive, 167398);
  EXPECT_EQ(total.negative, 599167);
}

TEST(Plan, ExplicitMapReproducesGroups) {
  const auto pp = fixture::load_reference_partitions(kPartitions);
  const auto plan = plan_partitions(pp.patients, pp.counts, 4, pp.partition);
  ASSERT_EQ(plan.summary.size(), 4U);
  const std::int64_t cancer[] = {40764, 39605, 42523, 44506};
  const std::int64_t healthy[] = {149796, 144914, 147769, 156688};
  const int patients[] = {5, 5, 4, 5};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(plan.summary[i].cancer_patches, cancer[i]);
    EXPECT_EQ(plan.summary[i].healthy_patches, healthy[i]);
    EXPECT_EQ(plan.summary[i].patients(), patients[i]);
    EXPECT_EQ(plan.summary[i].cancer_patients, 2);
  }
  EXPECT_EQ(plan.summary[0].patches(), 190560);
}

TEST(Plan, ExplicitMapMustCoverEveryone) {
  const auto pp = fixture::load_reference_partitions(kPartitions);
  auto partial = pp.partition;
  partial.erase("HC05");
  EXPECT_THROW((void)plan_partitions(pp.patients, pp.counts, 4, partial), Error);
}

TEST(Plan, AutoModeBalancesReferenceShapedInput) {
  const auto pp = fixture::load_reference_partitions(kPartitions);
  const auto plan = plan_partitions(pp.patients, pp.counts, 4);
  std::set<std::string> seen;
  for (const auto& s : plan.summary) {
    EXPECT_EQ(s.cancer_patients, 2);
    EXPECT_NEAR(s.cancer_ratio(), 0.22, 0.03);
  }
  EXPECT_EQ(plan.partition_of_patient.size(), 19U);
  EXPECT_TRUE(plan.warnings.empty());
}

TEST(Plan, FourPatientsOneEach) {
  std::vector<PatientRecord> p{{"a", Diagnosis::Cancer, {}}, {"b", Diagnosis::Cancer, {}},
                               {"c", Diagnosis::Cancer, {}}, {"d", Diagnosis::Cancer, {}}};
  const auto plan = plan_partitions(p, {{"a", 10}, {"b", 20}, {"c", 30}, {"d", 40}}, 4);
  for (const auto& s : plan.summary) EXPECT_EQ(s.patients(), 1);
}

TEST(Plan, FewCancerPatientsWarns) {
  std::vector<PatientRecord> p{{"a", Diagnosis::Cancer, {}}, {"b", Diagnosis::Healthy, {}},
                               {"c", Diagnosis::Healthy, {}}, {"d", Diagnosis::Healthy, {}}};
  const auto plan = plan_partitions(p, {{"a", 10}, {"b", 20}, {"c", 30}, {"d", 40}}, 4);
  ASSERT_FALSE(plan.warnings.empty());
  EXPECT_NE(plan.warnings[0].find("InfeasibleBalance"), std::string::npos);
  EXPECT_EQ(plan.partition_of_patient.size(), 4U);
}

TEST(Folds, InitialValidation) {
  const auto pp = fixture::load_reference_partitions(kPartitions);
  const auto plan = plan_partitions(pp.patients, pp.counts, 4, pp.partition);
  const auto folds = make_folds(plan, Phase::InitialValidation);
  ASSERT_EQ(folds.size(), 3U);
  EXPECT_EQ(folds[1].test_partition, 2);
  EXPECT_EQ(folds[1].val_partition, 0);
  EXPECT_EQ(folds[1].train_partitions, (std::vector<int>{1, 3}));
  for (const auto& f : folds) expect_disjoint(patients_in_fold(plan, f));
}

TEST(Folds, FullTraining) {
  const auto pp = fixture::load_reference_partitions(kPartitions);
  const auto plan = plan_partitions(pp.patients, pp.counts, 4, pp.partition);
  const auto folds = make_folds(plan, Phase::FullTraining);
  ASSERT_EQ(folds.size(), 3U);
  EXPECT_EQ(folds[0].test_partition, 1);
  EXPECT_EQ(folds[0].train_partitions, (std::vector<int>{0, 2, 3}));
  EXPECT_FALSE(folds[0].val_partition.has_value());
  for (const auto& f : folds) {
    const auto fp = patients_in_fold(plan, f);
    expect_disjoint(fp);
    EXPECT_EQ(fp.train.size() + fp.test.size(), 19U);
  }
}

TEST(Folds, NeedFourPartitions) {
  const auto pp = fixture::load_reference_partitions(kPartitions);
  const auto plan = plan_partitions(pp.patients, pp.counts, 3);
  try {
    (void)make_folds(plan, Phase::FullTraining);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadPartitionCount);
  }
}

TEST(Shift, ZeroIsIdentity) {
  const auto p = pair_of(32, 1);
  const auto q = inject_misalignment(p, 0);
  EXPECT_EQ(q.bf_patch.channels, p.bf_patch.channels);
  EXPECT_EQ(q.fl_patch.channels, p.fl_patch.channels);
  EXPECT_EQ(q.record.shift_px, 0);
}

TEST(Shift, ColumnsMoveRightFlUntouched) {
  const auto p = pair_of(32, 2);
  const auto q = inject_misalignment(p, 8);
  EXPECT_EQ(q.record.shift_px, 8);
  EXPECT_EQ(q.fl_patch.channels, p.fl_patch.channels);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 32; ++y) {
      for (int x = 8; x < 32; ++x) EXPECT_EQ(q.bf_patch.channels[c].at(y, x), p.bf_patch.channels[c].at(y, x - 8));
      // Half-sample reflection of the vacated strip.
      for (int x = 0; x < 8; ++x) EXPECT_EQ(q.bf_patch.channels[c].at(y, x), p.bf_patch.channels[c].at(y, 7 - x));
    }
}

TEST(Shift, Composes) {
  const auto p = pair_of(40, 3);
  const auto twice = inject_misalignment(inject_misalignment(p, 4), 4);
  const auto once = inject_misalignment(p, 8);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 40; ++y)
      for (int x = 8; x < 40; ++x) EXPECT_EQ(twice.bf_patch.channels[c].at(y, x), once.bf_patch.channels[c].at(y, x));
}

TEST(Shift, Errors) {
  const auto p = pair_of(16, 4);
  try {
    (void)inject_misalignment(p, 16);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShiftTooLarge);
  }
  EXPECT_NO_THROW((void)inject_misalignment(p, 15));
  EXPECT_THROW((void)inject_misalignment(p, -1), Error);
}
