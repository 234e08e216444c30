#include "mmcyto/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "mmcyto/error.hpp"

namespace mmcyto {

std::string to_string(Diagnosis d) { return d == Diagnosis::Cancer ? "cancer" : "healthy"; }

Diagnosis diagnosis_from_string(const std::string& s) {
  if (s == "cancer") return Diagnosis::Cancer;
  if (s == "healthy") return Diagnosis::Healthy;
  throw Error(ErrorCode::Parse, "unknown diagnosis: " + s);
}

std::string to_string(Phase p) { return p == Phase::InitialValidation ? "InitialValidation" : "FullTraining"; }

Phase phase_from_string(const std::string& s) {
  if (s == "InitialValidation") return Phase::InitialValidation;
  if (s == "FullTraining") return Phase::FullTraining;
  throw Error(ErrorCode::Parse, "unknown phase: " + s);
}

LabelCounts assign_labels(std::vector<PatchRecord>& manifest, const std::vector<PatientRecord>& patients) {
  std::map<std::string, Diagnosis> dx;
  for (const auto& p : patients) dx[p.patient_id] = p.diagnosis;
  LabelCounts counts;
  for (auto& r : manifest) {
    const auto it = dx.find(r.patient_id);
    if (it == dx.end()) throw Error(ErrorCode::UnknownPatient, "unknown patient: " + r.patient_id);
    const bool pos = it->second == Diagnosis::Cancer;
    r.label = pos ? CellLabel::Positive : CellLabel::Negative;
    ++(pos ? counts.positive : counts.negative);
  }
  return counts;
}

namespace {

struct Member {
  std::string id;
  Diagnosis dx;
  std::int64_t patches;
};

std::vector<PartitionSummary> summarize(const std::vector<Member>& members, const std::vector<int>& part, int n) {
  std::vector<PartitionSummary> s(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) s[static_cast<std::size_t>(p)].partition = p;
  for (std::size_t i = 0; i < members.size(); ++i) {
    auto& ps = s[static_cast<std::size_t>(part[i])];
    if (members[i].dx == Diagnosis::Cancer) {
      ++ps.cancer_patients;
      ps.cancer_patches += members[i].patches;
    } else {
      ++ps.healthy_patients;
      ps.healthy_patches += members[i].patches;
    }
  }
  return s;
}

double spread(const std::vector<Member>& members, const std::vector<int>& part, int n, double target) {
  double cost = 0.0;
  for (const auto& ps : summarize(members, part, n)) {
    const double d = ps.cancer_ratio() - target;
    cost += d * d;
  }
  return cost;
}

void balance(const std::vector<Member>& members, std::vector<int>& part, int n) {
  std::int64_t cancer = 0, total = 0;
  for (const auto& m : members) {
    total += m.patches;
    if (m.dx == Diagnosis::Cancer) cancer += m.patches;
  }
  if (total == 0) return;
  const double target = static_cast<double>(cancer) / static_cast<double>(total);

  std::int64_t healthy_n = 0;
  for (const auto& m : members) healthy_n += m.dx == Diagnosis::Healthy ? 1 : 0;
  const auto lo = static_cast<int>(healthy_n / n);
  const int hi = lo + (healthy_n % n != 0 ? 1 : 0);

  double best = spread(members, part, n, target);
  for (int iter = 0; iter < 1000; ++iter) {
    bool improved = false;
    // Moves of one healthy patient keep every partition within [lo, hi].
    for (std::size_t i = 0; i < members.size() && !improved; ++i) {
      if (members[i].dx != Diagnosis::Healthy) continue;
      const auto s = summarize(members, part, n);
      for (int q = 0; q < n && !improved; ++q) {
        const int from = part[i];
        if (q == from) continue;
        if (s[static_cast<std::size_t>(from)].healthy_patients - 1 < lo ||
            s[static_cast<std::size_t>(q)].healthy_patients + 1 > hi) {
          continue;
        }
        part[i] = q;
        const double c = spread(members, part, n, target);
        if (c < best - 1e-15) {
          best = c;
          improved = true;
        } else {
          part[i] = from;
        }
      }
    }
    // Swaps between two patients of the same diagnosis.
    for (std::size_t i = 0; i < members.size() && !improved; ++i) {
      for (std::size_t j = i + 1; j < members.size() && !improved; ++j) {
        if (members[i].dx != members[j].dx || part[i] == part[j]) continue;
        std::swap(part[i], part[j]);
        const double c = spread(members, part, n, target);
        if (c < best - 1e-15) {
          best = c;
          improved = true;
        } else {
          std::swap(part[i], part[j]);
        }
      }
    }
    if (!improved) break;
  }
}

}  // namespace

FoldPlan plan_partitions(const std::vector<PatientRecord>& patients,
                         const std::map<std::string, std::int64_t>& patch_counts, int n_partitions,
                         const std::optional<std::map<std::string, int>>& explicit_map) {
  if (n_partitions < 1) throw Error(ErrorCode::BadPartitionCount, "plan_partitions: need at least one partition");
  std::vector<Member> members;
  std::set<std::string> seen;
  for (const auto& p : patients) {
    if (!seen.insert(p.patient_id).second) {
      throw Error(ErrorCode::InvalidArgument, "plan_partitions: duplicate patient " + p.patient_id);
    }
    const auto it = patch_counts.find(p.patient_id);
    members.push_back({p.patient_id, p.diagnosis, it == patch_counts.end() ? 0 : it->second});
  }

  FoldPlan plan;
  plan.n_partitions = n_partitions;
  std::vector<int> part(members.size(), 0);

  if (explicit_map) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto it = explicit_map->find(members[i].id);
      if (it == explicit_map->end()) {
        throw Error(ErrorCode::UnknownPatient, "explicit partition map lacks patient " + members[i].id);
      }
      if (it->second < 0 || it->second >= n_partitions) {
        throw Error(ErrorCode::BadPartitionCount, "partition index out of range for " + members[i].id);
      }
      part[i] = it->second;
    }
  } else {
    std::vector<std::size_t> cancer, healthy;
    for (std::size_t i = 0; i < members.size(); ++i) {
      (members[i].dx == Diagnosis::Cancer ? cancer : healthy).push_back(i);
    }
    auto by_size = [&](std::size_t a, std::size_t b) {
      if (members[a].patches != members[b].patches) return members[a].patches > members[b].patches;
      return members[a].id < members[b].id;
    };
    std::sort(cancer.begin(), cancer.end(), by_size);
    std::sort(healthy.begin(), healthy.end(), by_size);
    if (static_cast<int>(cancer.size()) < n_partitions) {
      plan.warnings.push_back("InfeasibleBalance: fewer cancer patients than partitions");
    }
    for (std::size_t k = 0; k < cancer.size(); ++k) {
      const auto round = static_cast<int>(k / static_cast<std::size_t>(n_partitions));
      const auto pos = static_cast<int>(k % static_cast<std::size_t>(n_partitions));
      part[cancer[k]] = round % 2 == 0 ? pos : n_partitions - 1 - pos;
    }
    std::vector<std::int64_t> total(static_cast<std::size_t>(n_partitions), 0);
    std::vector<int> healthy_n(static_cast<std::size_t>(n_partitions), 0);
    for (auto i : cancer) total[static_cast<std::size_t>(part[i])] += members[i].patches;
    for (auto i : healthy) {
      // Smallest total among partitions holding the fewest healthy patients.
      int best = 0;
      for (int p = 1; p < n_partitions; ++p) {
        const auto sp = static_cast<std::size_t>(p);
        const auto sb = static_cast<std::size_t>(best);
        if (healthy_n[sp] < healthy_n[sb] || (healthy_n[sp] == healthy_n[sb] && total[sp] < total[sb])) best = p;
      }
      part[i] = best;
      total[static_cast<std::size_t>(best)] += members[i].patches;
      ++healthy_n[static_cast<std::size_t>(best)];
    }
    balance(members, part, n_partitions);
  }

  for (std::size_t i = 0; i < members.size(); ++i) plan.partition_of_patient[members[i].id] = part[i];
  plan.summary = summarize(members, part, n_partitions);
  if (n_partitions == 4) plan.folds = make_folds(plan, plan.phase);
  return plan;
}

std::vector<Fold> make_folds(const FoldPlan& plan, Phase phase) {
  if (plan.n_partitions != 4) throw Error(ErrorCode::BadPartitionCount, "make_folds: plan must have 4 partitions");
  std::vector<Fold> folds;
  for (int i = 0; i < 3; ++i) {
    Fold f;
    f.index = i;
    f.test_partition = i + 1;
    if (phase == Phase::InitialValidation) {
      f.val_partition = 0;
    } else {
      f.train_partitions.push_back(0);
    }
    for (int p = 1; p < 4; ++p) {
      if (p != f.test_partition) f.train_partitions.push_back(p);
    }
    folds.push_back(std::move(f));
  }
  return folds;
}

FoldPatients patients_in_fold(const FoldPlan& plan, const Fold& fold) {
  FoldPatients out;
  for (const auto& [id, p] : plan.partition_of_patient) {
    if (p == fold.test_partition) out.test.insert(id);
    if (fold.val_partition && p == *fold.val_partition) out.val.insert(id);
    if (std::find(fold.train_partitions.begin(), fold.train_partitions.end(), p) != fold.train_partitions.end()) {
      out.train.insert(id);
    }
  }
  return out;
}

MultiChannelImage shift_columns(const MultiChannelImage& img, int d) {
  if (d < 0) throw Error(ErrorCode::InvalidArgument, "shift must be non-negative");
  if (d >= img.width() && img.width() > 0) throw Error(ErrorCode::ShiftTooLarge, "shift exceeds patch width");
  if (d == 0) return img;
  MultiChannelImage out = img;
  const int w = img.width();
  for (std::size_t c = 0; c < img.channels.size(); ++c) {
    const auto& src = img.channels[c];
    auto& dst = out.channels[c];
    for (int y = 0; y < src.height(); ++y) {
      const auto s = src.row(y);
      auto o = dst.row(y);
      for (int x = 0; x < w; ++x) {
        const int from = x - d;
        o[static_cast<std::size_t>(x)] = s[static_cast<std::size_t>(from >= 0 ? from : -from - 1)];
      }
    }
  }
  return out;
}

PatchPair inject_misalignment(const PatchPair& pair, int d) {
  if (d >= 256 || (pair.bf_patch.width() > 0 && d >= pair.bf_patch.width())) {
    throw Error(ErrorCode::ShiftTooLarge, "inject_misalignment: shift too large");
  }
  PatchPair out = pair;
  out.bf_patch = shift_columns(pair.bf_patch, d);
  out.record.shift_px += d;
  return out;
}

}  // namespace mmcyto
