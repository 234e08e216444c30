#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mmcyto/cmif.hpp"
#include "mmcyto/config.hpp"
#include "mmcyto/dataset.hpp"
#include "mmcyto/error.hpp"
#include "mmcyto/focus.hpp"
#include "mmcyto/illum.hpp"
#include "mmcyto/io.hpp"
#include "mmcyto/metrics.hpp"
#include "mmcyto/parallel.hpp"
#include "mmcyto/patch.hpp"
#include "mmcyto/peaks.hpp"
#include "mmcyto/phantom.hpp"

namespace mmcyto::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::set<std::string> kConfigKeys = {
    "illum.sigma_frac",      "illum.cap_multiple",     "illum.cap_percentile",
    "register.downsample",   "register.levels",        "register.min_overlap_frac",
    "register.coarse_step_deg", "register.fine_step_deg", "register.max_shift_px",
    "refine.max_shift_px",   "refine.levels",          "refine.min_overlap_frac",
    "patch.size",            "patch.fl_region",        "focus.center_sigma",
    "peaks.threshold",       "peaks.min_distance",     "peaks.merge_radius",
    "peaks.sigma",           "qc.contrast_frac",       "qc.neighbors",
    "qc.neighbor_cap_px",    "qc.tolerance_px",        "plan.partitions",
    "eval.cell_threshold",   "aggregate.patient_threshold",
};

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string config_path;
  Config config;
};

IllumConfig illum_config(const Config& c) {
  IllumConfig ic;
  ic.sigma_frac = c.get_double("illum.sigma_frac", ic.sigma_frac);
  ic.cap_multiple = c.get_double("illum.cap_multiple", ic.cap_multiple);
  ic.cap_percentile = c.get_double("illum.cap_percentile", ic.cap_percentile);
  return ic;
}

PipelineConfig pipeline_config(const Config& c) {
  PipelineConfig pc;
  pc.patch_size = c.get_int("patch.size", pc.patch_size);
  pc.fl_region_size = c.get_int("patch.fl_region", pc.fl_region_size);
  pc.center_sigma = c.get_double("focus.center_sigma", pc.center_sigma);
  pc.refine.max_shift_px = c.get_int("refine.max_shift_px", pc.refine.max_shift_px);
  pc.refine.levels = c.get_int("refine.levels", pc.refine.levels);
  pc.refine.min_overlap_frac = c.get_double("refine.min_overlap_frac", pc.refine.min_overlap_frac);
  return pc;
}

QcConfig qc_config(const Config& c) {
  QcConfig q;
  q.contrast_frac = c.get_double("qc.contrast_frac", q.contrast_frac);
  q.neighbors = c.get_int("qc.neighbors", q.neighbors);
  q.neighbor_cap_px = c.get_double("qc.neighbor_cap_px", q.neighbor_cap_px);
  q.tolerance_px = c.get_double("qc.tolerance_px", q.tolerance_px);
  return q;
}

ZStack correct_stack(const ZStack& s, const IllumConfig& ic, int threads, std::size_t* low_contrast) {
  ZStack out;
  out.z_offsets_um = s.z_offsets_um;
  out.levels.resize(s.size());
  std::size_t flagged = 0;
  for (std::size_t z = 0; z < s.size(); ++z) {
    auto c = correct_image(s.levels[z], ic, threads);
    flagged += static_cast<std::size_t>(std::count(c.low_contrast.begin(), c.low_contrast.end(), true));
    out.levels[z] = std::move(c.image);
  }
  if (low_contrast != nullptr) *low_contrast = flagged;
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw UsageError("bad integer list: " + s);
    }
  }
  return out;
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  return fs::relative(fs::absolute(p), fs::absolute(base)).generic_string();
}

// ---------------------------------------------------------------------------

int run_correct(const Globals& g, const std::string& slide, const std::string& out, std::ostream& os) {
  const auto stack = load_slide(slide);
  if (stack.modality() != Modality::FL) os << "note: correcting a non-FL slide\n";
  std::size_t low = 0;
  const auto corrected = correct_stack(stack, illum_config(g.config), g.threads, &low);
  save_slide(out, corrected);
  os << "corrected " << corrected.size() << " levels; low-contrast channels: " << low << "\n";
  return 0;
}

int run_register(const Globals& g, const std::string& fixed_path, const std::string& moving_path,
                 const std::string& out, int downsample, bool correct, std::ostream& os) {
  const auto bf = load_slide(fixed_path);
  auto fl = load_slide(moving_path);
  Plane fixed = reduce_for_registration(bf.levels[bf.middle_index()]);
  const auto& fl_mid = fl.levels[fl.middle_index()];
  Plane moving = correct ? reduce_for_registration(correct_image(fl_mid, illum_config(g.config), g.threads).image)
                         : reduce_for_registration(fl_mid);

  const int min_side = std::min({fixed.height(), fixed.width(), moving.height(), moving.width()});
  const int k = std::max(1, std::min(downsample, min_side / 128));
  if (k > 1) {
    fixed = downsample_box(fixed, k);
    moving = downsample_box(moving, k);
  }
  GlobalRegistrationConfig rc;
  rc.levels = g.config.get_int("register.levels", rc.levels);
  rc.min_overlap_frac = g.config.get_double("register.min_overlap_frac", rc.min_overlap_frac);
  rc.coarse_step_deg = g.config.get_double("register.coarse_step_deg", rc.coarse_step_deg);
  rc.fine_step_deg = g.config.get_double("register.fine_step_deg", rc.fine_step_deg);
  const int max_shift = g.config.get_int("register.max_shift_px", -1);
  rc.max_shift_px = max_shift < 0 ? -1 : std::max(1, max_shift / k);
  const auto r = register_rigid_global(fixed, moving, rc);
  const auto t = r.transform.from_downsample(k);
  write_file_atomic(out, transform_to_json(t, r.mi_nats));
  os << "registered at 1/" << k << ": theta " << t.theta_rad * 180.0 / 3.14159265358979323846 << " deg, t ("
     << t.tx_px << ", " << t.ty_px << ") px, mi " << r.mi_nats << " nats\n";
  return 0;
}

int run_extract(const Globals& g, const std::string& bf_path, const std::string& fl_path,
                const std::string& transform_path, const std::string& nuclei_path, const std::string& out_dir,
                const std::string& patient_id, const std::string& patients_path, bool correct, std::ostream& os) {
  const auto bf = load_slide(bf_path);
  auto fl = load_slide(fl_path);
  if (correct) fl = correct_stack(fl, illum_config(g.config), g.threads, nullptr);
  const auto t = transform_from_json(read_file(transform_path));
  const auto nuclei = nuclei_from_csv(read_file(nuclei_path));
  const auto pc = pipeline_config(g.config);
  const fs::path dir(out_dir);
  fs::create_directories(dir / "patches");

  std::vector<PatchRecord> records(nuclei.size());
  parallel_for(nuclei.size(), g.threads, [&](std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", i);
    const std::string id = nuclei[i].slide_id + "_" + buf;
    auto pair = process_nucleus(nuclei[i], bf, fl, t, pc, id, patient_id);
    if (!pair.record.qc_flags.has(QcFlag::Border)) {
      pair.record.bf_path = "patches/" + id + "_bf.tif";
      pair.record.fl_path = "patches/" + id + "_fl.tif";
      write_patch((dir / pair.record.bf_path).string(), pair.bf_patch);
      write_patch((dir / pair.record.fl_path).string(), pair.fl_patch);
    }
    records[i] = std::move(pair.record);
  });

  if (!patients_path.empty()) assign_labels(records, patients_from_csv(read_file(patients_path)));
  write_file_atomic((dir / "manifest.jsonl").string(), manifest_to_jsonl(records));
  const auto border = std::count_if(records.begin(), records.end(),
                                    [](const PatchRecord& r) { return r.qc_flags.has(QcFlag::Border); });
  const auto failed = std::count_if(records.begin(), records.end(), [](const PatchRecord& r) {
    return r.qc_flags.has(QcFlag::FailedRegistration);
  });
  os << "nuclei " << nuclei.size() << ", border " << border << ", failed registration " << failed << "\n";
  return 0;
}

int run_detect(const Globals& g, const std::string& slide, const std::string& out, double sigma_override,
               std::ostream& os) {
  const auto stack = load_slide(slide);
  PeakConfig pcfg;
  pcfg.threshold = g.config.get_double("peaks.threshold", pcfg.threshold);
  pcfg.min_distance = g.config.get_double("peaks.min_distance", pcfg.min_distance);
  const double sigma = sigma_override > 0 ? sigma_override : g.config.get_double("peaks.sigma", 7.0);
  const double radius = g.config.get_double("peaks.merge_radius", 8.0);
  pcfg.slide_id = fs::path(slide).stem().string();

  // Levels nearest -2, 0 and +2 um.
  std::set<std::size_t> chosen;
  for (double want : {-2.0, 0.0, 2.0}) {
    std::size_t best = 0;
    for (std::size_t z = 1; z < stack.size(); ++z) {
      if (std::abs(stack.z_offsets_um[z] - want) < std::abs(stack.z_offsets_um[best] - want)) best = z;
    }
    chosen.insert(best);
  }
  const std::vector<std::size_t> levels(chosen.begin(), chosen.end());
  std::vector<std::vector<NucleusRecord>> per_level(levels.size());
  parallel_for(levels.size(), g.threads, [&](std::size_t i) {
    const auto& img = stack.levels[levels[i]];
    Plane mean(img.height(), img.width(), 0.0F, img.pixel_size_um());
    for (const auto& c : img.channels) {
      for (std::size_t k = 0; k < mean.size(); ++k) mean.pixels()[k] += c.pixels()[k] / static_cast<float>(img.channels.size());
    }
    const Plane small = downsample_box(mean, pcfg.downsample);
    auto cfg = pcfg;
    cfg.source_z = static_cast<int>(levels[i]);
    per_level[i] = detect_peaks(baseline_blob_detector(small, sigma / pcfg.downsample), cfg);
  });
  const auto merged = merge_across_z(per_level, radius);
  write_file_atomic(out, nuclei_to_csv(merged));
  os << "detected " << merged.size() << " nuclei over " << levels.size() << " levels\n";
  return 0;
}

int run_qc(const Globals& g, const std::string& manifest, const std::string& out, const std::string& rejected,
           const std::string& report, std::ostream& os) {
  const auto records = manifest_from_jsonl(read_file(manifest));
  auto res = qc_filter(records, qc_config(g.config));
  // Kept paths stay valid relative to the new manifest's directory.
  const fs::path src_dir = fs::absolute(manifest).parent_path();
  const fs::path dst_dir = fs::absolute(out).parent_path();
  auto rebase = [&](std::vector<PatchRecord>& v) {
    for (auto& r : v) {
      if (!r.bf_path.empty()) r.bf_path = relative_to(src_dir / r.bf_path, dst_dir);
      if (!r.fl_path.empty()) r.fl_path = relative_to(src_dir / r.fl_path, dst_dir);
    }
  };
  rebase(res.kept);
  write_file_atomic(out, manifest_to_jsonl(res.kept));
  if (!rejected.empty()) {
    const fs::path rej_dir = fs::absolute(rejected).parent_path();
    for (auto& r : res.rejected) {
      if (!r.bf_path.empty()) r.bf_path = relative_to(src_dir / r.bf_path, rej_dir);
      if (!r.fl_path.empty()) r.fl_path = relative_to(src_dir / r.fl_path, rej_dir);
    }
    write_file_atomic(rejected, manifest_to_jsonl(res.rejected));
  }
  if (!report.empty()) write_file_atomic(report, qc_report_to_json(res.report));
  const auto& r = res.report;
  os << "input " << r.input << ", border " << r.border << ", low contrast " << r.low_contrast
     << ", failed registration " << r.failed_registration << ", neighbor inconsistent " << r.neighbor_inconsistent
     << ", kept " << r.kept << "\n";
  return 0;
}

int run_plan(const Globals& g, const std::string& patients_path, const std::string& manifest,
             const std::string& counts_path, const std::string& explicit_path, const std::string& out,
             std::ostream& os) {
  const auto patients = patients_from_csv(read_file(patients_path));
  std::map<std::string, std::int64_t> counts;
  if (!manifest.empty()) {
    for (const auto& r : manifest_from_jsonl(read_file(manifest))) ++counts[r.patient_id];
  }
  auto read_pairs = [](const std::string& path, const std::string& second) {
    std::map<std::string, std::int64_t> m;
    std::stringstream ss(read_file(path));
    std::string line;
    bool header = true;
    while (std::getline(ss, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw Error(ErrorCode::Parse, path + ": expected two columns");
      if (header) {
        if (line.substr(0, comma) != "patient_id" || line.substr(comma + 1) != second) {
          throw Error(ErrorCode::Parse, path + ": header must be patient_id," + second);
        }
        header = false;
        continue;
      }
      try {
        m[line.substr(0, comma)] = std::stoll(line.substr(comma + 1));
      } catch (const std::exception&) {
        throw Error(ErrorCode::Parse, path + ": bad row " + line);
      }
    }
    return m;
  };
  if (!counts_path.empty()) {
    for (const auto& [id, n] : read_pairs(counts_path, "patches")) counts[id] += n;
  }
  std::optional<std::map<std::string, int>> explicit_map;
  if (!explicit_path.empty()) {
    explicit_map.emplace();
    for (const auto& [id, p] : read_pairs(explicit_path, "partition")) (*explicit_map)[id] = static_cast<int>(p);
  }
  const auto plan = plan_partitions(patients, counts, g.config.get_int("plan.partitions", 4), explicit_map);
  write_file_atomic(out, fold_plan_to_json(plan));
  for (const auto& s : plan.summary) {
    os << "partition " << s.partition << ": " << s.cancer_patients << "+" << s.healthy_patients << " patients, "
       << s.patches() << " patches, cancer ratio " << s.cancer_ratio() << "\n";
  }
  for (const auto& w : plan.warnings) os << "warning: " << w << "\n";
  return 0;
}

int run_perturb(const std::string& manifest, const std::string& out_dir, const std::string& shifts, std::ostream& os) {
  const auto records = manifest_from_jsonl(read_file(manifest));
  const fs::path src_dir = fs::absolute(manifest).parent_path();
  ojson variants = ojson::array();
  for (int d : parse_int_list(shifts)) {
    if (d < 0) throw UsageError("shifts must be non-negative");
    const fs::path vdir = fs::absolute(out_dir) / ("d" + std::to_string(d));
    fs::create_directories(vdir / "patches");
    std::vector<PatchRecord> out;
    for (auto r : records) {
      if (r.bf_path.empty()) continue;
      PatchPair pair;
      pair.record = r;
      pair.bf_patch = read_patch((src_dir / r.bf_path).string(), Modality::BF);
      const auto shifted = inject_misalignment(pair, d);
      r = shifted.record;
      r.bf_path = "patches/" + r.id + "_bf.tif";
      write_patch((vdir / r.bf_path).string(), shifted.bf_patch);
      r.fl_path = relative_to(src_dir / pair.record.fl_path, vdir);
      out.push_back(std::move(r));
    }
    write_file_atomic((vdir / "manifest.jsonl").string(), manifest_to_jsonl(out));
    variants.push_back({{"shift_px", d}, {"direction", "+x"}, {"manifest", "d" + std::to_string(d) + "/manifest.jsonl"},
                        {"records", out.size()}});
    os << "variant d=" << d << ": " << out.size() << " pairs\n";
  }
  write_file_atomic((fs::path(out_dir) / "variants.json").string(), variants.dump(2) + "\n");
  return 0;
}

int run_eval(const Globals& g, const std::string& scored, const std::string& out, const std::string& confusion_csv,
             std::ostream& os) {
  const auto cells = scored_cells_from_jsonl(read_file(scored));
  const double thr = g.config.get_double("eval.cell_threshold", 0.5);
  std::map<int, std::vector<const ScoredCell*>> by_fold;
  for (const auto& c : cells) by_fold[c.fold].push_back(&c);

  auto counts_of = [&](const std::vector<const ScoredCell*>& v, std::optional<double>* auc) {
    std::vector<int> pred, truth;
    std::vector<double> scores;
    for (const auto* c : v) {
      pred.push_back(c->score > thr ? 1 : 0);
      truth.push_back(c->label);
      scores.push_back(c->score);
    }
    const bool both = std::count(truth.begin(), truth.end(), 1) > 0 && std::count(truth.begin(), truth.end(), 0) > 0;
    if (both) *auc = roc_auc(scores, truth);
    return confusion(pred, truth);
  };

  std::vector<const ScoredCell*> all;
  for (const auto& c : cells) all.push_back(&c);
  std::optional<double> pooled_auc;
  const auto pooled_counts = counts_of(all, &pooled_auc);
  auto report = compute_metrics(pooled_counts);
  report.roc_auc = pooled_auc;

  ojson j = ojson::parse(metric_report_to_json(report, &pooled_counts));
  j["aggregation"] = "pooled";
  std::vector<ConfusionCounts> rows;
  if (by_fold.size() > 1) {
    std::vector<std::optional<double>> aucs;
    for (const auto& [fold, v] : by_fold) {
      std::optional<double> a;
      rows.push_back(counts_of(v, &a));
      aucs.push_back(a);
    }
    j["per_fold"] = ojson::parse(fold_summary_to_json(summarize_folds(rows, aucs)));
  } else {
    rows.push_back(pooled_counts);
  }
  write_file_atomic(out, j.dump(2) + "\n");
  if (!confusion_csv.empty()) write_file_atomic(confusion_csv, confusion_to_csv(rows));
  os << "cells " << cells.size() << ": f1 " << report.f1 << ", accuracy " << report.accuracy << "\n";
  return 0;
}

int run_aggregate(const Globals& g, const std::string& scored, const std::string& out, std::ostream& os) {
  const auto cells = scored_cells_from_jsonl(read_file(scored));
  const double cell_thr = g.config.get_double("eval.cell_threshold", 0.5);
  const double patient_thr = g.config.get_double("aggregate.patient_threshold", 0.6);
  std::map<std::string, std::vector<double>> scores;
  std::map<std::string, int> truth;
  for (const auto& c : cells) {
    scores[c.patient_id].push_back(c.score);
    const auto [it, inserted] = truth.emplace(c.patient_id, c.label);
    if (!inserted && it->second != c.label) {
      throw Error(ErrorCode::InvalidArgument, "patient " + c.patient_id + " has mixed labels");
    }
  }
  const auto preds = aggregate_patient(scores, cell_thr, patient_thr);
  std::vector<int> p, t;
  for (const auto& pr : preds) {
    p.push_back(pr.positive ? 1 : 0);
    t.push_back(truth[pr.patient_id]);
  }
  const auto counts = confusion(p, t);
  ojson j = ojson::parse(patient_predictions_to_json(preds, truth));
  j["cell_threshold"] = cell_thr;
  j["patient_threshold"] = patient_thr;
  j["metrics"] = ojson::parse(metric_report_to_json(compute_metrics(counts), &counts));
  write_file_atomic(out, j.dump(2) + "\n");
  os << "patients " << preds.size() << ": tp " << counts.tp << ", fp " << counts.fp << ", fn " << counts.fn
     << ", tn " << counts.tn << "\n";
  return 0;
}

int run_phantom(const Globals& g, const PhantomSpec& spec, const std::string& out_dir, std::ostream& os) {
  const auto ph = synth_phantom(g.seed, spec);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  save_slide((dir / "bf.json").string(), ph.bf);
  save_slide((dir / "fl.json").string(), ph.fl);
  write_file_atomic((dir / "truth.json").string(), phantom_truth_to_json(ph.truth));
  std::vector<NucleusRecord> nuclei;
  for (const auto& n : ph.truth.nuclei) nuclei.push_back({spec.slide_id, n.x_px, n.y_px, 1.0, n.sharp_bf});
  write_file_atomic((dir / "nuclei.csv").string(), nuclei_to_csv(nuclei));
  os << "phantom seed " << g.seed << ": " << nuclei.size() << " nuclei\n";
  return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal cytology toolkit", "mmcyto"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config_path, "key=value file overriding defaults");

  std::string a, b, c, d, e, f, h;
  int downsample = 32;
  bool correct = false;
  bool no_correct = false;
  double sigma = 0.0;
  std::string shifts = "0,4,8,16";

  auto* s_correct = app.add_subcommand("correct", "Illumination-correct every FL level and channel");
  s_correct->add_option("--slide", a, "Slide descriptor")->required();
  s_correct->add_option("--out", b, "Output descriptor")->required();

  auto* s_register = app.add_subcommand("register", "Global rigid BF/FL registration");
  s_register->add_option("--fixed", a, "BF slide descriptor")->required();
  s_register->add_option("--moving", b, "FL slide descriptor")->required();
  s_register->add_option("--out", c, "Transform JSON")->required();
  s_register->add_option("--downsample", downsample, "Downsample factor")->check(CLI::PositiveNumber);
  s_register->add_flag("--no-correct", no_correct, "Skip FL illumination correction");

  auto* s_extract = app.add_subcommand("extract", "Aligned patch extraction per nucleus");
  s_extract->add_option("--bf", a, "BF slide descriptor")->required();
  s_extract->add_option("--fl", b, "FL slide descriptor")->required();
  s_extract->add_option("--transform", c, "Transform JSON")->required();
  s_extract->add_option("--nuclei", d, "Nucleus CSV")->required();
  s_extract->add_option("--out", e, "Output directory")->required();
  s_extract->add_option("--patient-id", f, "Patient id for every record");
  s_extract->add_option("--patients", h, "Patients CSV for labeling");
  s_extract->add_flag("--correct-fl", correct, "Illumination-correct FL before extraction");

  auto* s_detect = app.add_subcommand("detect", "Baseline nucleus detection");
  s_detect->add_option("--slide", a, "BF slide descriptor")->required();
  s_detect->add_option("--out", b, "Nucleus CSV")->required();
  s_detect->add_option("--sigma", sigma, "DoG sigma in full-resolution px");

  auto* s_qc = app.add_subcommand("qc", "Contrast and consistency filtering");
  s_qc->add_option("--manifest", a, "Input manifest")->required();
  s_qc->add_option("--out", b, "Kept manifest")->required();
  s_qc->add_option("--rejected", c, "Rejected manifest");
  s_qc->add_option("--report", d, "Report JSON");

  auto* s_plan = app.add_subcommand("plan-folds", "Patient partitions and folds");
  s_plan->add_option("--patients", a, "Patients CSV")->required();
  s_plan->add_option("--manifest", b, "Manifest for patch counts");
  s_plan->add_option("--counts", c, "CSV patient_id,patches");
  s_plan->add_option("--explicit", d, "CSV patient_id,partition");
  s_plan->add_option("--out", e, "FoldPlan JSON")->required();

  auto* s_perturb = app.add_subcommand("perturb", "Misaligned dataset variants");
  s_perturb->add_option("--manifest", a, "Input manifest")->required();
  s_perturb->add_option("--out-dir", b, "Output directory")->required();
  s_perturb->add_option("--shifts", shifts, "Comma-separated shifts in px");

  auto* s_eval = app.add_subcommand("eval", "Cell-level metrics");
  s_eval->add_option("--manifest", a, "Scored cells JSONL")->required();
  s_eval->add_option("--out", b, "Metric report JSON")->required();
  s_eval->add_option("--confusion", c, "Confusion CSV");

  auto* s_agg = app.add_subcommand("aggregate", "Patient-level aggregation");
  s_agg->add_option("--manifest", a, "Scored cells JSONL")->required();
  s_agg->add_option("--out", b, "Patient report JSON")->required();

  PhantomSpec spec;
  double theta_deg = 5.0;
  auto* s_phantom = app.add_subcommand("phantom", "Synthetic slide pair with ground truth");
  s_phantom->add_option("--out", a, "Output directory")->required();
  s_phantom->add_option("--n-nuclei", spec.n_nuclei);
  s_phantom->add_option("--slide-px", spec.slide_px);
  s_phantom->add_option("--theta-deg", theta_deg);
  s_phantom->add_option("--tx", spec.transform.tx_px);
  s_phantom->add_option("--ty", spec.transform.ty_px);
  s_phantom->add_option("--scale", spec.transform.scale);
  s_phantom->add_option("--jitter", spec.jitter_px);
  s_phantom->add_option("--class-effect", spec.class_effect);
  s_phantom->add_flag("--positive", spec.positive);
  s_phantom->add_option("--bf-levels", spec.bf_levels);
  s_phantom->add_option("--fl-levels", spec.fl_levels);
  s_phantom->add_option("--fl-slide-px", spec.fl_slide_px);
  s_phantom->add_option("--slide-id", spec.slide_id);
  s_phantom->add_option("--patient-id", spec.patient_id);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    if (code == 0) return 0;
    err << app.help();
    return 2;
  }

  try {
    if (!g.config_path.empty()) {
      g.config = Config::load(g.config_path);
      for (const auto& k : g.config.keys()) {
        if (kConfigKeys.count(k) == 0) throw UsageError("unknown config key: " + k);
      }
    }
    if (s_correct->parsed()) return run_correct(g, a, b, out);
    if (s_register->parsed()) return run_register(g, a, b, c, downsample, !no_correct, out);
    if (s_extract->parsed()) return run_extract(g, a, b, c, d, e, f, h, correct, out);
    if (s_detect->parsed()) return run_detect(g, a, b, sigma, out);
    if (s_qc->parsed()) return run_qc(g, a, b, c, d, out);
    if (s_plan->parsed()) return run_plan(g, a, b, c, d, e, out);
    if (s_perturb->parsed()) return run_perturb(a, b, shifts, out);
    if (s_eval->parsed()) return run_eval(g, a, b, c, out);
    if (s_agg->parsed()) return run_aggregate(g, a, b, out);
    if (s_phantom->parsed()) {
      spec.transform.theta_rad = wrap_angle(deg_to_rad(theta_deg));
      return run_phantom(g, spec, a, out);
    }
    err << app.help();
    return 2;
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
}

}  // namespace mmcyto::cli
