#include "mmcyto/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mmcyto/error.hpp"
#include "mmcyto/tiff.hpp"

namespace mmcyto {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::Io, "read failed: " + path);
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::Io, "cannot rename into " + path);
  }
}

namespace {

ojson parse(const std::string& text, const std::string& what) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, what + ": " + e.what());
  }
}

template <class T>
T field(const ojson& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::Parse, std::string("missing field ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::Parse, std::string("bad field ") + key);
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, "not a number: " + s);
  }
}

int to_int(const std::string& s) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, "not an integer: " + s);
  }
}

std::string fmt_num(double v) {
  // Shortest round-trip form, same as the JSON writer.
  return ojson(v).dump();
}

ojson fold_json(const Fold& f) {
  ojson j;
  j["index"] = f.index;
  j["train_partitions"] = f.train_partitions;
  j["val_partition"] = f.val_partition ? ojson(*f.val_partition) : ojson(nullptr);
  j["test_partition"] = f.test_partition;
  return j;
}

ojson report_json(const MetricReport& r) {
  ojson j;
  j["f1"] = r.f1;
  j["accuracy"] = r.accuracy;
  j["roc_auc"] = r.roc_auc ? ojson(*r.roc_auc) : ojson(nullptr);
  j["recall"] = r.recall;
  j["precision"] = r.precision;
  j["undefined"] = r.undefined;
  return j;
}

ojson counts_json(const ConfusionCounts& c) {
  return ojson{{"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}, {"tp", c.tp}};
}

}  // namespace

ZStack load_slide(const std::string& descriptor_path) {
  const auto j = parse(read_file(descriptor_path), descriptor_path);
  const auto modality = modality_from_string(field<std::string>(j, "modality"));
  const auto px = field<double>(j, "pixel_size_um");
  const auto z = field<std::vector<double>>(j, "z_offsets_um");
  auto names = j.contains("channels") ? field<std::vector<std::string>>(j, "channels") : default_channel_names(modality);
  const auto paths = field<std::vector<std::string>>(j, "paths");
  const std::size_t nc = names.size();
  if (static_cast<int>(nc) != channel_count(modality)) {
    throw Error(ErrorCode::InvalidArgument, descriptor_path + ": channel count does not match modality");
  }
  if (paths.size() != z.size() * nc) {
    throw Error(ErrorCode::InvalidArgument, descriptor_path + ": expected one path per (z, channel)");
  }
  const fs::path base = fs::path(descriptor_path).parent_path();
  std::map<std::string, std::vector<Plane>> cache;
  ZStack stack;
  stack.z_offsets_um = z;
  for (std::size_t zi = 0; zi < z.size(); ++zi) {
    MultiChannelImage img{modality, {}, names};
    for (std::size_t c = 0; c < nc; ++c) {
      std::string p = paths[zi * nc + c];
      std::size_t page = 0;
      if (const auto hash = p.rfind('#'); hash != std::string::npos) {
        page = static_cast<std::size_t>(to_int(p.substr(hash + 1)));
        p = p.substr(0, hash);
      }
      const std::string full = fs::path(p).is_absolute() ? p : (base / p).string();
      auto it = cache.find(full);
      if (it == cache.end()) it = cache.emplace(full, read_tiff(full)).first;
      if (page >= it->second.size()) throw Error(ErrorCode::Parse, full + ": missing page");
      Plane plane = it->second[page];
      plane.set_pixel_size_um(px);
      img.channels.push_back(std::move(plane));
    }
    stack.levels.push_back(std::move(img));
  }
  stack.validate();
  return stack;
}

void save_slide(const std::string& descriptor_path, const ZStack& stack) {
  stack.validate();
  const fs::path dp(descriptor_path);
  const std::string stem = dp.stem().string();
  ojson j;
  j["modality"] = to_string(stack.modality());
  j["pixel_size_um"] = stack.levels.front().pixel_size_um();
  j["z_offsets_um"] = stack.z_offsets_um;
  j["channels"] = stack.levels.front().channel_names;
  std::vector<std::string> paths;
  for (std::size_t z = 0; z < stack.size(); ++z) {
    for (std::size_t c = 0; c < stack.levels[z].channels.size(); ++c) {
      const std::string name = stem + "_z" + std::to_string(z) + "_c" + std::to_string(c) + ".tif";
      write_tiff((dp.parent_path() / name).string(), {stack.levels[z].channels[c]});
      paths.push_back(name);
    }
  }
  j["paths"] = paths;
  write_file_atomic(descriptor_path, j.dump(2) + "\n");
}

std::string nuclei_to_csv(const std::vector<NucleusRecord>& nuclei) {
  std::string out = "slide_id,x_px,y_px,score,source_z\n";
  for (const auto& n : nuclei) {
    out += n.slide_id + "," + fmt_num(n.x_px) + "," + fmt_num(n.y_px) + "," + fmt_num(n.score) + "," +
           std::to_string(n.source_z) + "\n";
  }
  return out;
}

std::vector<NucleusRecord> nuclei_from_csv(const std::string& text) {
  const auto ls = lines(text);
  if (ls.empty() || ls.front() != "slide_id,x_px,y_px,score,source_z") {
    throw Error(ErrorCode::Parse, "nucleus CSV: bad header");
  }
  std::vector<NucleusRecord> out;
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto f = split(ls[i], ',');
    if (f.size() != 5) throw Error(ErrorCode::Parse, "nucleus CSV: bad row " + std::to_string(i + 1));
    out.push_back({f[0], to_double(f[1]), to_double(f[2]), to_double(f[3]), to_int(f[4])});
  }
  return out;
}

std::string patients_to_csv(const std::vector<PatientRecord>& patients) {
  std::string out = "patient_id,diagnosis,slide_ids\n";
  for (const auto& p : patients) {
    std::string slides;
    for (std::size_t i = 0; i < p.slide_ids.size(); ++i) slides += (i ? ";" : "") + p.slide_ids[i];
    out += p.patient_id + "," + to_string(p.diagnosis) + "," + slides + "\n";
  }
  return out;
}

std::vector<PatientRecord> patients_from_csv(const std::string& text) {
  const auto ls = lines(text);
  if (ls.empty()) throw Error(ErrorCode::Parse, "patients CSV: empty");
  const auto header = split(ls.front(), ',');
  if (header.size() < 2 || header[0] != "patient_id" || header[1] != "diagnosis") {
    throw Error(ErrorCode::Parse, "patients CSV: header must start with patient_id,diagnosis");
  }
  const bool has_slides = header.size() >= 3 && header[2] == "slide_ids";
  std::vector<PatientRecord> out;
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto f = split(ls[i], ',');
    if (f.size() < 2) throw Error(ErrorCode::Parse, "patients CSV: bad row " + std::to_string(i + 1));
    PatientRecord p{f[0], diagnosis_from_string(f[1]), {}};
    if (has_slides && f.size() >= 3 && !f[2].empty()) p.slide_ids = split(f[2], ';');
    out.push_back(std::move(p));
  }
  return out;
}

std::string record_to_json(const PatchRecord& r) {
  ojson j;
  j["id"] = r.id;
  j["patient_id"] = r.patient_id;
  j["slide_id"] = r.slide_id;
  j["label"] = r.label ? ojson(to_string(*r.label)) : ojson(nullptr);
  j["bf_path"] = r.bf_path;
  j["fl_path"] = r.fl_path;
  j["refine_dy"] = r.refine_dy;
  j["refine_dx"] = r.refine_dx;
  j["mi_nats"] = r.mi_nats;
  j["focus_bf"] = r.focus_bf;
  j["focus_fl"] = r.focus_fl;
  j["contrast_fl"] = r.contrast_fl;
  auto flags = ojson::array();
  for (auto f : r.qc_flags.list()) flags.push_back(to_string(f));
  j["qc_flags"] = flags;
  j["x_px"] = r.x_px;
  j["y_px"] = r.y_px;
  j["shift_px"] = r.shift_px;
  return j.dump();
}

PatchRecord record_from_json(const std::string& line) {
  const auto j = parse(line, "manifest record");
  PatchRecord r;
  r.id = field<std::string>(j, "id");
  r.patient_id = field<std::string>(j, "patient_id");
  r.slide_id = field<std::string>(j, "slide_id");
  if (j.contains("label") && !j["label"].is_null()) r.label = cell_label_from_string(field<std::string>(j, "label"));
  r.bf_path = field<std::string>(j, "bf_path");
  r.fl_path = field<std::string>(j, "fl_path");
  r.refine_dy = field<int>(j, "refine_dy");
  r.refine_dx = field<int>(j, "refine_dx");
  r.mi_nats = field<double>(j, "mi_nats");
  r.focus_bf = field<int>(j, "focus_bf");
  r.focus_fl = field<int>(j, "focus_fl");
  r.contrast_fl = field<double>(j, "contrast_fl");
  for (const auto& f : field<std::vector<std::string>>(j, "qc_flags")) r.qc_flags.set(qc_flag_from_string(f));
  if (j.contains("x_px")) r.x_px = field<double>(j, "x_px");
  if (j.contains("y_px")) r.y_px = field<double>(j, "y_px");
  if (j.contains("shift_px")) r.shift_px = field<int>(j, "shift_px");
  return r;
}

std::string manifest_to_jsonl(const std::vector<PatchRecord>& records) {
  std::string out;
  for (const auto& r : records) out += record_to_json(r) + "\n";
  return out;
}

std::vector<PatchRecord> manifest_from_jsonl(const std::string& text) {
  std::vector<PatchRecord> out;
  for (const auto& l : lines(text)) out.push_back(record_from_json(l));
  return out;
}

std::string transform_to_json(const RigidTransform2D& t, double mi_nats) {
  ojson j;
  j["theta_rad"] = t.theta_rad;
  j["tx_px"] = t.tx_px;
  j["ty_px"] = t.ty_px;
  j["scale"] = t.scale;
  j["mi_nats"] = mi_nats;
  return j.dump(2) + "\n";
}

RigidTransform2D transform_from_json(const std::string& text, double* mi_nats) {
  const auto j = parse(text, "transform");
  RigidTransform2D t{field<double>(j, "theta_rad"), field<double>(j, "tx_px"), field<double>(j, "ty_px"),
                     field<double>(j, "scale")};
  t.validate();
  if (mi_nats != nullptr) *mi_nats = j.contains("mi_nats") ? field<double>(j, "mi_nats") : 0.0;
  return t;
}

std::string fold_plan_to_json(const FoldPlan& plan) {
  ojson j;
  j["n_partitions"] = plan.n_partitions;
  ojson map = ojson::object();
  for (const auto& [id, p] : plan.partition_of_patient) map[id] = p;
  j["partition_of_patient"] = map;
  auto parts = ojson::array();
  for (const auto& s : plan.summary) {
    parts.push_back({{"partition", s.partition},
                     {"cancer_patients", s.cancer_patients},
                     {"healthy_patients", s.healthy_patients},
                     {"cancer_patches", s.cancer_patches},
                     {"healthy_patches", s.healthy_patches},
                     {"patches", s.patches()},
                     {"cancer_ratio", s.cancer_ratio()}});
  }
  j["partitions"] = parts;
  if (plan.n_partitions == 4) {
    ojson phases;
    for (auto ph : {Phase::InitialValidation, Phase::FullTraining}) {
      auto folds = ojson::array();
      for (const auto& f : make_folds(plan, ph)) folds.push_back(fold_json(f));
      phases[to_string(ph)] = folds;
    }
    j["phases"] = phases;
  }
  j["warnings"] = plan.warnings;
  return j.dump(2) + "\n";
}

FoldPlan fold_plan_from_json(const std::string& text) {
  const auto j = parse(text, "fold plan");
  FoldPlan plan;
  plan.n_partitions = field<int>(j, "n_partitions");
  plan.partition_of_patient = field<std::map<std::string, int>>(j, "partition_of_patient");
  if (j.contains("partitions")) {
    for (const auto& s : j["partitions"]) {
      PartitionSummary ps;
      ps.partition = field<int>(s, "partition");
      ps.cancer_patients = field<int>(s, "cancer_patients");
      ps.healthy_patients = field<int>(s, "healthy_patients");
      ps.cancer_patches = field<std::int64_t>(s, "cancer_patches");
      ps.healthy_patches = field<std::int64_t>(s, "healthy_patches");
      plan.summary.push_back(ps);
    }
  }
  if (j.contains("warnings")) plan.warnings = field<std::vector<std::string>>(j, "warnings");
  if (plan.n_partitions == 4) plan.folds = make_folds(plan, plan.phase);
  return plan;
}

std::string phantom_truth_to_json(const PhantomTruth& truth) {
  const auto& s = truth.spec;
  ojson j;
  j["seed"] = truth.seed;
  j["slide_id"] = s.slide_id;
  j["patient_id"] = s.patient_id;
  j["label"] = s.positive ? "positive" : "negative";
  j["transform"] = {{"theta_rad", s.transform.theta_rad},
                    {"tx_px", s.transform.tx_px},
                    {"ty_px", s.transform.ty_px},
                    {"scale", s.transform.scale}};
  j["spec"] = {{"n_nuclei", s.n_nuclei},         {"slide_px", s.slide_px},
               {"jitter_px", s.jitter_px},       {"class_effect", s.class_effect},
               {"bf_levels", s.bf_levels},       {"bf_z_step_um", s.bf_z_step_um},
               {"fl_levels", s.fl_levels},       {"fl_z_step_um", s.fl_z_step_um},
               {"bf_pixel_um", s.bf_pixel_um},   {"fl_slide_px", s.fl_slide_px},
               {"nucleus_radius_px", s.nucleus_radius_px},
               {"bias_strength", s.bias_strength},
               {"noise_sigma", s.noise_sigma}};
  auto nuclei = ojson::array();
  for (const auto& n : truth.nuclei) {
    nuclei.push_back({{"x_px", n.x_px},
                      {"y_px", n.y_px},
                      {"sharp_bf", n.sharp_bf},
                      {"sharp_fl", n.sharp_fl},
                      {"residual_dx", n.residual_dx},
                      {"residual_dy", n.residual_dy},
                      {"radius_px", n.radius_px}});
  }
  j["nuclei"] = nuclei;
  return j.dump(2) + "\n";
}

PhantomTruth phantom_truth_from_json(const std::string& text) {
  const auto j = parse(text, "phantom truth");
  PhantomTruth t;
  t.seed = field<std::uint64_t>(j, "seed");
  auto& s = t.spec;
  s.slide_id = field<std::string>(j, "slide_id");
  s.patient_id = field<std::string>(j, "patient_id");
  s.positive = field<std::string>(j, "label") == "positive";
  const auto& tr = j.at("transform");
  s.transform = {field<double>(tr, "theta_rad"), field<double>(tr, "tx_px"), field<double>(tr, "ty_px"),
                 field<double>(tr, "scale")};
  const auto& sp = j.at("spec");
  s.n_nuclei = field<int>(sp, "n_nuclei");
  s.slide_px = field<int>(sp, "slide_px");
  s.jitter_px = field<double>(sp, "jitter_px");
  s.class_effect = field<double>(sp, "class_effect");
  s.bf_levels = field<int>(sp, "bf_levels");
  s.bf_z_step_um = field<double>(sp, "bf_z_step_um");
  s.fl_levels = field<int>(sp, "fl_levels");
  s.fl_z_step_um = field<double>(sp, "fl_z_step_um");
  s.bf_pixel_um = field<double>(sp, "bf_pixel_um");
  s.fl_slide_px = field<int>(sp, "fl_slide_px");
  s.nucleus_radius_px = field<double>(sp, "nucleus_radius_px");
  s.bias_strength = field<double>(sp, "bias_strength");
  s.noise_sigma = field<double>(sp, "noise_sigma");
  for (const auto& n : j.at("nuclei")) {
    t.nuclei.push_back({field<double>(n, "x_px"), field<double>(n, "y_px"), field<int>(n, "sharp_bf"),
                        field<int>(n, "sharp_fl"), field<double>(n, "residual_dx"), field<double>(n, "residual_dy"),
                        field<double>(n, "radius_px")});
  }
  return t;
}

std::string metric_report_to_json(const MetricReport& r, const ConfusionCounts* counts) {
  auto j = report_json(r);
  if (counts != nullptr) j["counts"] = counts_json(*counts);
  return j.dump(2) + "\n";
}

std::string fold_summary_to_json(const FoldSummary& s) {
  ojson j;
  j["folds"] = s.folds;
  j["mean"] = report_json(s.mean);
  j["std"] = report_json(s.stddev);
  j["pooled"] = report_json(s.pooled);
  j["pooled_counts"] = counts_json(s.pooled_counts);
  return j.dump(2) + "\n";
}

std::string confusion_to_csv(const std::vector<ConfusionCounts>& rows) {
  std::string out = "tn,fp,fn,tp\n";
  for (const auto& c : rows) {
    out += std::to_string(c.tn) + "," + std::to_string(c.fp) + "," + std::to_string(c.fn) + "," +
           std::to_string(c.tp) + "\n";
  }
  return out;
}

std::string patient_predictions_to_json(const std::vector<PatientPrediction>& preds,
                                        const std::map<std::string, int>& truth) {
  ojson j;
  auto arr = ojson::array();
  for (const auto& p : preds) {
    ojson e{{"patient_id", p.patient_id},
            {"cells", p.cells},
            {"positive_cells", p.positive_cells},
            {"ratio", p.ratio},
            {"prediction", p.positive ? 1 : 0}};
    if (const auto it = truth.find(p.patient_id); it != truth.end()) e["label"] = it->second;
    arr.push_back(e);
  }
  j["patients"] = arr;
  return j.dump(2) + "\n";
}

std::string qc_report_to_json(const QcReport& r) {
  ojson j{{"input", r.input},
          {"border", r.border},
          {"low_contrast", r.low_contrast},
          {"failed_registration", r.failed_registration},
          {"neighbor_inconsistent", r.neighbor_inconsistent},
          {"kept", r.kept}};
  return j.dump(2) + "\n";
}

std::vector<ScoredCell> scored_cells_from_jsonl(const std::string& text) {
  std::vector<ScoredCell> out;
  for (const auto& l : lines(text)) {
    const auto j = parse(l, "scored cell");
    ScoredCell c;
    c.patient_id = j.contains("patient_id") ? field<std::string>(j, "patient_id") : std::string{};
    if (!j.contains("label")) throw Error(ErrorCode::Parse, "missing field label");
    const auto& lab = j.at("label");
    if (lab.is_string()) {
      c.label = cell_label_from_string(lab.get<std::string>()) == CellLabel::Positive ? 1 : 0;
    } else {
      c.label = field<int>(j, "label");
    }
    c.score = field<double>(j, "score");
    if (j.contains("fold")) c.fold = field<int>(j, "fold");
    out.push_back(std::move(c));
  }
  return out;
}

void write_patch(const std::string& path, const MultiChannelImage& img) {
  img.validate();
  write_tiff(path, img.channels);
}

MultiChannelImage read_patch(const std::string& path, Modality m) {
  MultiChannelImage img{m, read_tiff(path), default_channel_names(m)};
  img.validate();
  return img;
}

}  // namespace mmcyto
