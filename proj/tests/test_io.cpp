#include <gtest/gtest.h>

#include <filesystem>

#include <nlohmann/json.hpp>

#include "mmcyto/error.hpp"
#include "mmcyto/io.hpp"
#include "mmcyto/tiff.hpp"
#include "oracles.hpp"

using namespace mmcyto;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("mmcyto_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Hand-built big-endian 2x2 8-bit grayscale strip TIFF.
std::string tiny_be_tiff() {
  std::string b;
  auto u16 = [&](unsigned v) {
    b.push_back(static_cast<char>(v >> 8));
    b.push_back(static_cast<char>(v & 0xFF));
  };
  auto u32 = [&](unsigned v) {
    u16(v >> 16);
    u16(v & 0xFFFF);
  };
  auto entry = [&](unsigned tag, unsigned type, unsigned value) {
    u16(tag);
    u16(type);
    u32(1);
    if (type == 3) {
      u16(value);
      u16(0);
    } else {
      u32(value);
    }
  };
  b += "MM";
  u16(42);
  u32(8);
  u16(9);
  entry(256, 3, 2);
  entry(257, 3, 2);
  entry(258, 3, 8);
  entry(259, 3, 1);
  entry(262, 3, 1);
  entry(273, 4, 8 + 2 + 9 * 12 + 4);
  entry(277, 3, 1);
  entry(278, 3, 2);
  entry(279, 4, 4);
  u32(0);
  for (unsigned char v : {0, 51, 204, 255}) b.push_back(static_cast<char>(v));
  return b;
}

}  // namespace

TEST(Tiff, FloatRoundTrip) {
  std::vector<Plane> pages{oracle::random_plane(17, 9, 1), oracle::random_plane(17, 9, 2)};
  pages[0].set_pixel_size_um(0.3385);
  pages[1].set_pixel_size_um(0.3385);
  const auto back = decode_tiff(encode_tiff(pages));
  ASSERT_EQ(back.size(), 2U);
  EXPECT_EQ(back[0], pages[0]);
  EXPECT_EQ(back[1], pages[1]);
  EXPECT_DOUBLE_EQ(back[0].pixel_size_um(), 0.3385);
}

TEST(Tiff, BigEndianEightBit) {
  const auto p = decode_tiff(tiny_be_tiff());
  ASSERT_EQ(p.size(), 1U);
  EXPECT_EQ(p[0].height(), 2);
  EXPECT_FLOAT_EQ(p[0].at(0, 1), 0.2F);
  EXPECT_FLOAT_EQ(p[0].at(1, 0), 0.8F);
  EXPECT_FLOAT_EQ(p[0].at(1, 1), 1.0F);
}

TEST(Tiff, GarbageIsParseError) {
  try {
    (void)decode_tiff("not a tiff at all");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
  }
}

TEST(Slide, SaveLoadRoundTrip) {
  const auto dir = scratch("slide");
  ZStack z;
  for (int l = 0; l < 2; ++l) {
    MultiChannelImage img{Modality::FL, {}, default_channel_names(Modality::FL)};
    for (int c = 0; c < 4; ++c) img.channels.push_back(oracle::random_plane(12, 14, 10 * l + c));
    z.levels.push_back(img);
    z.z_offsets_um.push_back(l - 0.5);
  }
  save_slide((dir / "fl.json").string(), z);
  const auto back = load_slide((dir / "fl.json").string());
  ASSERT_EQ(back.size(), 2U);
  EXPECT_EQ(back.modality(), Modality::FL);
  EXPECT_EQ(back.z_offsets_um, z.z_offsets_um);
  for (int l = 0; l < 2; ++l) EXPECT_EQ(back.levels[l].channels, z.levels[l].channels);
}

TEST(Slide, MissingFileNamesPath) {
  try {
    (void)load_slide("/nonexistent/slide.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/slide.json"), std::string::npos);
  }
}

TEST(Manifest, RecordRoundTrip) {
  PatchRecord r;
  r.id = "s_0001";
  r.patient_id = "OC03";
  r.slide_id = "s";
  r.label = CellLabel::Positive;
  r.bf_path = "bf/s_0001.tif";
  r.fl_path = "fl/s_0001.tif";
  r.x_px = 1234.0;
  r.y_px = 88.0;
  r.refine_dy = -3;
  r.refine_dx = 7;
  r.mi_nats = 0.4123456789012345;
  r.focus_bf = 6;
  r.focus_fl = 2;
  r.contrast_fl = 1.5e-3;
  r.qc_flags.set(QcFlag::NeighborInconsistent);
  r.qc_flags.set(QcFlag::LowContrast);
  r.shift_px = 8;
  PatchRecord u = r;
  u.label.reset();
  u.qc_flags = {};
  const auto text = manifest_to_jsonl({r, u});
  EXPECT_EQ(manifest_from_jsonl(text), (std::vector<PatchRecord>{r, u}));
  const auto j = nlohmann::json::parse(record_to_json(r));
  EXPECT_EQ(j["label"], "positive");
  EXPECT_EQ(j["qc_flags"], (nlohmann::json{"LowContrast", "NeighborInconsistent"}));
  for (const char* k : {"id", "patient_id", "slide_id", "label", "bf_path", "fl_path", "refine_dy", "refine_dx",
                        "mi_nats", "focus_bf", "focus_fl", "contrast_fl", "qc_flags"})
    EXPECT_TRUE(j.contains(k)) << k;
}

TEST(Manifest, BadLineIsParseError) {
  EXPECT_THROW((void)manifest_from_jsonl("{\"id\": 3}\n"), Error);
}

TEST(Csv, NucleiRoundTrip) {
  const std::vector<NucleusRecord> n{{"a", 10.5, 20.0, 0.75, 1}, {"a", 300, 4, 0.51, 0}};
  const auto text = nuclei_to_csv(n);
  EXPECT_EQ(text.substr(0, text.find('\n')), "slide_id,x_px,y_px,score,source_z");
  EXPECT_EQ(nuclei_from_csv(text), n);
}

TEST(Csv, PatientsWithAndWithoutSlides) {
  const auto p = patients_from_csv("patient_id,diagnosis\nA,cancer\nB,healthy\n");
  ASSERT_EQ(p.size(), 2U);
  EXPECT_EQ(p[0].diagnosis, Diagnosis::Cancer);
  const auto q = patients_from_csv(patients_to_csv({{"C", Diagnosis::Healthy, {"s1", "s2"}}}));
  ASSERT_EQ(q.size(), 1U);
  EXPECT_EQ(q[0].slide_ids, (std::vector<std::string>{"s1", "s2"}));
}

TEST(Json, TransformRoundTrip) {
  const RigidTransform2D t{0.1234567890123, -45.25, 199.5, 1.472};
  double mi = 0.0;
  const auto back = transform_from_json(transform_to_json(t, 0.77), &mi);
  EXPECT_EQ(back.theta_rad, t.theta_rad);
  EXPECT_EQ(back.tx_px, t.tx_px);
  EXPECT_EQ(back.scale, t.scale);
  EXPECT_EQ(mi, 0.77);
}

TEST(Json, MetricReportSchema) {
  MetricReport m;
  m.f1 = 0.5;
  m.roc_auc = 0.75;
  const ConfusionCounts c{1, 2, 3, 4};
  const auto j = nlohmann::json::parse(metric_report_to_json(m, &c));
  for (const char* k : {"f1", "accuracy", "roc_auc", "recall", "precision"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["roc_auc"], 0.75);
}

TEST(Json, FoldPlanRoundTrip) {
  std::vector<PatientRecord> p{{"a", Diagnosis::Cancer, {}}, {"b", Diagnosis::Healthy, {}},
                               {"c", Diagnosis::Cancer, {}}, {"d", Diagnosis::Healthy, {}}};
  const auto plan = plan_partitions(p, {{"a", 1}, {"b", 2}, {"c", 3}, {"d", 4}}, 4);
  const auto text = fold_plan_to_json(plan);
  const auto back = fold_plan_from_json(text);
  EXPECT_EQ(back.partition_of_patient, plan.partition_of_patient);
  for (auto ph : {Phase::InitialValidation, Phase::FullTraining}) EXPECT_EQ(make_folds(back, ph), make_folds(plan, ph));
  const auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j["phases"]["FullTraining"].size(), 3U);
}

TEST(Json, ScoredCells) {
  const auto c = scored_cells_from_jsonl(
      "{\"patient_id\":\"A\",\"label\":1,\"score\":0.9}\n{\"patient_id\":\"B\",\"label\":\"negative\",\"score\":0.1,"
      "\"fold\":2}\n");
  ASSERT_EQ(c.size(), 2U);
  EXPECT_EQ(c[0].label, 1);
  EXPECT_EQ(c[1].label, 0);
  EXPECT_EQ(c[1].fold, 2);
}

TEST(PatchFile, ChannelMajorPages) {
  const auto dir = scratch("patch");
  MultiChannelImage img{Modality::FL, {}, default_channel_names(Modality::FL)};
  for (int c = 0; c < 4; ++c) img.channels.push_back(oracle::random_plane(8, 8, 50 + c));
  write_patch((dir / "p.tif").string(), img);
  const auto pages = read_tiff((dir / "p.tif").string());
  ASSERT_EQ(pages.size(), 4U);
  EXPECT_EQ(pages[2], img.channels[2]);
  EXPECT_EQ(read_patch((dir / "p.tif").string(), Modality::FL).channels, img.channels);
  EXPECT_THROW((void)read_patch((dir / "p.tif").string(), Modality::BF), Error);
}
