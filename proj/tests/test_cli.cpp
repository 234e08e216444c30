#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "mmcyto/io.hpp"

using namespace mmcyto;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "mmcyto");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("mmcyto_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Cli, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"register", "--fixed", "a.json"}).code, 2);
}

TEST(Cli, HelpSucceeds) { EXPECT_EQ(run({"--help"}).code, 0); }

TEST(Cli, MissingInputNamesPath) {
  const auto d = scratch("missing");
  const auto r = run({"eval", "--manifest", (d / "nope.jsonl").string(), "--out", (d / "m.json").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("nope.jsonl"), std::string::npos) << r.err;
}

TEST(Cli, UnknownConfigKeyIsUsageError) {
  const auto d = scratch("config");
  write_file_atomic((d / "c.txt").string(), "register.levels = 16\nbogus.key = 1\n");
  const auto r = run({"--config", (d / "c.txt").string(), "phantom", "--out", (d / "p").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bogus.key"), std::string::npos);
}

TEST(Cli, EvalWritesReport) {
  const auto d = scratch("eval");
  write_file_atomic((d / "s.jsonl").string(),
                    "{\"patient_id\":\"A\",\"label\":1,\"score\":0.9}\n"
                    "{\"patient_id\":\"A\",\"label\":1,\"score\":0.4}\n"
                    "{\"patient_id\":\"B\",\"label\":0,\"score\":0.2}\n"
                    "{\"patient_id\":\"B\",\"label\":0,\"score\":0.7}\n");
  ASSERT_EQ(run({"eval", "--manifest", (d / "s.jsonl").string(), "--out", (d / "m.json").string()}).code, 0);
  const auto j = nlohmann::json::parse(read_file((d / "m.json").string()));
  EXPECT_DOUBLE_EQ(j["accuracy"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j["roc_auc"].get<double>(), 0.75);
}

TEST(Cli, PhantomThenRegister) {
  const auto d = scratch("reg");
  const auto ph = (d / "ph").string();
  ASSERT_EQ(run({"--seed", "3", "phantom", "--out", ph, "--slide-px", "512", "--n-nuclei", "30", "--theta-deg", "4",
                 "--tx", "10", "--ty", "-6", "--bf-levels", "1", "--fl-levels", "1"})
                .code,
            0);
  EXPECT_TRUE(fs::exists(fs::path(ph) / "truth.json"));
  EXPECT_TRUE(fs::exists(fs::path(ph) / "nuclei.csv"));
  const auto r = run({"register", "--fixed", ph + "/bf.json", "--moving", ph + "/fl.json", "--out",
                      (d / "t.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = transform_from_json(read_file((d / "t.json").string()));
  EXPECT_NEAR(rad_to_deg(t.theta_rad), 4.0, 0.2);
  EXPECT_NEAR(t.tx_px, 10.0, 1.0);
  EXPECT_NEAR(t.ty_px, -6.0, 1.0);
}
