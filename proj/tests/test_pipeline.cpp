#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int code;
  std::string err;
};

class Pipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("cfa_pipeline_" + std::to_string(::getpid()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  CliResult cli(const std::string& args) {
    const auto err = root_ / "stderr.txt";
    std::string cmd = std::string(CFA_CLI_PATH) + " " + args + " > /dev/null 2> " + err.string();
    int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

  fs::path simulate(std::size_t n, int seed = 5) {
    auto dir = root_ / "sim";
    auto r = cli("simulate --scm desk-1 --n " + std::to_string(n) + " --seed " + std::to_string(seed) + " -o " +
                 dir.string());
    EXPECT_EQ(r.code, 0) << r.err;
    return dir;
  }

  fs::path root_;
};

}  // namespace

TEST_F(Pipeline, SimulateThenReportWritesEveryArtifact) {
  auto sim = simulate(3000);
  for (const char* f : {"data.csv", "schema.json", "ground_truth.json", "manifest.json"})
    EXPECT_TRUE(fs::exists(sim / f)) << f;
  auto truth = json::parse(slurp(sim / "ground_truth.json"));
  EXPECT_TRUE(truth.contains("x_de"));

  json cfg = {{"seed", 5},
              {"data", (sim / "data.csv").string()},
              {"schema", (sim / "schema.json").string()},
              {"folds", 5},
              {"forest", {{"n_trees", 100}}},
              {"trimming", {1, 5}},
              {"heatmaps", json::array({json::array({"z1", "ses"})})}};
  spit(root_ / "config.json", cfg.dump());
  auto out = root_ / "report";
  auto r = cli("report -c " + (root_ / "config.json").string() + " -o " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"manifest.json", "balance.json", "balance.csv", "decomposition.json", "cate.json",
                        "heatmap_cate_z1_ses.csv", "ctf_de.json", "heatmap_ctfde_z1_ses.csv", "sensitivity.json",
                        "trimming.csv"})
    EXPECT_TRUE(fs::exists(out / f)) << f;

  auto dec = json::parse(slurp(out / "decomposition.json"));
  for (const char* e : {"debiased", "plugin_model", "plugin_strata"}) EXPECT_TRUE(dec["estimators"].contains(e)) << e;
  const auto& deb = dec.at("estimators").at("debiased").at("cookbook");
  EXPECT_NEAR(deb["x_de"]["estimate"].get<double>() - deb["x_ie"]["estimate"].get<double>() -
                  deb["x_se"]["estimate"].get<double>(),
              deb["tv"]["estimate"].get<double>(), 1e-10);

  auto manifest = json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["subcommand"], "report");
  EXPECT_EQ(manifest["seed"], 5);
  EXPECT_EQ(manifest["config_hash"], dec["config_hash"]);

  // rerunning, with another thread count, reproduces every file byte for byte
  std::map<std::string, std::string> first;
  for (const auto& e : fs::directory_iterator(out)) first[e.path().filename().string()] = slurp(e.path());
  fs::remove_all(out);
  r = cli("report -c " + (root_ / "config.json").string() + " -o " + out.string() + " --threads 2");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& [name, body] : first) EXPECT_EQ(slurp(out / name), body) << name;
}

TEST_F(Pipeline, MissingCellNeedsImputation) {
  auto sim = simulate(400);
  auto csv = slurp(sim / "data.csv");
  auto line2 = csv.find('\n', csv.find('\n') + 1) + 1;  // third line, second data row
  auto comma = csv.find(',', line2);
  csv.replace(comma + 1, csv.find(',', comma + 1) - comma - 1, "");  // blank its z1 cell
  spit(sim / "data.csv", csv);
  std::string base = "balance --data " + (sim / "data.csv").string() + " --schema " + (sim / "schema.json").string() +
                     " --seed 1 -o " + (root_ / "out").string();
  auto r = cli(base);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("MissingData"), std::string::npos) << r.err;
  r = cli(base + " --impute simple");
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(Pipeline, ValidationFailuresExitWithTwo) {
  spit(root_ / "noseed.json", R"({"scm": "desk-1", "n": 100})");
  auto r = cli("decompose -c " + (root_ / "noseed.json").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("BadConfig"), std::string::npos) << r.err;
  spit(root_ / "broken.json", "{\"seed\": ");
  EXPECT_EQ(cli("decompose -c " + (root_ / "broken.json").string()).code, 2);
  spit(root_ / "folds.json", R"({"seed": 1, "scm": "desk-1", "n": 100, "folds": 1})");
  EXPECT_EQ(cli("decompose -c " + (root_ / "folds.json").string()).code, 2);
  EXPECT_EQ(cli("no-such-subcommand").code, 2);
}

TEST_F(Pipeline, EstimationFailuresExitWithThree) {
  auto sim = simulate(300);
  std::istringstream in(slurp(sim / "data.csv"));
  std::string line, out;
  std::getline(in, line);
  out = line + "\n";
  while (std::getline(in, line)) out += "0" + line.substr(line.find(',')) + "\n";  // everyone in x0
  spit(sim / "data.csv", out);
  auto r = cli("decompose --data " + (sim / "data.csv").string() + " --schema " + (sim / "schema.json").string() +
               " --seed 1 -o " + (root_ / "out").string());
  EXPECT_EQ(r.code, 3);
  // cross-fitting notices the missing group before the decomposition does
  EXPECT_TRUE(r.err.find("FoldCollapse") != std::string::npos || r.err.find("EmptyGroup") != std::string::npos)
      << r.err;
}

TEST_F(Pipeline, VersionFlag) { EXPECT_EQ(cli("--version").code, 0); }
