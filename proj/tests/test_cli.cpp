#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <spdelab/cli.hpp>

using namespace spdelab;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = SPDELAB_SCENARIO_DIR;

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "spdelab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("spdelab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

nlohmann::json base_doc() {
  return nlohmann::json::parse(R"({
    "name": "unit",
    "space": {"kind": "euclidean", "dim": 2},
    "operator": {"kind": "matrix", "generator": [[-1, 1], [0, 1]]},
    "projection": {"kind": "coordinate", "mask": [false, true]},
    "drift": {"builder": "sine", "amplitude": 0.1},
    "noise": {"eigenvalues": [1, 1]},
    "diffusion": {"builder": "sine_diagonal", "amplitude": 0.2},
    "certificate": {"lambda1": 1.5},
    "initial": [1.0, 0.5]
  })");
}

}  // namespace

TEST(Schema, UnknownKeyIsRejected) {
  auto doc = base_doc();
  doc["colour"] = "blue";
  EXPECT_THROW(parse_scenario(doc), SchemaError);
  auto nested = base_doc();
  nested["drift"]["amplitdue"] = 0.1;
  EXPECT_THROW(parse_scenario(nested), SchemaError);
}

TEST(Schema, MissingRequiredKeyIsRejected) {
  auto doc = base_doc();
  doc.erase("name");
  EXPECT_THROW(parse_scenario(doc), SchemaError);
}

TEST(Schema, BuildersCarryLipschitzConstants) {
  const ScenarioDocument d = parse_scenario(base_doc());
  ASSERT_TRUE(d.scenario.has_value());
  EXPECT_NEAR(d.scenario->lipschitz.L_F, 0.01, 1e-15);
  EXPECT_NEAR(d.scenario->lipschitz.L_sigma, 0.04, 1e-15);
  EXPECT_EQ(d.scenario->lipschitz.L_gamma, 0.0);
  ASSERT_TRUE(d.scenario->certificate.has_value());
  EXPECT_NEAR(d.scenario->certificate->lambda0, 0.5, 1e-9);
  EXPECT_NO_THROW(audit_lipschitz(*d.scenario));
}

TEST(Schema, UnderstatedDeclarationIsRejected) {
  auto doc = base_doc();
  doc["lipschitz"] = {{"L_F", 0.001}};
  EXPECT_THROW(parse_scenario(doc), SchemaError);
  doc["lipschitz"] = {{"L_F", 0.02}};
  EXPECT_NEAR(parse_scenario(doc).scenario->lipschitz.L_F, 0.02, 1e-15);
}

TEST(Schema, ShippedScenariosParse) {
  for (const auto& entry : fs::directory_iterator(kScenarios)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_scenario(entry.path().string())) << entry.path();
  }
}

TEST(Cli, CertifyShearExample) {
  const fs::path dir = fresh_dir("certify");
  const Result r = run_cli({"certify", "--scenario", kScenarios + "/shear_2x2.json", "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("lambda0 = 0.5\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("lambda1 = 1.5\n"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir / "certificate.json"));
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  const Result r = run_cli({"frobnicate"});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE((r.out + r.err).empty());
  EXPECT_EQ(run_cli({}).code, 1);
}

TEST(Cli, MissingScenarioFileIsSchemaError) {
  EXPECT_EQ(run_cli({"certify", "--scenario", "/nonexistent/file.json"}).code, 1);
}

TEST(Cli, CounterexampleLabDiverges) {
  const fs::path dir = fresh_dir("lab_counter");
  const Result r = run_cli({"lab", "--scenario", kScenarios + "/counterexample_a.json", "--out", dir.string()});
  EXPECT_EQ(r.code, 3) << r.out << r.err;
  EXPECT_NE(r.out.find("diverges"), std::string::npos) << r.out;
}

TEST(Cli, ReportWithoutManifest) {
  const fs::path dir = fresh_dir("report_empty");
  EXPECT_EQ(run_cli({"report", dir.string()}).code, 1);
}

TEST(Cli, ReportSinglePassedExperiment) {
  const fs::path dir = fresh_dir("report_single");
  auto doc = nlohmann::json::parse(R"({
    "name": "flow",
    "space": {"kind": "euclidean", "dim": 2},
    "operator": {"kind": "matrix", "generator": [[-1, 0], [0, 0]]},
    "projection": {"kind": "coordinate", "mask": [false, true]},
    "certificate": {"lambda1": 0},
    "flags": {"vanishing_on_H1": true, "deterministic_P1": true},
    "initial": [2.0, 1.0],
    "experiments": [{"kind": "vanishing_coeff", "label": "decay", "dt": 0.01, "horizon": 2.0, "n_traj": 4,
                     "n_snapshots": 20, "seed": 1}]
  })");
  write_file(dir / "flow.json", doc.dump());
  const Result lab = run_cli({"lab", "--scenario", (dir / "flow.json").string(), "--out", (dir / "run").string()});
  ASSERT_EQ(lab.code, 0) << lab.out << lab.err;
  const Result rep = run_cli({"report", (dir / "run").string()});
  EXPECT_EQ(rep.code, 0);
  const std::string summary = rep.out.substr(0, rep.out.find("\n\n") + 1);
  EXPECT_EQ(summary, "experiment,outcome\ndecay,pass\n");
}

TEST(Cli, CsvFormatAndDeterminismAcrossThreads) {
  const fs::path a = fresh_dir("csv_a"), b = fresh_dir("csv_b");
  const std::vector<std::string> common = {"simulate", "--scenario", kScenarios + "/shear_2x2.json", "--steps", "500",
                                           "--traj", "300", "--snapshots", "5", "--samples"};
  auto args_a = common, args_b = common;
  args_a.insert(args_a.end(), {"--out", a.string(), "--threads", "1"});
  args_b.insert(args_b.end(), {"--out", b.string(), "--threads", "3"});
  ASSERT_EQ(run_cli(args_a).code, 0);
  ASSERT_EQ(run_cli(args_b).code, 0);
  for (const std::string f : {"simulate.csv", "terminal_samples.csv", "manifest.json"}) {
    const std::string ca = slurp(a / f), cb = slurp(b / f);
    EXPECT_FALSE(ca.empty()) << f;
    EXPECT_EQ(ca, cb) << f;
  }
  const std::string csv = slurp(a / "simulate.csv");
  EXPECT_EQ(csv.rfind("time,statistic,value,std_err\n", 0), 0u);
  EXPECT_EQ(csv.back(), '\n');
  EXPECT_EQ(csv.find(';'), std::string::npos);
}

TEST(Cli, W2BetweenSampleFiles) {
  const fs::path dir = fresh_dir("w2");
  write_file(dir / "a.csv", "x0\n0\n1\n2\n3\n");
  write_file(dir / "b.csv", "x0\n3\n4\n5\n2\n");
  const Result r = run_cli({"w2", (dir / "a.csv").string(), (dir / "b.csv").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("W2 = 2\n"), std::string::npos) << r.out;
  const Result ra = run_cli({"w2", (dir / "a.csv").string(), (dir / "b.csv").string(), "--estimator", "assignment"});
  EXPECT_NE(ra.out.find("W2 = 2\n"), std::string::npos) << ra.out;
}

TEST(Cli, HjmmWithoutMarginIsHypothesisViolation) {
  const fs::path dir = fresh_dir("hjmm_margin");
  const Result r = run_cli({"hjmm", "--beta", "1", "--beta-prime", "1000", "--traj", "2", "--out", dir.string()});
  EXPECT_EQ(r.code, 2) << r.out << r.err;
}
