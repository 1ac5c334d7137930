#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ellipsym/cli.hpp"
#include "ellipsym/distributions.hpp"
#include "ellipsym/io.hpp"
#include "ellipsym/rng.hpp"
#include "ellipsym/teststat.hpp"

using namespace ellipsym;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ellipsym_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) const {
    const fs::path path = dir_ / name;
    std::ofstream(path) << text;
    return path.string();
  }

  std::string normal_csv(int n, std::uint64_t seed) const {
    Rng rng = make_stream(seed, {});
    const Sample x = sample_normal(2, n, rng);
    std::ostringstream s;
    s << "x1,x2\n";
    for (Eigen::Index i = 0; i < x.rows(); ++i) s << format_real(x(i, 0)) << ',' << format_real(x(i, 1)) << '\n';
    return write("data.csv", s.str());
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, TestReportsJson) {
  const std::string data = normal_csv(60, 1);
  const CliRun r = run({"test", data, "--estimator", "cl", "--nboot", "49", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["estimator"], "cl");
  EXPECT_EQ(doc["nboot"], 49);
  EXPECT_EQ(doc["config"]["b"], 2.0);
  const double p = doc["p_value"];
  EXPECT_DOUBLE_EQ(p, doc["k"].get<int>() / 50.0);
  EXPECT_FALSE(doc.contains("replicates"));
  EXPECT_FALSE(doc.contains("wall_time_seconds"));
  EXPECT_EQ(doc["input_digest"].get<std::string>().size(), 16u);
}

TEST_F(CliTest, TestOutputIndependentOfThreads) {
  const std::string data = normal_csv(40, 2);
  const CliRun a = run({"test", data, "--estimator", "ds", "--nboot", "20", "--seed", "5", "--replicates"});
  const CliRun b = run({"test", data, "--estimator", "ds", "--nboot", "20", "--seed", "5", "--replicates", "--threads", "3"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const CliRun c = run({"test", data, "--estimator", "ds", "--nboot", "20", "--seed", "6", "--replicates"});
  EXPECT_NE(a.out, c.out);
}

TEST_F(CliTest, ThreadsFromEnvironment) {
  const std::string data = normal_csv(40, 2);
  const CliRun a = run({"test", data, "--estimator", "cl", "--nboot", "20"});
  ::setenv("ELLIPSYM_THREADS", "2", 1);
  const CliRun b = run({"test", data, "--estimator", "cl", "--nboot", "20"});
  ::setenv("ELLIPSYM_THREADS", "zero", 1);
  const CliRun bad = run({"test", data, "--estimator", "cl", "--nboot", "20"});
  ::unsetenv("ELLIPSYM_THREADS");
  EXPECT_EQ(b.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(bad.code, 1);
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
  const std::string data = normal_csv(40, 3);
  const std::string cfg = write("cfg.json", R"({"estimator": "cl", "nboot": 9, "b": 1.5, "alpha": 0.1})");
  const CliRun r = run({"test", data, "--config", cfg, "--nboot", "11"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["nboot"], 11);
  EXPECT_EQ(doc["estimator"], "cl");
  EXPECT_EQ(doc["config"]["b"], 1.5);
  EXPECT_EQ(doc["config"]["alpha"], 0.1);
}

TEST_F(CliTest, UnknownConfigKeyIsValidationError) {
  const std::string data = normal_csv(40, 3);
  const std::string cfg = write("cfg.json", R"({"nbot": 9})");
  const CliRun r = run({"test", data, "--config", cfg});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("/nbot"), std::string::npos) << r.err;
}

TEST_F(CliTest, MalformedRowNamesLine) {
  const std::string data = write("bad.csv", "1,2\n3,4\n1,2,x\n");
  const CliRun r = run({"test", data});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ParseError"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
  const CliRun r2 = run({"test", write("bad2.csv", "a,b\n1,2\n3,x\n")});
  EXPECT_NE(r2.err.find("line 3"), std::string::npos) << r2.err;
}

TEST_F(CliTest, ZeroReplicatesIsInvalidConfig) {
  const CliRun r = run({"test", normal_csv(30, 4), "--nboot", "0"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("InvalidConfig"), std::string::npos) << r.err;
}

TEST_F(CliTest, TooFewRows) {
  const CliRun r = run({"test", write("small.csv", "1,2\n3,5\n")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("TooFewRows"), std::string::npos) << r.err;
}

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"test"}).code, 1);
  EXPECT_EQ(run({"test", normal_csv(30, 1), "--estimator", "mcd"}).code, 1);
}

TEST_F(CliTest, FTableRoundTripAndReuse) {
  const std::string table = path("f2.txt");
  ASSERT_EQ(run({"ftable", "--p", "2", "--u-max", "20", "--out", table}).code, 0);
  std::ifstream in(table);
  const FTable loaded = FTable::load(in, 2);
  std::ostringstream again;
  loaded.save(again);
  std::ifstream raw(table);
  const std::string original((std::istreambuf_iterator<char>(raw)), std::istreambuf_iterator<char>());
  EXPECT_EQ(again.str(), original);

  const std::string data = normal_csv(50, 5);
  const CliRun with = run({"test", data, "--estimator", "cl", "--nboot", "19", "--ftable", table});
  const CliRun without = run({"test", data, "--estimator", "cl", "--nboot", "19"});
  ASSERT_EQ(with.code, 0) << with.err;
  EXPECT_EQ(nlohmann::json::parse(with.out)["p_value"], nlohmann::json::parse(without.out)["p_value"]);
}

TEST_F(CliTest, FTableHeaderMismatch) {
  const std::string table = path("f.txt");
  ASSERT_EQ(run({"ftable", "--p", "2", "--u-max", "2", "--out", table}).code, 0);
  std::ifstream in(table);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  text.replace(0, text.find('\n'), "# ellipsym-ftable 2");
  const std::string bad = write("bad.txt", text);
  const CliRun r = run({"test", normal_csv(30, 6), "--nboot", "5", "--ftable", bad});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("VersionError"), std::string::npos) << r.err;
}

TEST_F(CliTest, KdeConstantColumn) {
  const CliRun r = run({"kde", write("v.csv", "t\n1.5\n1.5\n1.5\n")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ZeroSpread"), std::string::npos) << r.err;
}

TEST_F(CliTest, KdeWritesCurve) {
  const CliRun r = run({"kde", write("v.csv", "t\n0.1\n0.4\n0.35\n0.9\n"), "--bandwidth", "0.2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, 10), "x,density\n");
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 513);
}

TEST_F(CliTest, SimulateWritesTables) {
  const std::string exp = write("exp.json", R"({"null": "H0_1", "n": 30, "nr": 4, "nboot": 9,
      "alternatives": [1.0, "H1_star_2"], "estimators": ["cl", "ds"], "seed": 2})");
  const std::string prefix = path("out");
  const CliRun r = run({"simulate", exp, "--out", prefix, "--statistics", path("stats.csv"), "--quiet"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream csv(prefix + ".csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "null,alternative,estimator,freq,se,starred,valid");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  EXPECT_EQ(rows, 6);
  std::ifstream json(prefix + ".json");
  const auto doc = nlohmann::json::parse(json);
  EXPECT_EQ(doc["spec"]["null"], "H0_1");
  EXPECT_TRUE(fs::exists(path("stats.csv")));

  // Same seed, other thread count: identical bytes.
  const CliRun again = run({"simulate", exp, "--out", path("out2"), "--threads", "2", "--quiet"});
  ASSERT_EQ(again.code, 0);
  std::ifstream a(prefix + ".csv"), b(path("out2") + ".csv");
  const std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  const std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  EXPECT_EQ(sa, sb);
}

TEST_F(CliTest, SimulateNullOnly) {
  const std::string exp = write("exp.json", R"({"null": "H0_3", "n": 25, "nr": 3, "nboot": 9, "alternatives": []})");
  const CliRun r = run({"simulate", exp, "--out", path("o"), "--quiet"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 2);
}

TEST_F(CliTest, SimulateUnknownNull) {
  const std::string exp = write("exp.json", R"({"null": "H0_12", "nr": 3})");
  const CliRun r = run({"simulate", exp, "--out", path("o")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ValidationError"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("/null"), std::string::npos) << r.err;
}
