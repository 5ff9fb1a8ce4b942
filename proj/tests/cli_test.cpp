#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;

struct Result {
  int exit_code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(ODR_DRO_CLI) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("odr_dro_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, GenIsDeterministic) {
  ASSERT_EQ(run("gen --app cvar --m 12 --seed 4 -o " + path("a.json")).exit_code, 0);
  ASSERT_EQ(run("gen --app cvar --m 12 --seed 4 -o " + path("b.json")).exit_code, 0);
  const std::string a = slurp(path("a.json"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(path("b.json")));
  EXPECT_TRUE(nlohmann::json::accept(a));
}

TEST_F(Cli, SolveFixtureFromGeneratedFile) {
  ASSERT_EQ(run("gen --app cvar-fixture -o " + path("fixture.json")).exit_code, 0);
  const Result r = run("solve --instance " + path("fixture.json") + " --method full");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("method"), "full");
  EXPECT_TRUE(j.at("certified").get<bool>());
  EXPECT_NEAR(j.at("value").get<double>(), 2.0, 1e-4);
}

TEST_F(Cli, SolveReportsInfiniteUpperBound) {
  const Result r = run("solve --app newsvendor --m 10 --seed 0 --method pca-ub");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_EQ(nlohmann::json::parse(r.out).at("value"), "inf");
}

TEST_F(Cli, BenchWithoutTimingIsReproducible) {
  const std::string args = "bench --app newsvendor --sizes 6,8 --seeds 2 --methods full,pca-lb,odr-lb --no-timing -o ";
  ASSERT_EQ(run(args + path("a.csv")).exit_code, 0);
  ASSERT_EQ(run(args + path("b.csv")).exit_code, 0);
  const std::string a = slurp(path("a.csv"));
  EXPECT_EQ(a, slurp(path("b.csv")));
  EXPECT_EQ(a.rfind("Size,Inst,Method,Value,Time,Gap1,Gap2,IntervalGap\n", 0), 0u);
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 1 + 2 * 2 * 3);

  const Result rep = run("report " + path("a.csv") + " --svg-prefix " + path("plot"));
  ASSERT_EQ(rep.exit_code, 0);
  EXPECT_NE(rep.out.find("odr-lb:2"), std::string::npos) << rep.out;
  for (const char* metric : {"gap1", "gap2", "interval", "time"}) {
    EXPECT_TRUE(fs::exists(path(std::string("plot-") + metric + ".svg"))) << metric;
  }
}

TEST_F(Cli, ConfigFileFillsUnsetFlags) {
  {
    std::ofstream cfg(path("cfg.json"));
    cfg << R"({"app": "cvar", "sizes": [6], "seeds": 3, "methods": "full", "no-timing": true})";
  }
  const Result from_file = run("bench --config " + path("cfg.json"));
  ASSERT_EQ(from_file.exit_code, 0);
  EXPECT_EQ(std::count(from_file.out.begin(), from_file.out.end(), '\n'), 1 + 3);
  // A flag on the command line wins over the file.
  const Result overridden = run("bench --config " + path("cfg.json") + " --seeds 1");
  ASSERT_EQ(overridden.exit_code, 0);
  EXPECT_EQ(std::count(overridden.out.begin(), overridden.out.end(), '\n'), 1 + 1);
  EXPECT_EQ(from_file.out.substr(0, overridden.out.size()), overridden.out);
}

TEST_F(Cli, RejectsBadInput) {
  EXPECT_EQ(run("solve --app cvar --m 6 --method nonsense").exit_code, 1);
  EXPECT_EQ(run("bench --methods full --sizes x").exit_code, 1);
  {
    std::ofstream cfg(path("bad.json"));
    cfg << R"({"no-such-flag": 1})";
  }
  EXPECT_EQ(run("bench --config " + path("bad.json")).exit_code, 1);
  EXPECT_NE(run("solve --app cvar --m 6 --method odr-rlb --m1 5").exit_code, 0);
  EXPECT_NE(run("report " + path("missing.csv")).exit_code, 0);
}

}  // namespace
