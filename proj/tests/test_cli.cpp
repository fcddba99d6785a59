#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ldlab/config.hpp"
#include "ldlab/io.hpp"
#include "ldlab/potential.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(LDLAB_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p)) r.output += buf;
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ldlab_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string config(const std::string& name) { return std::string(LDLAB_CONFIG_DIR) + "/" + name; }

// drops the timestamp so payloads can be compared byte for byte
std::string strip_timestamp(const std::string& s) {
  return std::regex_replace(s, std::regex("\"timestamp\": *\"[^\"]*\""), "\"timestamp\":\"\"");
}

}  // namespace

TEST(Cli, A0MatchesScanOracle) {
  const auto dir = scratch("a0");
  const auto r = run("a0 --config " + config("triangular_a0.json") + " --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("a0 = "), std::string::npos);
  EXPECT_NE(r.output.find("energy per site = "), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(dir / "a0.json"));
  const double a0 = j["a0"].get<double>();
  // dense 1e-7 scan oracle
  auto pot = ldlab::test::morse4();
  double best = 0.0, be = INFINITY;
  for (double a = 0.96; a <= 0.97; a += 1e-7) {
    const double e = ldlab::homogeneous_site_energy(*pot, ldlab::test::triangular_basis(), a);
    if (e < be) {
      be = e;
      best = a;
    }
  }
  EXPECT_NEAR(a0, best, 2e-7);
  EXPECT_NO_THROW(ldlab::validate_results(slurp(dir / "a0.json")));
  EXPECT_TRUE(j["provenance"].contains("config_hash"));
  EXPECT_TRUE(j["provenance"].contains("timestamp"));
  EXPECT_TRUE(j["provenance"].contains("version"));
}

TEST(Cli, MissingConfigNamesPath) {
  const auto r = run("a0 --config /nonexistent/where.json --out " + scratch("missing").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("/nonexistent/where.json"), std::string::npos) << r.output;
}

TEST(Cli, MalformedJsonExitOneWithPosition) {
  const auto dir = scratch("malformed");
  spit(dir / "bad.json", "{\n  \"schema_version\": 1,\n  \"lattice\": {\"preset\": \"square\",}\n}\n");
  const auto r = run("a0 --config " + (dir / "bad.json").string() + " --out " + dir.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("line 3"), std::string::npos) << r.output;
}

TEST(Cli, UnknownKeyExitOne) {
  const auto dir = scratch("unknown");
  spit(dir / "c.json", R"({"schema_version": 1, "lattice": {"preset": "square", "cutoff": 1.1}, "potential": {"type": "laplacian"}, "extra": 1})");
  const auto r = run("a0 --config " + (dir / "c.json").string() + " --out " + dir.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("extra"), std::string::npos) << r.output;
}

TEST(Cli, NumericalFailureExitTwoWithDiagnostic) {
  // stretched lattice: the phonon gate fails
  const auto dir = scratch("unstable");
  spit(dir / "c.json", R"({"schema_version": 1,
    "lattice": {"preset": "triangular", "lattice_constant": 1.3, "defect": {"type": "vacancy"}},
    "potential": {"type": "morse", "alpha": 4.0, "r_lo": 1.5, "r_hi": 2.3},
    "relax": {"half_period": 4}})");
  const auto r = run("relax --config " + (dir / "c.json").string() + " --out " + dir.string());
  EXPECT_EQ(r.code, 2) << r.output;
  ASSERT_TRUE(fs::exists(dir / "diagnostic.json"));
  EXPECT_NO_THROW(ldlab::validate_results(slurp(dir / "diagnostic.json")));
}

TEST(Cli, StabilityReportsUnstableWithoutFailing) {
  const auto dir = scratch("stability");
  spit(dir / "c.json", R"({"schema_version": 1, "lattice": {"preset": "triangular", "lattice_constant": 1.3},
    "potential": {"type": "morse", "alpha": 4.0, "r_lo": 1.5, "r_hi": 2.3}})");
  const auto r = run("stability --config " + (dir / "c.json").string() + " --out " + dir.string());
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("UNSTABLE"), std::string::npos) << r.output;
}

TEST(Cli, RelaxWritesOutputsAndDeterministicRunsMatch) {
  const auto a = scratch("relax_a"), b = scratch("relax_b");
  const auto ra = run("relax --deterministic --config " + config("triangular_vacancy_relax.json") + " --out " + a.string());
  ASSERT_EQ(ra.code, 0) << ra.output;
  const auto rb = run("relax --deterministic --config " + config("triangular_vacancy_relax.json") + " --out " + b.string());
  ASSERT_EQ(rb.code, 0) << rb.output;
  for (const char* f : {"relax.json", "history.csv", "relaxed.xyz"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(strip_timestamp(slurp(a / f)), strip_timestamp(slurp(b / f))) << f;
  }
  // env overrides mirror the flags
  const auto c = scratch("relax_c");
  const std::string env = "LDLAB_CONFIG=" + config("triangular_vacancy_relax.json") + " LDLAB_OUT=" + c.string() +
                          " LDLAB_DETERMINISTIC=1 ";
  const int code = std::system((env + LDLAB_CLI + " relax > /dev/null 2>&1").c_str());
  ASSERT_EQ(WEXITSTATUS(code), 0);
  for (const char* f : {"relax.json", "history.csv", "relaxed.xyz"}) {
    EXPECT_EQ(strip_timestamp(slurp(a / f)), strip_timestamp(slurp(c / f))) << f;
  }
  EXPECT_NO_THROW(ldlab::validate_results(slurp(a / "relax.json")));
  const auto xyz = slurp(a / "relaxed.xyz");
  EXPECT_NE(xyz.find("Lattice=\""), std::string::npos);
}

TEST(Cli, PlantedStudySlope) {
  const auto dir = scratch("planted");
  const auto r = run("study --deterministic --config " + config("planted_selftest.json") + " --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto slopes = slurp(dir / "slopes.csv");
  EXPECT_NE(slopes.find("inf,-1.5000000"), std::string::npos) << slopes;
  EXPECT_NO_THROW(ldlab::validate_results(slurp(dir / "results.json")));
  EXPECT_TRUE(fs::exists(dir / "errors.csv"));
}

TEST(Cli, GreensOutputsValidate) {
  const auto dir = scratch("greens");
  spit(dir / "c.json", R"({"schema_version": 1, "lattice": {"preset": "square", "cutoff": 1.1},
    "potential": {"type": "laplacian"}, "greens": {"half_periods": [4, 8, 16], "big": 64}})");
  const auto r = run("greens --config " + (dir / "c.json").string() + " --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NO_THROW(ldlab::validate_results(slurp(dir / "greens.json")));
  const auto csv = slurp(dir / "greens_table.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 32 * 32);
}

TEST(Cli, BadArgumentsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("a0 --threads -3 --config x").code, 1);
}
