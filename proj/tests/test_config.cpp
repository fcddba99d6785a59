#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ldlab/config.hpp"
#include "ldlab/error.hpp"
#include "ldlab/io.hpp"
#include "support.hpp"

using namespace ldlab;

namespace {

std::string morse_lattice(const std::string& extra_lattice = "", const std::string& extra_top = "") {
  return R"({"schema_version": 1, "lattice": {"preset": "triangular")" + extra_lattice +
         R"(}, "potential": {"type": "morse", "alpha": 4.0, "r_lo": 1.5, "r_hi": 2.3})" + extra_top + "}";
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, MinimalTriangular) {
  const auto c = parse_config(morse_lattice());
  EXPECT_EQ(c.lattice_name, "triangular");
  EXPECT_TRUE(c.lattice_constant_from_potential);
  EXPECT_NEAR(c.lattice_constant, 0.96424571524927982, 1e-12);
  EXPECT_EQ(c.model->range_dim(), 2);
  EXPECT_FALSE(c.model->has_defect());
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_NE(error_of(morse_lattice(", \"colour\": 3")).find("colour"), std::string::npos);
  EXPECT_NE(error_of(morse_lattice("", ", \"bogus\": {}")).find("bogus"), std::string::npos);
}

TEST(Config, SchemaVersionRequired) {
  EXPECT_FALSE(error_of(R"({"lattice": {"preset": "square"}, "potential": {"type": "laplacian"}})").empty());
  EXPECT_FALSE(error_of(R"({"schema_version": 99, "lattice": {"preset": "square"}, "potential": {"type": "laplacian"}})").empty());
}

TEST(Config, MalformedJsonReportsLineAndColumn) {
  const std::string msg = error_of("{\n  \"schema_version\": 1,\n  \"lattice\": [1, 2,,]\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(Config, WrongTypeNamesThePath) {
  const std::string msg = error_of(morse_lattice("", R"(, "relax": {"half_period": "eight"})"));
  EXPECT_NE(msg.find("relax.half_period"), std::string::npos) << msg;
}

TEST(Config, Defects) {
  auto v = parse_config(morse_lattice(R"(, "defect": {"type": "vacancy"})"));
  EXPECT_EQ(v.model->removed().size(), 1u);
  auto fcc = parse_config(R"({"schema_version": 1, "lattice": {"preset": "fcc",
      "defect": {"type": "interstitial", "site": "octahedral", "initial_offset": [0.05, 0, 0]}},
      "potential": {"type": "morse", "alpha": 4.0, "r_lo": 1.5, "r_hi": 2.3}})");
  ASSERT_EQ(fcc.model->added().size(), 1u);
  EXPECT_NEAR(fcc.model->added()[0](0), 0.5 * fcc.lattice_constant, 1e-14);
  ASSERT_EQ(fcc.initial_added.size(), 1u);
  EXPECT_NEAR(fcc.initial_added[0](0), 0.05 * fcc.lattice_constant, 1e-14);
  EXPECT_FALSE(error_of(morse_lattice(R"(, "defect": {"type": "interstitial", "site": "octahedral"})")).empty());
  EXPECT_FALSE(error_of(morse_lattice(R"(, "defect": {"type": "custom", "added": [[0.5, 0.2]], "initial_offsets": []})")).empty());
}

TEST(Config, SquareLaplacianScalar) {
  const auto c = parse_config(R"({"schema_version": 1, "lattice": {"preset": "square", "cutoff": 1.1},
      "potential": {"type": "laplacian"}, "greens": {"half_periods": [8, 16, 32], "big": 128}})");
  EXPECT_EQ(c.model->range_dim(), 1);
  EXPECT_EQ(c.model->stencil().size(), 4u);
  ASSERT_TRUE(c.greens);
  EXPECT_EQ(c.greens->big, 128);
  EXPECT_FALSE(error_of(R"({"schema_version": 1, "lattice": {"preset": "square", "cutoff": 1.1},
      "potential": {"type": "laplacian"}, "greens": {"half_periods": [8, 16, 64], "big": 128}})").empty());
}

TEST(Config, StudySection) {
  const auto c = parse_config(morse_lattice(R"(, "defect": {"type": "vacancy"})",
                                            R"(, "study": {"half_periods": [4, 8, 16], "norms": [2, "inf"]})"));
  ASSERT_TRUE(c.study);
  EXPECT_EQ(c.study->reference_half_period(), 40);
  ASSERT_EQ(c.study->norms.size(), 2u);
  EXPECT_TRUE(std::isinf(c.study->norms[1]));
  EXPECT_FALSE(error_of(morse_lattice("", R"(, "study": {"half_periods": [4, 8], "reference": 8})")).empty());
  EXPECT_FALSE(error_of(morse_lattice("", R"(, "study": {"half_periods": [8, 4]})")).empty());
}

TEST(Config, CanonicalFormIgnoresWhitespaceAndOrder) {
  const auto a = parse_config(morse_lattice());
  const auto b = parse_config(R"({ "potential": {"r_hi": 2.3, "alpha": 4.0, "type": "morse", "r_lo": 1.5},
      "lattice": {"preset": "triangular"}, "schema_version": 1 })");
  EXPECT_EQ(a.canonical, b.canonical);
  EXPECT_EQ(make_provenance(a, 1, true).config_hash, make_provenance(b, 1, true).config_hash);
}

TEST(Io, FormatDouble) {
  EXPECT_EQ(format_double(1.0), "1.0000000000000000e+00");
  EXPECT_EQ(format_double(INFINITY), "inf");
  EXPECT_EQ(std::stod(format_double(0.1)), 0.1);
  EXPECT_EQ(fnv1a(""), 14695981039346656037ull);
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Io, StudyJsonRoundTrips) {
  StudyResult r;
  r.norms = {2.0, INFINITY};
  r.reference_half_period = 20;
  StudyRow row;
  row.half_period = 8;
  row.sites = 255;
  row.converged = true;
  row.errors = {0.1, 0.01};
  r.rows.push_back(row);
  r.fits = {FitResult{-1.0, 0.0, 0.0, 3, {}}, std::nullopt};
  const auto c = parse_config(morse_lattice());
  const auto text = study_json(r, make_provenance(c, 1, true));
  EXPECT_NO_THROW(validate_results(text));
  EXPECT_THROW(validate_results("{\"kind\": \"study\"}"), ConfigError);
  const auto csv = study_errors_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "N,p,err");
  EXPECT_NE(csv.find("8,inf,1.0000000000000000e-02"), std::string::npos) << csv;
}

TEST(Io, ExtendedXyzHeader) {
  const auto c = parse_config(morse_lattice(R"(, "defect": {"type": "vacancy"})"));
  const auto cell = Supercell::build(c.model, c.multiplier, 3);
  std::ostringstream os;
  write_xyz(os, *cell, Vector::Zero(static_cast<Eigen::Index>(cell->dofs())), "Ar");
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(std::stoul(line), cell->size());
  std::getline(is, line);
  EXPECT_EQ(line.rfind("Lattice=\"", 0), 0u) << line;
  std::getline(is, line);
  EXPECT_EQ(line.rfind("Ar ", 0), 0u) << line;
}
