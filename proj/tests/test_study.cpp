#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ldlab/error.hpp"
#include "ldlab/fit.hpp"
#include "ldlab/study.hpp"
#include "support.hpp"

using namespace ldlab;
using namespace ldlab::test;

namespace {

StudyConfig small_vacancy_study() {
  StudyConfig c;
  c.potential = morse4();
  c.model = triangular_model(*c.potential, true);
  c.multiplier = identity(2);
  c.half_periods = {4, 6, 8, 12};
  c.reference = 24;
  c.exclude_smallest = 0;
  c.stability = false;
  c.phonon_grid = 16;
  return c;
}

const StudyResult& cached_study() {
  static const StudyResult r = run_convergence(small_vacancy_study());
  return r;
}

}  // namespace

TEST(FitRate, ExactPowerLaw) {
  const auto f = fit_rate({{2, 0.25}, {4, 1.0 / 16}, {8, 1.0 / 64}});
  EXPECT_NEAR(f.slope, -2.0, 1e-14);
  EXPECT_NEAR(f.residual, 0.0, 1e-14);
  EXPECT_EQ(f.points, 3);
}

TEST(FitRate, Flat) { EXPECT_NEAR(fit_rate({{2, 1}, {4, 1}, {8, 1}}).slope, 0.0, 1e-15); }

TEST(FitRate, DropsNonPositiveWithNotice) {
  const auto f = fit_rate({{2, 0.5}, {3, 0.0}, {4, 0.25}, {8, 0.125}});
  EXPECT_EQ(f.points, 3);
  EXPECT_FALSE(f.notices.empty());
  EXPECT_NEAR(f.slope, -1.0, 1e-14);
}

TEST(FitRate, TooFewPoints) { EXPECT_THROW(fit_rate({{2, 0.5}, {4, 0.25}}), ConfigError); }

TEST(FitRate, NoisyCubicRegression) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  std::vector<std::pair<double, double>> pts;
  for (double n : {4, 6, 8, 12, 16, 24, 32}) pts.emplace_back(n, std::pow(n, -3.0) * (1.0 + 0.1 * noise(rng)));
  EXPECT_NEAR(fit_rate(pts).slope, -3.0, 0.15);
}

TEST(FitRate, PlantedExponentsRecovered) {
  for (double s : {1.0, 1.5, 2.0, 3.0}) {
    std::vector<std::pair<double, double>> pts;
    for (double n : {4, 6, 8, 12, 16, 24, 32}) pts.emplace_back(n, 0.37 * std::pow(n, -s));
    EXPECT_NEAR(fit_rate(pts).slope, -s, 1e-6);
  }
}

TEST(Study, PlantedSupNormSlope) {
  StudyConfig c = small_vacancy_study();
  c.half_periods = {4, 6, 8, 12, 16};
  c.reference = 20;
  c.planted.enabled = true;
  c.planted.exponent = 2.0;
  c.norms = {INFINITY};
  const auto r = run_convergence(c);
  ASSERT_TRUE(r.fits[0]);
  EXPECT_NEAR(r.fits[0]->slope, -2.0, 1e-6);
}

TEST(Study, ConfigValidation) {
  StudyConfig c = small_vacancy_study();
  c.reference = 12;
  EXPECT_THROW(run_convergence(c), ConfigError);
  c = small_vacancy_study();
  c.half_periods = {4, 8, 6};
  EXPECT_THROW(run_convergence(c), ConfigError);
  c = small_vacancy_study();
  c.norms = {1.0};
  EXPECT_THROW(run_convergence(c), ConfigError);
  c = small_vacancy_study();
  c.reference = 0;
  c.half_periods = {4, 6, 32};
  EXPECT_EQ(c.reference_half_period(), 80);
}

TEST(Study, ErrorsDecreaseAndRegionMonotone) {
  const auto& r = cached_study();
  ASSERT_EQ(r.rows.size(), 4u);
  for (const auto& row : r.rows) {
    EXPECT_TRUE(row.converged);
    // ℓ∞ over Λ_{N/2} never exceeds ℓ∞ over Λ_N
    EXPECT_LE(row.error_inf_half, row.errors.back() * (1 + 1e-15));
    // ℓ∞ ≤ ℓ4 ≤ ℓ2 on counting measure
    EXPECT_LE(row.errors[2], row.errors[1]);
    EXPECT_LE(row.errors[1], row.errors[0]);
  }
  for (std::size_t i = 1; i < r.rows.size(); ++i) EXPECT_LT(r.rows[i].errors.back(), r.rows[i - 1].errors.back());
  EXPECT_TRUE(r.reference.converged);
  EXPECT_LE(r.reference.grad_inf, 1e-12);
}

TEST(Study, ErrorsInvariantUnderConstants) {
  const auto& r = cached_study();
  const auto& cell = *r.cells.back();
  Vector u = r.solutions.back().values;
  Vector ref = r.reference.u.values;
  const auto base = strain_error(cell, u, *r.reference_cell, ref);
  for (Eigen::Index i = 0; i < u.size(); i += 2) u.segment(i, 2) += Vector::Constant(2, 0.9);
  for (Eigen::Index i = 0; i < ref.size(); i += 2) ref.segment(i, 2) -= Vector::Constant(2, 4.0);
  const auto shifted = strain_error(cell, u, *r.reference_cell, ref);
  for (std::size_t i = 0; i < base.size(); ++i) EXPECT_NEAR(base[i], shifted[i], 1e-12);
}

TEST(Study, ContinuationGivesSameErrors) {
  StudyConfig c = small_vacancy_study();
  c.continuation = true;
  const auto r = run_convergence(c);
  const auto& base = cached_study();
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_NEAR(r.rows[i].errors.back(), base.rows[i].errors.back(), 1e-8 * base.rows[i].errors.back() + 1e-12);
  }
}

TEST(InitialGuess, OffsetsOnlyTouchAddedSites) {
  const auto pot = morse4();
  auto hom = LatticeModel::homogeneous(1.28 * fcc_basis(), 3, 2.3);
  Vector oct = Vector::Zero(3);
  oct(0) = 0.64;
  auto model = std::make_shared<const LatticeModel>(hom.with_defect({}, {oct}, 1.2));
  const auto cell = Supercell::build(model, fcc_multiplier(), 2);
  Vector off(3);
  off << 0.05, 0.0, 0.0;
  const auto u = initial_guess(*cell, {off});
  EXPECT_EQ(u.values.segment(3 * static_cast<Eigen::Index>(cell->added_site(0)), 3), off);
  EXPECT_EQ(u.values.head(3 * static_cast<Eigen::Index>(cell->lattice_count())).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(initial_guess(*cell, {off, off}), ConfigError);
}

TEST(DecayCheck, HomogeneousSkipped) {
  const auto pot = morse4();
  const auto cell = Supercell::build(triangular_model(*pot), identity(2), 8);
  const auto d = decay_check(*cell, Vector::Zero(static_cast<Eigen::Index>(cell->dofs())));
  EXPECT_TRUE(d.skipped);
  EXPECT_FALSE(d.notice.empty());
}

TEST(Caccioppoli, ZeroErrorNotApplicable) {
  const auto& r = cached_study();
  const auto& cell = *r.cells.back();
  const std::vector<double> zero(cell.size(), 0.0);
  const auto c = caccioppoli_check(cell, zero);
  ASSERT_FALSE(c.entries.empty());
  for (const auto& e : c.entries) EXPECT_FALSE(e.ratio);
  EXPECT_FALSE(c.max_ratio);
}

TEST(Caccioppoli, HarmonicLikeFieldBounded) {
  // |e(ℓ)| ~ (1 + |ℓ|)^{-1/2}: inner and annulus norms both grow like r^{1/2}
  auto m = std::make_shared<const LatticeModel>(LatticeModel::homogeneous(Matrix::Identity(2, 2), 2, 1.1));
  std::vector<double> worst;
  for (int n : {32, 64}) {
    const auto cell = Supercell::build(m, identity(2), n);
    std::vector<double> e(cell->size());
    for (std::size_t i = 0; i < cell->size(); ++i) e[i] = std::pow(1.0 + Vector(cell->position(i)).norm(), -0.5);
    const auto c = caccioppoli_check(*cell, e);
    ASSERT_TRUE(c.max_ratio);
    worst.push_back(*c.max_ratio);
    EXPECT_LT(*c.max_ratio, 10.0);
  }
  EXPECT_NEAR(worst[0], worst[1], 0.2 * worst[1]);
}

TEST(Caccioppoli, RadiusRangeEnforced) {
  const auto& r = cached_study();
  const auto& cell = *r.cells.back();
  const std::vector<double> e(cell.size(), 1.0);
  EXPECT_THROW(caccioppoli_check(cell, e, {1.0}), ConfigError);
  EXPECT_THROW(caccioppoli_check(cell, e, {double(cell.half_period())}), ConfigError);
}

TEST(Poincare, ConstantFieldRatioZero) {
  auto m = std::make_shared<const LatticeModel>(LatticeModel::homogeneous(Matrix::Identity(2, 2), 2, 1.1));
  const auto cell = Supercell::build(m, identity(2), 32);
  Displacement c = Displacement::zeros(*cell);
  c.values.setConstant(1.5);
  EXPECT_EQ(poincare_ratio(*cell, c, 8, 16), 0.0);
}

TEST(Poincare, LinearRampBoundedAcrossScales) {
  auto m = std::make_shared<const LatticeModel>(LatticeModel::homogeneous(Matrix::Identity(2, 2), 2, 1.1));
  const auto cell = Supercell::build(m, identity(2), 64);
  std::vector<double> ratios;
  for (double r2 : {16.0, 32.0, 48.0}) {
    // the ramp need not be periodic: only the annulus and its fattening are read
    Displacement u = Displacement::sample(*cell, [](const Vector& x) {
      Vector out = Vector::Zero(2);
      out(0) = x(0);
      return out;
    }, false);
    ratios.push_back(poincare_ratio(*cell, u, r2 / 2, r2));
  }
  for (double r : ratios) EXPECT_NEAR(r, ratios.back(), 0.2 * ratios.back());
}

TEST(Poincare, AnnulusPreconditions) {
  auto m = std::make_shared<const LatticeModel>(LatticeModel::homogeneous(Matrix::Identity(2, 2), 2, 1.1));
  const auto cell = Supercell::build(m, identity(2), 16);
  const auto u = Displacement::zeros(*cell);
  EXPECT_THROW(poincare_ratio(*cell, u, 0.5, 8), ConfigError);
  EXPECT_THROW(poincare_ratio(*cell, u, 8, 8.5), ConfigError);
}

TEST(Poincare, RandomFieldsStableUnderRefinement) {
  auto m = std::make_shared<const LatticeModel>(LatticeModel::homogeneous(Matrix::Identity(2, 2), 2, 1.1));
  const auto cell = Supercell::build(m, identity(2), 40);
  const auto a = poincare_check(*cell, 8, 16, 40, 7);
  const auto b = poincare_check(*cell, 16, 32, 40, 7);
  EXPECT_NEAR(a.max_ratio, b.max_ratio, 0.2 * b.max_ratio);
}

TEST(Truncation, RatiosBounded) {
  auto m = std::make_shared<const LatticeModel>(LatticeModel::homogeneous(Matrix::Identity(2, 2), 2, 1.1));
  const auto cell = Supercell::build(m, identity(2), 48);
  std::vector<double> g, e;
  for (double r : {16.0, 24.0, 40.0}) {
    const auto t = truncation_check(*cell, r, 8, 3);
    g.push_back(t.max_global);
    e.push_back(t.max_err1);
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_LT(g[i], 5.0);
    EXPECT_LT(e[i], 5.0);
  }
}
