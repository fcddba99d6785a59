// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: ldlab_acceptance [--extended] [--only 1,4,...]
//   --extended  also runs the 3D interstitial study (AC3, and its AC8 share)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "ldlab/config.hpp"
#include "ldlab/error.hpp"
#include "ldlab/fit.hpp"
#include "ldlab/runs.hpp"
#include "ldlab/study.hpp"
#include "../support.hpp"

using namespace ldlab;
using namespace ldlab::test;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string config_path(const std::string& name) { return std::string(LDLAB_CONFIG_DIR) + "/" + name; }

std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << x;
  return os.str();
}

struct Line {
  bool pass = true;
  std::vector<std::string> notes;
  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "" : "FAILED ") + what);
  }
};

bool within(double x, double lo, double hi) { return x >= lo && x <= hi; }

std::string range(double lo, double hi) { return "[" + fmt(lo) + ", " + fmt(hi) + "]"; }

std::optional<double> slope_for(const StudyResult& r, double p) {
  for (std::size_t i = 0; i < r.norms.size(); ++i) {
    if (r.norms[i] == p && r.fits[i]) return r.fits[i]->slope;
  }
  return std::nullopt;
}

void check_slope(Line& l, const StudyResult& r, double p, const std::string& name, double lo, double hi) {
  const auto s = slope_for(r, p);
  if (!s) {
    l.check(false, name + " slope unavailable");
    return;
  }
  l.check(within(*s, lo, hi), name + " slope " + fmt(*s) + " in " + range(lo, hi));
}

void check_rows_converged(Line& l, const StudyResult& r) {
  bool ok = r.reference.converged;
  for (const auto& row : r.rows) ok = ok && row.converged;
  l.check(ok, "all relaxations converged");
}

/// ±50% around the value at the largest N.
void check_stable(Line& l, const std::vector<std::pair<double, double>>& series, const std::string& what,
                  const std::string& var) {
  if (series.size() < 2) {
    l.check(false, what + ": fewer than two values");
    return;
  }
  const double last = series.back().second;
  bool ok = std::isfinite(last) && last > 0.0;
  std::string vals;
  for (const auto& [x, v] : series) {
    ok = ok && std::isfinite(v) && std::abs(v / last - 1.0) <= 0.5;
    vals += (vals.empty() ? "" : ", ") + var + "=" + fmt(x, 3) + ": " + fmt(v, 3);
  }
  l.check(ok, what + " within ±50% of the last value (" + vals + ")");
}

// ---- AC6 -------------------------------------------------------------------

std::shared_ptr<const LatticeModel> fcc_interstitial(const SitePotential& pot) {
  const double a0 = find_lattice_parameter(pot, fcc_basis()).a0;
  auto hom = LatticeModel::homogeneous(a0 * fcc_basis(), 3, pot.cutoff());
  Vector oct = Vector::Zero(3);
  oct(0) = 0.5 * a0;
  return std::make_shared<const LatticeModel>(hom.with_defect({}, {oct}, 0.5 * a0 + 0.5));
}

struct FdStats {
  double grad = 0.0;
  double hess = 0.0;
  int configs = 0;
};

void fd_cell(const std::shared_ptr<const Supercell>& cell, std::shared_ptr<const SitePotential> pot, int configs,
             unsigned seed0, FdStats& st) {
  Assembly asm_(cell, std::move(pot));
  const auto n = static_cast<Eigen::Index>(cell->dofs());
  for (int c = 0; c < configs; ++c) {
    const Vector u = random_vector(n, seed0 + static_cast<unsigned>(c), 0.05);
    const Vector v = random_vector(n, 1000 + seed0 + static_cast<unsigned>(c));
    const Vector g = asm_.gradient(u);
    st.grad = std::max(st.grad, rel_error(fd_gradient(asm_, u, 1e-5), g));
    // small step: the cut-off spline knots make the second derivative piecewise smooth
    const double h = 1e-6;
    const Vector fd_h = (asm_.gradient(u + h * v) - asm_.gradient(u - h * v)) / (2.0 * h);
    st.hess = std::max(st.hess, rel_error(fd_h, asm_.hessian_apply(u, v)));
    ++st.configs;
  }
}

Line ac6() {
  Line l;
  const auto morse = morse4();
  const auto eam = test_eam();
  struct Entry {
    std::string name;
    std::shared_ptr<const SitePotential> pot;
    std::shared_ptr<const SitePotential> geometry;  // lattice parameter source
  };
  const std::vector<Entry> entries{
      {"Morse", morse, morse},
      {"EAM", eam, eam},
      {"quadratic", std::make_shared<LinearizedPotential>(morse), morse},
  };
  for (const auto& e : entries) {
    FdStats st;
    fd_cell(Supercell::build(triangular_model(*e.geometry, true), identity(2), 3), e.pot, 10, 11, st);
    fd_cell(Supercell::build(fcc_interstitial(*e.geometry), fcc_multiplier(), 2), e.pot, 10, 31, st);
    l.check(st.configs == 20 && st.grad <= 1e-6 && st.hess <= 1e-6,
            e.name + ": " + std::to_string(st.configs) + " configurations, gradient " + fmt(st.grad, 2) +
                ", Hessian-apply " + fmt(st.hess, 2) + " (<= 1e-6)");
  }
  return l;
}

// ---- AC7 -------------------------------------------------------------------

/// Zero-mean solution of H u = b via a bordered sparse system.
Vector direct_zero_mean_solve(const SparseMatrix& h, const Vector& b, int m) {
  const auto n = h.rows();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(h.nonZeros() + 2 * n));
  for (int k = 0; k < h.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(h, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    t.emplace_back(i, n + i % m, 1.0);
    t.emplace_back(n + i % m, i, 1.0);
  }
  SparseMatrix k(n + m, n + m);
  k.setFromTriplets(t.begin(), t.end());
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(k);
  if (lu.info() != Eigen::Success) throw NumericalError("bordered Hessian factorisation failed");
  Vector rhs = Vector::Zero(n + m);
  rhs.head(n) = b;
  return lu.solve(rhs).head(n);
}

Line ac7() {
  Line l;
  const auto pot = morse4();
  const auto& phi = pot->radial();
  std::vector<std::shared_ptr<const Supercell>> cells;
  for (bool vac : {false, true}) {
    const auto model = triangular_model(*pot, vac);
    for (int n = 1; 4 * n * n <= 500; ++n) {
      try {
        cells.push_back(Supercell::build(model, identity(2), n));
      } catch (const ConfigError&) {
        // too small for the cut-off
      }
    }
  }
  const double a3 = find_lattice_parameter(*pot, fcc_basis()).a0;
  const auto fcc_hom = std::make_shared<const LatticeModel>(LatticeModel::homogeneous(a3 * fcc_basis(), 3, 2.3));
  for (const auto& model : {fcc_hom, fcc_interstitial(*pot)}) {
    for (int n = 1; 32 * n * n * n <= 500; ++n) {
      try {
        cells.push_back(Supercell::build(model, fcc_multiplier(), n));
      } catch (const ConfigError&) {
      }
    }
  }
  double worst = 0.0;
  int checked = 0;
  for (const auto& cell : cells) {
    if (cell->size() > 500) continue;
    Assembly asm_(cell, pot);
    for (unsigned seed : {1u, 2u}) {
      const Vector u = random_vector(static_cast<Eigen::Index>(cell->dofs()), seed, 0.01);
      const double e = asm_.energy(u);
      const double oracle = naive_pair_energy(*cell, phi, u);
      worst = std::max(worst, std::abs(e - oracle) / std::abs(oracle));
      ++checked;
    }
  }
  l.check(checked > 0 && worst <= 1e-12,
          std::to_string(cells.size()) + " cells <= 500 sites, pair-sum relative error " + fmt(worst, 2) +
              " (<= 1e-12)");

  double worst_solve = 0.0;
  for (int n : {4, 8, 12}) {
    const auto cell = Supercell::build(triangular_model(*pot, true), identity(2), n);
    Assembly asm_(cell, std::make_shared<LinearizedPotential>(pot));
    const auto dofs = static_cast<Eigen::Index>(cell->dofs());
    const Vector zero = Vector::Zero(dofs);
    const Vector direct = direct_zero_mean_solve(asm_.hessian_matrix(zero), -asm_.gradient(zero), 2);
    SolverOptions o;
    o.tol_grad_inf = 1e-13;
    const auto r = relax(asm_, Displacement::zeros(*cell), o);
    worst_solve = std::max(worst_solve, r.converged ? (r.u.values - direct).cwiseAbs().maxCoeff() : INFINITY);
  }
  l.check(worst_solve <= 1e-10, "quadratic relax vs sparse direct solve (N = 4, 8, 12) " + fmt(worst_solve, 2) +
                                    " (<= 1e-10)");
  return l;
}

// ---- AC8 -------------------------------------------------------------------

void check_minimisers(Line& l, const StudyResult& r, const std::string& label) {
  bool index_ok = true;
  std::vector<std::pair<double, double>> eig;
  for (const auto& row : r.rows) {
    if (!row.stability) {
      index_ok = false;
      continue;
    }
    index_ok = index_ok && row.stability->converged && row.stability->index == 0;
    eig.emplace_back(row.half_period, row.stability->inf_sup);
  }
  l.check(index_ok, label + ": index 0 on every N");
  check_stable(l, eig, label + ": smallest eigenvalue", "N");
}

Line ac8_phonons() {
  Line l;
  auto scan = [&](const std::string& name, const SitePotential& pot, const LatticeModel& model) {
    const auto p = phonon_check(pot, model, 64);
    l.check(p.stable && p.c0_estimate > 0.0, name + " c0 " + fmt(p.c0_estimate, 3));
  };
  const auto morse = morse4();
  scan("triangular Morse", *morse, *triangular_model(*morse));
  const double a3 = find_lattice_parameter(*morse, fcc_basis()).a0;
  scan("fcc Morse", *morse, LatticeModel::homogeneous(a3 * fcc_basis(), 3, 2.3));
  const auto eam = test_eam();
  scan("triangular EAM", *eam, *triangular_model(*eam));
  scan("quadratic", LinearizedPotential(morse), *triangular_model(*morse));
  scan("Z² Laplacian", LaplacianPotential(), LatticeModel::homogeneous(Matrix::Identity(2, 2), 1, 1.1));
  return l;
}

// ---- AC10 ------------------------------------------------------------------

Line ac10() {
  Line l;
  const std::vector<int> ns{4, 6, 8, 12, 16, 24, 32};
  double worst_fit = 0.0, worst_study = 0.0;
  const auto cfg = load_config(config_path("planted_selftest.json"));
  for (double s : {1.0, 1.5, 2.0, 3.0}) {
    std::vector<std::pair<double, double>> pts;
    for (int n : ns) pts.emplace_back(n, 0.37 * std::pow(n, -s));
    worst_fit = std::max(worst_fit, std::abs(fit_rate(pts).slope + s));
    StudyConfig sc = *cfg.study;
    sc.planted.exponent = s;
    sc.norms = {kInfinity};
    const auto r = run_convergence(sc);
    worst_study = r.fits[0] ? std::max(worst_study, std::abs(r.fits[0]->slope + s)) : INFINITY;
  }
  l.check(worst_fit <= 1e-6, "fit on C·N^-s, s in {1, 1.5, 2, 3}: max |slope + s| " + fmt(worst_fit, 2));
  l.check(worst_study <= 1e-6, "planted study (sup norm) through the pipeline: max |slope + s| " + fmt(worst_study, 2));
  return l;
}

}  // namespace

int main(int argc, char** argv) {
  bool extended = false;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--extended") {
      extended = true;
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    } else {
      std::cerr << "usage: ldlab_acceptance [--extended] [--only 1,2,...]\n";
      return 2;
    }
  }
  auto wanted = [&](int k) { return only.empty() || only.count(k) > 0; };

  std::vector<std::pair<std::string, Line>> lines;
  auto record = [&](const std::string& id, Line l) {
    std::cout << id << (l.pass ? " PASS" : " FAIL");
    for (const auto& n : l.notes) std::cout << " | " << n;
    std::cout << std::endl;
    lines.emplace_back(id, std::move(l));
  };
  auto guarded = [&](const std::string& id, const std::function<Line()>& f) {
    try {
      record(id, f());
    } catch (const std::exception& e) {
      Line l;
      l.check(false, std::string("exception: ") + e.what());
      record(id, l);
    }
  };

  // 2D vacancy study feeds AC1, AC2, AC8 and AC9
  std::optional<StudyResult> study2d;
  double study2d_seconds = 0.0;
  if (wanted(1) || wanted(2) || wanted(8) || wanted(9)) {
    try {
      const auto cfg = load_config(config_path("triangular_vacancy_study.json"));
      const auto t0 = Clock::now();
      study2d = run_convergence(*cfg.study);
      study2d_seconds = seconds_since(t0);
    } catch (const std::exception& e) {
      std::cout << "2D study failed: " << e.what() << std::endl;
    }
  }
  auto need2d = [&]() -> const StudyResult& {
    if (!study2d) throw NumericalError("the 2D study did not run");
    return *study2d;
  };

  if (wanted(1)) {
    guarded("AC1", [&] {
      Line l;
      const auto& r = need2d();
      check_rows_converged(l, r);
      check_slope(l, r, kInfinity, "l_inf", -2.5, -1.6);
      l.check(study2d_seconds <= 300.0, "runtime " + fmt(study2d_seconds, 3) + " s (<= 300 s)");
      return l;
    });
  }
  if (wanted(2)) {
    guarded("AC2", [&] {
      Line l;
      const auto& r = need2d();
      check_slope(l, r, 2.0, "l2", -1.3, -0.8);
      check_slope(l, r, 4.0, "l4", -1.9, -1.1);
      return l;
    });
  }

  std::optional<StudyResult> study3d;
  if (wanted(3)) {
    if (!extended) {
      std::cout << "AC3 SKIP | extended criterion, run with --extended" << std::endl;
    } else {
      guarded("AC3", [&] {
        Line l;
        const auto cfg = load_config(config_path("fcc_interstitial_study.json"));
        const auto t0 = Clock::now();
        study3d = run_convergence(*cfg.study);
        const double secs = seconds_since(t0);
        check_rows_converged(l, *study3d);
        check_slope(l, *study3d, kInfinity, "l_inf", -3.6, -2.3);
        check_slope(l, *study3d, 2.0, "l2", -1.9, -1.1);
        l.check(secs <= 1800.0, "runtime " + fmt(secs, 4) + " s (<= 1800 s)");
        return l;
      });
    }
  }

  if (wanted(4) || wanted(5)) {
    std::optional<GreensRun> g;
    double g_seconds = 0.0;
    std::string g_error;
    try {
      const auto cfg = load_config(config_path("laplacian_greens.json"));
      const auto t0 = Clock::now();
      g = run_greens(cfg);
      g_seconds = seconds_since(t0);
    } catch (const std::exception& e) {
      g_error = e.what();
    }
    if (wanted(4)) {
      guarded("AC4", [&] {
        Line l;
        if (!g) throw NumericalError(g_error);
        const auto& s = g->study;
        for (std::size_t j = 0; j < s.orders.size(); ++j) {
          const double target = -static_cast<double>(s.orders[j]);
          l.check(std::abs(s.fits[j].slope - target) <= 0.4,
                  "j = " + std::to_string(s.orders[j]) + " slope " + fmt(s.fits[j].slope) +
                      " in " + range(target - 0.4, target + 0.4));
        }
        l.check(s.orders == std::vector<int>{1, 2}, "orders j = 1, 2");
        l.check(g_seconds <= 60.0, "runtime " + fmt(g_seconds, 3) + " s (<= 60 s)");
        return l;
      });
    }
    if (wanted(5)) {
      guarded("AC5", [&] {
        Line l;
        if (!g) throw NumericalError(g_error);
        l.check(g->decay.has_value(), "decay profile computed" + (g->decay_notice.empty() ? "" : ": " + g->decay_notice));
        if (g->decay) {
          l.check(std::abs(g->decay->fit.slope + 2.0) <= 0.5,
                  "second-difference decay slope " + fmt(g->decay->fit.slope) + " in [-2.5, -1.5]");
        }
        l.check(g->residual <= 1e-10, "defining-equation residual " + fmt(g->residual, 2) + " (<= 1e-10)");
        l.check(g->symmetry <= 1e-12, "point symmetry " + fmt(g->symmetry, 2) + " (<= 1e-12)");
        l.check(g->mean <= 1e-12, "zero mean " + fmt(g->mean, 2) + " (<= 1e-12)");
        // summation of n terms of size <= max|D³G|: n·ε·max is the accumulation scale
        l.check(g->third_sum <= 1e-10, "third-difference sum " + fmt(g->third_sum, 2) + " (<= 1e-10)");
        return l;
      });
    }
  }

  if (wanted(6)) guarded("AC6", ac6);
  if (wanted(7)) guarded("AC7", ac7);

  if (wanted(8)) {
    guarded("AC8", [&] {
      Line l = ac8_phonons();
      check_minimisers(l, need2d(), "2D vacancy");
      if (extended && study3d) {
        check_minimisers(l, *study3d, "fcc interstitial");
      } else {
        l.notes.push_back("fcc interstitial minimisers checked under --extended");
      }
      return l;
    });
  }

  if (wanted(9)) {
    guarded("AC9", [&] {
      Line l;
      const auto& r = need2d();
      const auto cfg = load_config(config_path("triangular_vacancy_checks.json"));
      const auto c = run_checks(cfg, &r);
      l.check(c.decay && c.decay->first.has_value(), "decay profile of |Du| on the reference");
      if (c.decay && c.decay->first) {
        const double s = c.decay->first->fit.slope;
        l.check(std::abs(s + 2.0) <= 0.5, "decay slope " + fmt(s) + " in [-2.5, -1.5]");
      }
      std::vector<std::pair<double, double>> cacc;
      for (const auto& [n, k] : c.caccioppoli) {
        if (k.max_ratio) cacc.emplace_back(n, *k.max_ratio);
      }
      check_stable(l, cacc, "Caccioppoli max ratio", "N");
      std::vector<std::pair<double, double>> poin;
      for (const auto& [r1, r2, p] : c.poincare) poin.emplace_back(r2, p.max_ratio);
      check_stable(l, poin, "Poincaré constant", "R2");
      std::vector<std::pair<double, double>> glob, err1;
      for (const auto& [rad, t] : c.truncation) {
        glob.emplace_back(rad, t.max_global);
        err1.emplace_back(rad, t.max_err1);
      }
      check_stable(l, glob, "truncation ‖D T_R u‖ ratio", "R");
      check_stable(l, err1, "truncation ‖D(T_R u − u)‖ ratio", "R");
      return l;
    });
  }

  if (wanted(10)) guarded("AC10", ac10);

  int failed = 0;
  for (const auto& [id, l] : lines) failed += l.pass ? 0 : 1;
  std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << " (" << lines.size()
            << " criteria run)" << std::endl;
  return failed == 0 ? 0 : 1;
}
