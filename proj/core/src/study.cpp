#include "ldlab/study.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ldlab/error.hpp"

namespace ldlab {
namespace {

std::vector<int> bond_map(const Stencil& a, const Stencil& b) {
  std::vector<int> map(static_cast<std::size_t>(a.count), -1);
  if (a.count != b.count) throw NumericalError("stencils of matched sites differ in size");
  for (int k = 0; k < a.count; ++k) {
    const auto x = a.offset(k);
    for (int l = 0; l < b.count; ++l) {
      const auto y = b.offset(l);
      bool same = true;
      for (int i = 0; i < a.dim && same; ++i) same = std::abs(x[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(i)]) < 1e-9;
      if (same) {
        map[static_cast<std::size_t>(k)] = l;
        break;
      }
    }
    if (map[static_cast<std::size_t>(k)] < 0) throw NumericalError("bond of the small cell has no partner in the reference cell");
  }
  return map;
}

}  // namespace

StudyConfig::StudyConfig() {
  reference_solver.newton_refine = true;
  reference_solver.tol_grad_inf = 1e-12;
}

int StudyConfig::reference_half_period() const {
  if (reference > 0) return reference;
  if (half_periods.empty()) throw ConfigError("study needs a list of half-periods");
  const int nmax = *std::max_element(half_periods.begin(), half_periods.end());
  return static_cast<int>(std::ceil(2.5 * nmax));
}

std::vector<double> strain_error(const Supercell& cell, const Vector& u, const Supercell& ref, const Vector& u_ref) {
  const int m = cell.range_dim();
  std::vector<double> out(cell.size());
  std::vector<double> g, gr;
  for (std::size_t i = 0; i < cell.size(); ++i) {
    const std::uint32_t r = ref.find_key(cell.key(i));
    if (r == Supercell::npos) throw NumericalError("site of the supercell is missing from the reference cell");
    const auto& st = cell.site_stencil(i);
    const auto& rst = ref.site_stencil(r);
    g.resize(static_cast<std::size_t>(st.count * m));
    gr.resize(static_cast<std::size_t>(rst.count * m));
    gather_strain(cell, i, u.data(), g.data());
    gather_strain(ref, r, u_ref.data(), gr.data());
    double s = 0.0;
    if (cell.stencil_id(i) == 0 && ref.stencil_id(r) == 0) {
      for (std::size_t k = 0; k < g.size(); ++k) s += (g[k] - gr[k]) * (g[k] - gr[k]);
    } else {
      const auto map = bond_map(st, rst);
      for (int k = 0; k < st.count; ++k) {
        for (int a = 0; a < m; ++a) {
          const double x = g[static_cast<std::size_t>(k * m + a)] - gr[static_cast<std::size_t>(map[static_cast<std::size_t>(k)] * m + a)];
          s += x * x;
        }
      }
    }
    out[i] = std::sqrt(s);
  }
  return out;
}

Displacement planted_field(const Supercell& cell) {
  const int m = cell.range_dim();
  const double n = cell.half_period();
  Displacement w{Vector::Zero(static_cast<Eigen::Index>(cell.dofs())), false};
  for (std::size_t i = 0; i < cell.size(); ++i) {
    const auto s = cell.cell_coords(i);
    double v = std::sin(std::numbers::pi * s(0) / n);
    for (int a = 1; a < cell.dim(); ++a) v *= 1.0 + 0.5 * std::cos(std::numbers::pi * s(a) / n);
    w.values(static_cast<Eigen::Index>(i) * m) = v;
  }
  const auto mags = strain(w, std::shared_ptr<const Supercell>(&cell, [](const Supercell*) {})).magnitudes();
  const double mx = *std::max_element(mags.begin(), mags.end());
  w.values /= mx;
  return w;
}

Displacement initial_guess(const Supercell& cell, const std::vector<Vector>& added_offsets) {
  Displacement u = Displacement::zeros(cell);
  if (added_offsets.empty()) return u;
  if (added_offsets.size() != cell.model().added().size()) {
    throw ConfigError("initial offsets: need one per added site");
  }
  const int m = cell.range_dim();
  for (std::size_t k = 0; k < added_offsets.size(); ++k) {
    if (added_offsets[k].size() != m) throw ConfigError("initial offsets: wrong dimension");
    u.values.segment(static_cast<Eigen::Index>(cell.added_site(k)) * m, m) = added_offsets[k];
  }
  return u;
}

StudyResult run_convergence(const StudyConfig& cfg) {
  if (!cfg.model || !cfg.potential) throw ConfigError("study needs a model and a potential");
  if (cfg.half_periods.size() < 1) throw ConfigError("study needs a list of half-periods");
  for (std::size_t i = 1; i < cfg.half_periods.size(); ++i) {
    if (cfg.half_periods[i] <= cfg.half_periods[i - 1]) throw ConfigError("N_list must be strictly increasing");
  }
  for (double p : cfg.norms) {
    if (!(p >= 2.0)) throw ConfigError("norm exponents must satisfy 2 <= p <= infinity");
  }
  const int nref = cfg.reference_half_period();
  if (nref <= cfg.half_periods.back()) throw ConfigError("reference N must exceed N_max");

  StudyResult res;
  res.norms = cfg.norms;
  res.reference_half_period = nref;

  if (!cfg.planted.enabled) {
    auto hom = std::make_shared<const LatticeModel>(
        LatticeModel::homogeneous(cfg.model->basis(), cfg.model->range_dim(), cfg.model->cutoff()));
    res.phonon = phonon_check(*cfg.potential, *hom, cfg.phonon_grid);
    if (!res.phonon->stable) {
      throw NumericalError("homogeneous lattice fails the phonon stability check (c0 estimate " +
                           std::to_string(res.phonon->c0_estimate) + ")");
    }
  }

  for (int n : cfg.half_periods) {
    auto cell = Supercell::build(cfg.model, cfg.multiplier, n);
    StudyRow row;
    row.half_period = n;
    row.sites = cell->size();
    Displacement u;
    if (cfg.planted.enabled) {
      u = planted_field(*cell);
      u.values *= cfg.planted.amplitude * std::pow(static_cast<double>(n), -cfg.planted.exponent);
      row.converged = true;
      row.message = "planted";
    } else {
      Assembly asm_(cell, cfg.potential);
      Displacement u0 = initial_guess(*cell, cfg.initial_added);
      if (cfg.continuation && !res.solutions.empty() && res.rows.back().converged) {
        u0 = prolong(res.solutions.back(), *res.cells.back(), *cell);
      }
      auto r = relax(asm_, u0, cfg.solver);
      row.converged = r.converged;
      row.iterations = r.iterations;
      row.newton_iterations = r.newton_iterations;
      row.grad_inf = r.grad_inf;
      row.energy = r.energy;
      row.message = r.message;
      u = r.u;
      if (cfg.stability && r.converged) {
        const double mu = cfg.solver.mu > 0.0 ? cfg.solver.mu : Preconditioner::default_mu(*cfg.potential, *cfg.model);
        Preconditioner metric(cell, mu, cfg.solver.shift_ratio);
        row.stability = stability_spectrum(asm_, u.values, metric, cfg.spectrum);
      }
    }
    res.rows.push_back(std::move(row));
    res.cells.push_back(cell);
    res.solutions.push_back(std::move(u));
  }

  // The reference comes last so that continuation can seed it.
  res.reference_cell = Supercell::build(cfg.model, cfg.multiplier, nref);
  if (cfg.planted.enabled) {
    res.reference.u = Displacement::zeros(*res.reference_cell);
    res.reference.converged = true;
    res.reference.message = "planted";
  } else {
    Assembly asm_(res.reference_cell, cfg.potential);
    Displacement u0 = initial_guess(*res.reference_cell, cfg.initial_added);
    for (std::size_t i = res.rows.size(); cfg.continuation && i-- > 0;) {
      if (!res.rows[i].converged) continue;
      u0 = prolong(res.solutions[i], *res.cells[i], *res.reference_cell);
      break;
    }
    res.reference = relax(asm_, u0, cfg.reference_solver);
    if (!res.reference.converged) {
      throw NumericalError("reference solve at N = " + std::to_string(nref) + " failed: " + res.reference.message +
                           " (gradient sup-norm " + std::to_string(res.reference.grad_inf) + ")");
    }
  }

  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    auto& row = res.rows[i];
    const auto& cell = *res.cells[i];
    const auto err = strain_error(cell, res.solutions[i].values, *res.reference_cell, res.reference.u.values);
    for (double p : cfg.norms) row.errors.push_back(subset_norm(cell, err, Region::full(), p));
    row.error_inf_half = subset_norm(cell, err, Region::cube(0.5 * row.half_period), kInfinity);
  }

  for (std::size_t p = 0; p < cfg.norms.size(); ++p) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
      if (static_cast<int>(i) < cfg.exclude_smallest) continue;
      if (!res.rows[i].converged) continue;
      pts.emplace_back(res.rows[i].half_period, res.rows[i].errors[p]);
    }
    try {
      auto fit = fit_rate(pts);
      for (const auto& n : fit.notices) res.notices.push_back(n);
      res.fits.emplace_back(std::move(fit));
    } catch (const ConfigError& e) {
      res.notices.push_back(std::string("no slope for p = ") + (std::isinf(cfg.norms[p]) ? "inf" : std::to_string(cfg.norms[p])) +
                            ": " + e.what());
      res.fits.emplace_back(std::nullopt);
    }
  }
  for (const auto& row : res.rows) {
    if (!row.converged) res.notices.push_back("N = " + std::to_string(row.half_period) + " excluded: " + row.message);
  }
  return res;
}

}  // namespace ldlab
