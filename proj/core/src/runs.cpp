#include "ldlab/runs.hpp"

#include <algorithm>
#include <cmath>

#include "ldlab/error.hpp"

namespace ldlab {

A0Run run_a0(const Config& cfg) {
  A0Run r;
  r.lattice = cfg.lattice_name;
  r.from_potential = cfg.lattice_constant_from_potential;
  if (cfg.lattice_constant_from_potential) {
    r.a0 = cfg.lattice_constant;
    r.energy_per_site = cfg.energy_per_site;
  } else {
    if (!(cfg.potential->cutoff() > 0.0)) throw ConfigError("a0 needs a potential with a cut-off radius");
    const auto lp = find_lattice_parameter(*cfg.potential, cfg.unit_basis);
    r.a0 = lp.a0;
    r.energy_per_site = lp.energy_per_site;
    r.from_potential = true;
  }
  return r;
}

namespace {

PhononCheck gate(const Config& cfg) {
  auto pc = phonon_check(*cfg.potential, *cfg.homogeneous, cfg.phonon_grid);
  if (!pc.stable) {
    std::string k;
    for (Eigen::Index i = 0; i < pc.worst_k.size(); ++i) k += (i ? ", " : "") + std::to_string(pc.worst_k(i));
    throw NumericalError("homogeneous lattice is phonon unstable: min eigenvalue " + std::to_string(pc.min_eigenvalue) +
                         " at k = (" + k + ")");
  }
  return pc;
}

}  // namespace

RelaxRun run_relax(const Config& cfg) {
  if (!cfg.relax) throw ConfigError("relax: the config has no relax section");
  RelaxRun r;
  r.phonon = gate(cfg);
  r.cell = Supercell::build(cfg.model, cfg.multiplier, cfg.relax->half_period);
  Assembly asm_(r.cell, cfg.potential);
  r.result = relax(asm_, initial_guess(*r.cell, cfg.initial_added), cfg.solver);
  if (!r.result.converged) {
    throw NumericalError("relaxation failed: " + r.result.message + " (gradient sup-norm " +
                         std::to_string(r.result.grad_inf) + ")");
  }
  if (cfg.relax->stability) {
    const double mu = cfg.solver.mu > 0.0 ? cfg.solver.mu : Preconditioner::default_mu(*cfg.potential, *cfg.model);
    Preconditioner metric(r.cell, mu, cfg.solver.shift_ratio);
    r.stability = stability_spectrum(asm_, r.result.u.values, metric, cfg.spectrum);
  }
  return r;
}

StabilityRun run_stability(const Config& cfg) {
  StabilityRun s;
  s.phonon = phonon_check(*cfg.potential, *cfg.homogeneous, cfg.phonon_grid);
  if (cfg.relax && s.phonon.stable) {
    Config c = cfg;
    c.relax->stability = true;
    s.relaxed = run_relax(c);
  }
  return s;
}

double greens_symmetry_defect(const GreensTable& table) {
  const auto& cell = *table.cell;
  double worst = 0.0;
  for (std::size_t i = 0; i < cell.size(); ++i) {
    const std::uint32_t j = cell.find(-cell.coords(i));
    worst = std::max(worst, (table.at(i) - table.at(j)).cwiseAbs().maxCoeff());
  }
  return worst;
}

double greens_mean_defect(const GreensTable& table) {
  // long double so the measurement is not swamped by its own rounding
  const auto mm = static_cast<std::size_t>(table.range_dim * table.range_dim);
  double worst = 0.0;
  for (std::size_t e = 0; e < mm; ++e) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < table.cell->size(); ++i) s += table.values[i * mm + e];
    worst = std::max(worst, static_cast<double>(std::abs(s)));
  }
  return worst;
}

double greens_third_sum(const GreensTable& table) {
  const auto mm = static_cast<std::size_t>(table.range_dim * table.range_dim);
  double worst = 0.0;
  for (const auto& tuple : difference_tuples(table.cell->model(), 3)) {
    const auto d = greens_differences(table, tuple);
    for (std::size_t e = 0; e < mm; ++e) {
      long double s = 0.0L;
      for (std::size_t i = 0; i < table.cell->size(); ++i) s += d[i * mm + e];
      worst = std::max(worst, static_cast<double>(std::abs(s)));
    }
  }
  return worst;
}

GreensRun run_greens(const Config& cfg) {
  if (!cfg.greens) throw ConfigError("greens: the config has no greens section");
  const auto& g = *cfg.greens;
  GreensRun r;
  gate(cfg);
  r.study = greens_convergence_study(*cfg.potential, cfg.homogeneous, cfg.multiplier, g.half_periods, g.orders, g.big);
  r.decay_half_period = g.decay_half_period > 0 ? g.decay_half_period : g.big;
  r.table = periodic_greens(*cfg.potential, cfg.homogeneous, cfg.multiplier, r.decay_half_period);
  r.residual = greens_residual(r.table, *cfg.potential);
  r.symmetry = greens_symmetry_defect(r.table);
  r.mean = greens_mean_defect(r.table);
  r.third_sum = greens_third_sum(r.table);

  std::vector<double> radii = g.decay_radii;
  if (radii.empty()) {
    // r ≪ N: stay inside a quarter of the cell
    const double hi = 0.25 * r.decay_half_period * r.table.cell->min_cell_height();
    for (double x = 2.0 * cfg.homogeneous->cutoff(); g.decay_ratio * x <= hi; x *= g.decay_ratio) radii.push_back(x);
  }
  try {
    r.decay = decay_profile(*r.table.cell, difference_magnitudes(r.table, 2), radii, 0.0, g.decay_ratio);
  } catch (const ConfigError& e) {
    r.decay_notice = e.what();
  }
  return r;
}

ChecksRun run_checks(const Config& cfg, const StudyResult* study) {
  if (!cfg.checks) throw ConfigError("checks: the config has no checks section");
  const auto& k = *cfg.checks;
  ChecksRun out;
  if ((k.decay || k.caccioppoli) && !study) throw ConfigError("checks: decay and Caccioppoli checks need a study result");
  if (k.decay) {
    if (!study->reference_cell) throw ConfigError("checks: study result carries no reference solution");
    out.decay = decay_check(*study->reference_cell, study->reference.u.values, {}, k.decay_ratio);
    if (!out.decay->notice.empty()) out.notices.push_back(out.decay->notice);
  }
  if (k.caccioppoli) {
    for (std::size_t i = 0; i < study->rows.size(); ++i) {
      if (!study->rows[i].converged || study->cells[i]->half_period() < 8) continue;
      const auto err = strain_error(*study->cells[i], study->solutions[i].values, *study->reference_cell,
                                    study->reference.u.values);
      out.caccioppoli.emplace_back(study->rows[i].half_period, caccioppoli_check(*study->cells[i], err));
    }
  }
  if (k.poincare_half_period > 0 || k.truncation_half_period > 0) {
    const double cutoff = k.sample_cutoff > 0.0 ? k.sample_cutoff : cfg.homogeneous->cutoff();
    auto light = std::make_shared<const LatticeModel>(
        LatticeModel::homogeneous(cfg.homogeneous->basis(), cfg.homogeneous->range_dim(), cutoff));
    if (k.poincare_half_period > 0) {
      auto cell = Supercell::build(light, cfg.multiplier, k.poincare_half_period);
      for (const auto& [r1, r2] : k.poincare_annuli) {
        out.poincare.emplace_back(r1, r2, poincare_check(*cell, r1, r2, k.poincare_samples, k.seed));
      }
    }
    if (k.truncation_half_period > 0) {
      auto cell = Supercell::build(light, cfg.multiplier, k.truncation_half_period);
      for (double r : k.truncation_radii) {
        out.truncation.emplace_back(r, truncation_check(*cell, r, k.truncation_samples, k.seed));
      }
    }
  }
  return out;
}

}  // namespace ldlab
