#include "ldlab/greens.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "ldlab/error.hpp"
#include "ldlab/fourier.hpp"
#include "ldlab/model.hpp"

namespace ldlab {
namespace {

std::vector<std::uint32_t> shift_map(const Supercell& cell, const IntVector& rho) {
  std::vector<std::uint32_t> out(cell.size());
  for (std::size_t i = 0; i < cell.size(); ++i) out[i] = cell.find(cell.coords(i) + rho);
  return out;
}

void require_homogeneous_offset(const LatticeModel& model, const IntVector& rho) {
  for (const auto& r : model.stencil_coords()) {
    if (r == rho) return;
  }
  throw ConfigError("difference offset is not in the homogeneous stencil");
}

}  // namespace

Matrix GreensTable::at(std::size_t site) const {
  const auto m = static_cast<std::size_t>(range_dim);
  Matrix g(range_dim, range_dim);
  for (int a = 0; a < range_dim; ++a) {
    for (int b = 0; b < range_dim; ++b) g(a, b) = values[site * m * m + static_cast<std::size_t>(a * range_dim + b)];
  }
  return g;
}

Vector GreensTable::column(int i) const {
  const auto m = static_cast<std::size_t>(range_dim);
  Vector out(static_cast<Eigen::Index>(cell->size() * m));
  for (std::size_t s = 0; s < cell->size(); ++s) {
    for (int a = 0; a < range_dim; ++a) {
      out(static_cast<Eigen::Index>(s * m) + a) = values[s * m * m + static_cast<std::size_t>(a * range_dim + i)];
    }
  }
  return out;
}

GreensTable periodic_greens(const SitePotential& pot, std::shared_ptr<const LatticeModel> model,
                            const IntMatrix& multiplier, int half_period) {
  if (model->has_defect()) throw ConfigError("Green's function needs a homogeneous model");
  auto cell = Supercell::build(model, multiplier, half_period);
  const auto hh = HomogeneousHessian::build(pot, *model);
  const int m = model->range_dim();
  FourierGrid grid(model->basis(), IntMatrix(2 * half_period * multiplier));
  const std::size_t n = grid.size();
  if (n != cell->size()) throw NumericalError("Fourier grid does not match the cell");

  const auto mm = static_cast<std::size_t>(m * m);
  std::vector<std::vector<FourierGrid::Complex>> entries(mm, std::vector<FourierGrid::Complex>(n));
  for (std::size_t j = 1; j < n; ++j) {
    const ComplexMatrix s = hh.operator_symbol(grid.wavevector(j));
    Eigen::FullPivLU<ComplexMatrix> lu(s);
    const double scale = s.cwiseAbs().maxCoeff();
    if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-14 * std::pow(std::max(scale, 1e-300), m)) {
      throw NumericalError("phonon symbol is singular at a nonzero wavevector: homogeneous lattice is unstable");
    }
    const ComplexMatrix inv = lu.inverse();
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) entries[static_cast<std::size_t>(a * m + b)][j] = inv(a, b);
    }
  }
  GreensTable table;
  table.cell = cell;
  table.range_dim = m;
  table.values.assign(cell->size() * mm, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<std::size_t> slots(cell->size());
  for (std::size_t i = 0; i < cell->size(); ++i) slots[i] = grid.slot(cell->coords(i));
  for (std::size_t e = 0; e < mm; ++e) {
    grid.backward(entries[e]);
    long double sum = 0.0L;
    for (std::size_t i = 0; i < cell->size(); ++i) {
      table.values[i * mm + e] = entries[e][slots[i]].real() * inv_n;
      sum += table.values[i * mm + e];
    }
    // the zeroed k = 0 mode leaves an n·eps drift after the transform; take it out
    const auto drift = static_cast<double>(sum / static_cast<long double>(n));
    for (std::size_t i = 0; i < cell->size(); ++i) table.values[i * mm + e] -= drift;
  }
  return table;
}

double greens_residual(const GreensTable& table, const SitePotential& pot) {
  std::shared_ptr<const SitePotential> view(&pot, [](const SitePotential*) {});
  Assembly asm_(table.cell, view);
  const int m = table.range_dim;
  const Vector zero = Vector::Zero(static_cast<Eigen::Index>(table.cell->dofs()));
  const std::uint32_t origin = table.cell->find(IntVector::Zero(table.cell->dim()));
  const double inv_n = 1.0 / static_cast<double>(table.cell->size());
  double worst = 0.0;
  for (int i = 0; i < m; ++i) {
    Vector r = asm_.hessian_apply(zero, table.column(i));
    for (std::size_t s = 0; s < table.cell->size(); ++s) r(static_cast<Eigen::Index>(s) * m + i) += inv_n;
    r(static_cast<Eigen::Index>(origin) * m + i) -= 1.0;
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

std::vector<double> greens_differences(const GreensTable& table, const std::vector<IntVector>& offsets) {
  const auto& cell = *table.cell;
  const auto mm = static_cast<std::size_t>(table.range_dim * table.range_dim);
  std::vector<double> cur = table.values, next(cur.size());
  for (const auto& rho : offsets) {
    require_homogeneous_offset(cell.model(), rho);
    const auto map = shift_map(cell, rho);
    for (std::size_t i = 0; i < cell.size(); ++i) {
      for (std::size_t e = 0; e < mm; ++e) next[i * mm + e] = cur[map[i] * mm + e] - cur[i * mm + e];
    }
    std::swap(cur, next);
  }
  return cur;
}

std::vector<std::vector<IntVector>> difference_tuples(const LatticeModel& model, int j) {
  if (j < 1 || j > 3) throw ConfigError("difference order must be 1, 2 or 3");
  const auto& r = model.stencil_coords();
  std::vector<std::vector<IntVector>> out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(j), 0);
  while (true) {
    std::vector<IntVector> t;
    for (auto k : idx) t.push_back(r[k]);
    out.push_back(std::move(t));
    int p = j - 1;
    while (p >= 0 && idx[static_cast<std::size_t>(p)] + 1 == r.size()) --p;
    if (p < 0) break;
    ++idx[static_cast<std::size_t>(p)];
    for (int q = p + 1; q < j; ++q) idx[static_cast<std::size_t>(q)] = idx[static_cast<std::size_t>(p)];
  }
  return out;
}

std::vector<double> difference_magnitudes(const GreensTable& table, int j) {
  const auto mm = static_cast<std::size_t>(table.range_dim * table.range_dim);
  std::vector<double> out(table.cell->size(), 0.0);
  for (const auto& tuple : difference_tuples(table.cell->model(), j)) {
    const auto d = greens_differences(table, tuple);
    for (std::size_t i = 0; i < out.size(); ++i) {
      double s = 0.0;
      for (std::size_t e = 0; e < mm; ++e) s += d[i * mm + e] * d[i * mm + e];
      out[i] = std::max(out[i], std::sqrt(s));
    }
  }
  return out;
}

GreensStudy greens_convergence_study(const SitePotential& pot, std::shared_ptr<const LatticeModel> model,
                                     const IntMatrix& multiplier, const std::vector<int>& half_periods,
                                     const std::vector<int>& orders, int big) {
  if (half_periods.empty()) throw ConfigError("Green's study needs at least one N");
  const int nmax = *std::max_element(half_periods.begin(), half_periods.end());
  if (big < 4 * nmax) throw ConfigError("N_big must be at least 4·max(N)");
  GreensStudy out;
  out.half_periods = half_periods;
  out.orders = orders;
  out.big = big;
  const auto big_table = periodic_greens(pot, model, multiplier, big);
  const auto mm = static_cast<std::size_t>(big_table.range_dim * big_table.range_dim);
  std::vector<GreensTable> tables;
  for (int n : half_periods) tables.push_back(periodic_greens(pot, model, multiplier, n));

  for (int j : orders) {
    std::vector<double> err(half_periods.size(), 0.0);
    for (const auto& tuple : difference_tuples(*model, j)) {
      const auto db = greens_differences(big_table, tuple);
      for (std::size_t t = 0; t < tables.size(); ++t) {
        const auto dn = greens_differences(tables[t], tuple);
        const auto& cell = *tables[t].cell;
        for (std::size_t i = 0; i < cell.size(); ++i) {
          const std::uint32_t b = big_table.cell->find_key(cell.key(i));
          if (b == Supercell::npos) throw NumericalError("site of the small cell missing from the large cell");
          double s = 0.0;
          for (std::size_t e = 0; e < mm; ++e) {
            const double x = db[b * mm + e] - dn[i * mm + e];
            s += x * x;
          }
          err[t] = std::max(err[t], std::sqrt(s));
        }
      }
    }
    std::vector<std::pair<double, double>> pts;
    for (std::size_t t = 0; t < err.size(); ++t) pts.emplace_back(half_periods[t], err[t]);
    out.errors.push_back(err);
    out.fits.push_back(fit_rate(pts));
  }
  return out;
}

DecayProfile decay_profile(const Supercell& cell, const std::vector<double>& magnitudes,
                           const std::vector<double>& radii, double floor, double ratio) {
  DecayProfile out;
  std::vector<std::pair<double, double>> pts;
  for (double r : radii) {
    double v = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < cell.size(); ++i) {
      const double x = cell.position(i).norm();
      if (x >= r && x < ratio * r) {
        v = std::max(v, magnitudes[i]);
        any = true;
      }
    }
    if (!any) continue;
    out.radii.push_back(r);
    out.values.push_back(v);
    if (v > floor) pts.emplace_back(r, v);
  }
  out.fit = fit_rate(pts);
  return out;
}

}  // namespace ldlab
