#include <algorithm>
#include <cmath>

#include "ldlab/error.hpp"
#include "ldlab/lattice.hpp"

namespace ldlab {

Displacement Displacement::zeros(const Supercell& cell) {
  return {Vector::Zero(static_cast<Eigen::Index>(cell.dofs())), true};
}

Displacement Displacement::sample(const Supercell& cell,
                                  const std::function<Vector(const Vector&)>& f,
                                  bool check_periodic) {
  const int m = cell.range_dim();
  Displacement u{Vector(static_cast<Eigen::Index>(cell.dofs())), false};
  for (std::size_t i = 0; i < cell.size(); ++i) {
    const Vector v = f(cell.position(i));
    if (v.size() != m) throw ConfigError("sampled field has wrong range dimension");
    u.values.segment(static_cast<Eigen::Index>(i) * m, m) = v;
  }
  if (!check_periodic) return u;
  for (std::size_t i = 0; i < cell.size(); ++i) {
    const auto& st = cell.site_stencil(i);
    const auto nb = cell.neighbors(i);
    for (int k = 0; k < st.count; ++k) {
      const auto off = st.offset(k);
      const Vector y = cell.position(i) + Eigen::Map<const Vector>(off.data(), cell.dim());
      const Vector fy = f(y);
      const auto t = static_cast<Eigen::Index>(nb[static_cast<std::size_t>(k)]);
      const auto ft = u.values.segment(t * m, m);
      if ((fy - ft).norm() > 1e-10 * (1.0 + fy.norm())) {
        throw ConfigError("displacement field is not periodic on the supercell (affine and other "
                          "non-periodic fields must enter through the reference configuration)");
      }
    }
  }
  return u;
}

Vector field_mean(const Vector& field, int range_dim) {
  const Eigen::Index n = field.size() / range_dim;
  Vector mean = Vector::Zero(range_dim);
  for (Eigen::Index i = 0; i < n; ++i) mean += field.segment(i * range_dim, range_dim);
  return n > 0 ? Vector(mean / static_cast<double>(n)) : mean;
}

void project_zero_mean(Vector& field, int range_dim) {
  const Vector mean = field_mean(field, range_dim);
  const Eigen::Index n = field.size() / range_dim;
  for (Eigen::Index i = 0; i < n; ++i) field.segment(i * range_dim, range_dim) -= mean;
}

std::span<const double> StrainField::at(std::size_t site) const {
  const auto m = static_cast<std::size_t>(cell_->range_dim());
  return {values_.data() + cell_->bond_begin(site) * m,
          (cell_->bond_end(site) - cell_->bond_begin(site)) * m};
}

std::vector<double> StrainField::magnitudes() const {
  std::vector<double> out(cell_->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = 0.0;
    for (double v : at(i)) s += v * v;
    out[i] = std::sqrt(s);
  }
  return out;
}

StrainField strain(const Displacement& u, std::shared_ptr<const Supercell> cell) {
  const int m = cell->range_dim();
  if (u.values.size() != static_cast<Eigen::Index>(cell->dofs())) {
    throw ConfigError("displacement does not match the supercell");
  }
  std::vector<double> values(cell->num_bonds() * static_cast<std::size_t>(m));
  const double* uu = u.values.data();
  for (std::size_t i = 0; i < cell->size(); ++i) {
    const auto nb = cell->neighbors(i);
    double* out = values.data() + cell->bond_begin(i) * static_cast<std::size_t>(m);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      for (int a = 0; a < m; ++a) {
        out[k * static_cast<std::size_t>(m) + static_cast<std::size_t>(a)] =
            uu[static_cast<std::size_t>(nb[k]) * m + a] - uu[i * static_cast<std::size_t>(m) + a];
      }
    }
  }
  return StrainField(std::move(cell), std::move(values));
}

StrainField difference(const StrainField& a, const StrainField& b) {
  if (&a.cell() != &b.cell() || a.values().size() != b.values().size()) {
    throw ConfigError("strain fields live on different cells");
  }
  std::vector<double> v(a.values().size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] - b.values()[i];
  return StrainField(a.cell_ptr(), std::move(v));
}

bool Region::contains_cell_coords(const Eigen::Ref<const Vector>& s) const {
  constexpr double tol = 1e-9;
  auto in_cube = [&](double r) {
    if (std::isinf(r)) return true;
    const double rr = std::ceil(r - tol);
    if (rr <= 0.0) return false;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (!(s(i) > -rr + tol && s(i) <= rr + tol)) return false;
    }
    return true;
  };
  return in_cube(outer) && !(inner > 0.0 && in_cube(inner));
}

std::size_t region_size(const Supercell& cell, const Region& region) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < cell.size(); ++i) n += region.contains_cell_coords(cell.cell_coords(i));
  return n;
}

double subset_norm(const Supercell& cell, std::span<const double> magnitudes, const Region& region,
                   double p) {
  if (!(p >= 2.0)) throw ConfigError("norm exponent must satisfy 2 <= p <= infinity");
  if (magnitudes.size() != cell.size()) throw ConfigError("per-site values do not match the cell");
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < cell.size(); ++i) {
    if (!region.contains_cell_coords(cell.cell_coords(i))) continue;
    ++count;
    const double v = std::abs(magnitudes[i]);
    if (std::isinf(p)) {
      acc = std::max(acc, v);
    } else if (p == 2.0) {
      acc += v * v;
    } else {
      acc += std::pow(v, p);
    }
  }
  if (count == 0) throw ConfigError("norm over an empty region");
  if (std::isinf(p)) return acc;
  return p == 2.0 ? std::sqrt(acc) : std::pow(acc, 1.0 / p);
}

double subset_norm(const StrainField& s, const Region& region, double p) {
  const auto mags = s.magnitudes();
  return subset_norm(s.cell(), mags, region, p);
}

double displacement_norm(const Supercell& cell, const Vector& u, const Region& region, double p,
                         bool subtract_mean) {
  const int m = cell.range_dim();
  Vector mean = Vector::Zero(m);
  if (subtract_mean) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < cell.size(); ++i) {
      if (!region.contains_cell_coords(cell.cell_coords(i))) continue;
      mean += u.segment(static_cast<Eigen::Index>(i) * m, m);
      ++count;
    }
    if (count == 0) throw ConfigError("norm over an empty region");
    mean /= static_cast<double>(count);
  }
  std::vector<double> mags(cell.size());
  for (std::size_t i = 0; i < cell.size(); ++i) {
    mags[i] = (u.segment(static_cast<Eigen::Index>(i) * m, m) - mean).norm();
  }
  return subset_norm(cell, mags, region, p);
}

TruncationConstants truncation_constants(const Supercell& cell) {
  const double h = cell.min_cell_height();
  const double rcell = cell.model().cutoff() / h;
  TruncationConstants c;
  c.fattening = rcell;
  c.min_radius = (cell.model().defect_radius() + cell.model().cutoff()) / h + 1.0;
  c.truncation = std::max(2.0 * c.min_radius, 6.0 * c.fattening + 6.0 * rcell);
  return c;
}

double cutoff_eta(const Eigen::Ref<const Vector>& cell_coords, double radius) {
  const double s = cell_coords.cwiseAbs().maxCoeff() / radius;
  const double t = std::clamp((s - 4.0 / 6.0) * 6.0, 0.0, 1.0);
  return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

Displacement truncate(const Displacement& u, const Supercell& cell, double radius) {
  const auto consts = truncation_constants(cell);
  if (radius < consts.truncation) {
    throw ConfigError("truncation radius " + std::to_string(radius) + " is below R_T = " +
                      std::to_string(consts.truncation));
  }
  if (radius > cell.half_period()) throw ConfigError("truncation radius exceeds the half-period N");
  const int m = cell.range_dim();
  const double rcell = cell.cutoff_in_cells();
  const Region annulus = Region::annulus(4.0 * radius / 6.0 - rcell, 5.0 * radius / 6.0 + rcell);
  Vector mean = Vector::Zero(m);
  std::size_t count = 0;
  for (std::size_t i = 0; i < cell.size(); ++i) {
    if (!annulus.contains_cell_coords(cell.cell_coords(i))) continue;
    mean += u.values.segment(static_cast<Eigen::Index>(i) * m, m);
    ++count;
  }
  if (count == 0) throw ConfigError("truncation annulus is empty");
  mean /= static_cast<double>(count);

  const Region inside = Region::cube(radius);
  Displacement out{Vector::Zero(u.values.size()), false};
  for (std::size_t i = 0; i < cell.size(); ++i) {
    if (!inside.contains_cell_coords(cell.cell_coords(i))) continue;
    const auto seg = static_cast<Eigen::Index>(i) * m;
    out.values.segment(seg, m) = cutoff_eta(cell.cell_coords(i), radius) * (u.values.segment(seg, m) - mean);
  }
  return out;
}

}  // namespace ldlab
