#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/LU>

#include "ldlab/error.hpp"
#include "ldlab/potential.hpp"

namespace ldlab {
namespace {

Stencil scaled_stencil(const Matrix& unit_basis, double a, double radius) {
  const int d = static_cast<int>(unit_basis.rows());
  const Matrix basis = a * unit_basis;
  const Matrix inv = basis.inverse();
  IntVector hi(d);
  for (int i = 0; i < d; ++i) hi(i) = static_cast<std::int64_t>(std::ceil(radius * inv.row(i).norm())) + 1;
  Stencil s;
  s.dim = d;
  IntVector n = -hi;
  while (true) {
    const Vector x = basis * n.cast<double>();
    if (!n.isZero() && x.norm() < radius) {
      s.offsets.insert(s.offsets.end(), x.data(), x.data() + d);
      ++s.count;
    }
    int axis = d - 1;
    while (axis >= 0 && n(axis) == hi(axis)) {
      n(axis) = -hi(axis);
      --axis;
    }
    if (axis < 0) break;
    ++n(axis);
  }
  return s;
}

double radius_of(const SitePotential& pot) {
  const double r = pot.cutoff();
  if (!(r > 0.0)) {
    throw ConfigError("potential '" + pot.name() + "' has no length scale; lattice parameter is undefined");
  }
  return r;
}

}  // namespace

double homogeneous_site_energy(const SitePotential& pot, const Matrix& unit_basis, double a) {
  const Stencil s = scaled_stencil(unit_basis, a, radius_of(pot));
  if (s.count == 0) return pot.energy(StencilView(s), s.dim, {});
  const std::vector<double> g(s.offsets.size(), 0.0);
  return pot.energy(StencilView(s), s.dim, g);
}

double homogeneous_site_energy_derivative(const SitePotential& pot, const Matrix& unit_basis, double a) {
  const Stencil s = scaled_stencil(unit_basis, a, radius_of(pot));
  if (s.count == 0) return 0.0;
  const std::vector<double> g(s.offsets.size(), 0.0);
  std::vector<double> gr(g.size());
  pot.energy_gradient(StencilView(s), s.dim, g, gr);
  // W(a + t) = Ṽ(g_ρ = t·ρ/a) on the stencil at a.
  double w = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) w += gr[i] * s.offsets[i];
  return w / a;
}

LatticeParameter find_lattice_parameter(const SitePotential& pot, const Matrix& unit_basis, double scan_lo,
                                        double scan_hi, int scan_points) {
  if (!(scan_lo > 0.0 && scan_hi > scan_lo) || scan_points < 3) {
    throw ConfigError("lattice-parameter scan window must satisfy 0 < lo < hi with at least 3 points");
  }
  std::vector<double> a(static_cast<std::size_t>(scan_points)), w(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = scan_lo + (scan_hi - scan_lo) * static_cast<double>(i) / static_cast<double>(scan_points - 1);
    w[i] = homogeneous_site_energy(pot, unit_basis, a[i]);
  }
  std::size_t best = 0;
  double best_w = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < a.size(); ++i) {
    if (w[i] < w[i - 1] && w[i] <= w[i + 1] && w[i] < best_w) {
      best = i;
      best_w = w[i];
    }
  }
  if (best == 0) {
    throw NumericalError("no energy minimum bracketed in the scan window [" + std::to_string(scan_lo) + ", " +
                         std::to_string(scan_hi) + "]");
  }

  double lo = a[best - 1], hi = a[best + 1];
  double dlo = homogeneous_site_energy_derivative(pot, unit_basis, lo);
  double dhi = homogeneous_site_energy_derivative(pot, unit_basis, hi);
  if (!(dlo < 0.0 && dhi > 0.0)) throw NumericalError("virial does not change sign across the bracket");
  // Safeguarded secant (Illinois) on the virial, falling back to bisection.
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    double x = lo - dlo * (hi - lo) / (dhi - dlo);
    if (!(x > lo && x < hi) || it % 3 == 2) x = 0.5 * (lo + hi);
    const double dx = homogeneous_site_energy_derivative(pot, unit_basis, x);
    if (dx == 0.0) {
      lo = hi = x;
      break;
    }
    if (dx < 0.0) {
      lo = x;
      dlo = dx;
    } else {
      hi = x;
      dhi = dx;
    }
  }
  LatticeParameter out;
  out.a0 = 0.5 * (lo + hi);
  out.energy_per_site = homogeneous_site_energy(pot, unit_basis, out.a0);
  return out;
}

}  // namespace ldlab
