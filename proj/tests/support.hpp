#pragma once

// Shared builders and independent oracles for the unit tests.

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ldlab/lattice.hpp"
#include "ldlab/model.hpp"
#include "ldlab/potential.hpp"

namespace ldlab::test {

inline Matrix triangular_basis() {
  Matrix a(2, 2);
  a << 1.0, 0.5, 0.0, std::sqrt(3.0) / 2.0;
  return a;
}

inline Matrix fcc_basis() {
  Matrix a(3, 3);
  a << 0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0;
  return a;
}

inline IntMatrix fcc_multiplier() {
  IntMatrix m(3, 3);
  m << -1, 1, 1, 1, -1, 1, 1, 1, -1;
  return m;
}

inline IntMatrix identity(int d) { return IntMatrix::Identity(d, d); }

inline std::shared_ptr<PairPotential> morse4() { return make_morse(4.0, 1.5, 2.3); }

inline std::shared_ptr<EamPotential> test_eam() {
  auto pair = std::make_shared<MorseFunction>(4.0, CutoffSpline(1.5, 2.3), 1.0, 0.5);
  auto rho = std::make_shared<ExponentialFunction>(3.0, CutoffSpline(1.5, 2.3), 1.0);
  return std::make_shared<EamPotential>(pair, rho, 1.0);
}

/// Triangular lattice at the equilibrium spacing of `pot`.
inline std::shared_ptr<const LatticeModel> triangular_model(const SitePotential& pot, bool vacancy = false) {
  const auto lp = find_lattice_parameter(pot, triangular_basis());
  auto hom = LatticeModel::homogeneous(lp.a0 * triangular_basis(), 2, pot.cutoff());
  if (!vacancy) return std::make_shared<const LatticeModel>(hom);
  return std::make_shared<const LatticeModel>(hom.with_defect({Vector::Zero(2)}, {}, 0.5 * lp.a0));
}

inline Vector random_vector(Eigen::Index n, unsigned seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * uni(rng);
  return v;
}

/// Naive periodic pair sum: ½ Σ_i Σ_{j, images} [φ(|y_j + T − y_i|) − φ(|x_j + T − x_i|)],
/// pairs taken over all periodic images inside the radial cut-off.
inline double naive_pair_energy(const Supercell& cell, const RadialFunction& phi, const Vector& u) {
  const int d = cell.dim();
  const std::size_t n = cell.size();
  const Matrix period = 2.0 * cell.half_period() * cell.cell();
  std::vector<Vector> shifts;
  const int reach = 2;
  std::vector<int> z(static_cast<std::size_t>(d), -reach);
  for (;;) {
    Vector t = Vector::Zero(d);
    for (int a = 0; a < d; ++a) t += period.col(a) * z[static_cast<std::size_t>(a)];
    shifts.push_back(t);
    int a = 0;
    while (a < d && ++z[static_cast<std::size_t>(a)] > reach) z[static_cast<std::size_t>(a++)] = -reach;
    if (a == d) break;
  }
  // bond-wise differences, so the two large totals never cancel
  long double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector yi = cell.position(i) + u.segment(static_cast<Eigen::Index>(i) * d, d);
    for (std::size_t j = 0; j < n; ++j) {
      const Vector yj = cell.position(j) + u.segment(static_cast<Eigen::Index>(j) * d, d);
      for (const auto& t : shifts) {
        if (i == j && t.norm() == 0.0) continue;
        // bonds are fixed by the reference geometry
        const double r0 = (cell.position(j) + t - cell.position(i)).norm();
        if (r0 >= phi.cutoff()) continue;
        e += 0.5L * (static_cast<long double>(phi((yj + t - yi).norm()).f) - phi(r0).f);
      }
    }
  }
  return static_cast<double>(e);
}

/// Central-difference gradient of the assembled energy.
inline Vector fd_gradient(const Assembly& asm_, const Vector& u, double h) {
  Vector g(u.size());
  Vector w = u;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    w(i) = u(i) + h;
    const double ep = asm_.energy(w);
    w(i) = u(i) - h;
    const double em = asm_.energy(w);
    w(i) = u(i);
    g(i) = (ep - em) / (2.0 * h);
  }
  return g;
}

inline double rel_error(const Vector& a, const Vector& b) {
  const double s = std::max(a.norm(), b.norm());
  return s > 0.0 ? (a - b).norm() / s : 0.0;
}

/// Dense matrix of a linear map given by its action.
template <class Apply>
Matrix dense_operator(Eigen::Index n, Apply&& apply) {
  Matrix m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector e = Vector::Zero(n);
    e(j) = 1.0;
    m.col(j) = apply(e);
  }
  return m;
}

/// Projector onto per-component zero-mean fields (site-major, range_dim m).
inline Matrix zero_mean_projector(std::size_t sites, int m) {
  const auto n = static_cast<Eigen::Index>(sites) * m;
  Matrix p = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i % m == j % m) p(i, j) -= 1.0 / static_cast<double>(sites);
    }
  }
  return p;
}

}  // namespace ldlab::test
