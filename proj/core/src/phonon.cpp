#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "ldlab/error.hpp"
#include "ldlab/model.hpp"

namespace ldlab {

HomogeneousHessian HomogeneousHessian::build(const SitePotential& pot, const LatticeModel& model) {
  HomogeneousHessian out;
  out.dim = model.dim();
  out.range_dim = model.range_dim();
  out.offsets = model.stencil();
  const int m = out.range_dim;
  const auto count = static_cast<int>(out.offsets.size());
  Stencil st;
  st.dim = out.dim;
  st.count = count;
  for (const auto& r : out.offsets) st.offsets.insert(st.offsets.end(), r.data(), r.data() + out.dim);
  const std::vector<double> zero(static_cast<std::size_t>(count) * static_cast<std::size_t>(m), 0.0);
  const Matrix h = hess(pot, StencilView(st), m, zero);
  for (int a = 0; a < count; ++a) {
    for (int b = 0; b < count; ++b) {
      if (pot.block_diagonal() && a != b) continue;
      Matrix blk = h.block(a * m, b * m, m, m);
      if (blk.cwiseAbs().maxCoeff() == 0.0) continue;
      out.blocks.push_back({a, b, std::move(blk)});
    }
  }
  return out;
}

ComplexMatrix HomogeneousHessian::symbol(const Vector& k) const {
  using C = std::complex<double>;
  std::vector<C> a(offsets.size());
  for (std::size_t r = 0; r < offsets.size(); ++r) a[r] = std::exp(C(0.0, k.dot(offsets[r]))) - 1.0;
  ComplexMatrix s = ComplexMatrix::Zero(range_dim, range_dim);
  for (const auto& b : blocks) {
    const C w = a[static_cast<std::size_t>(b.rho)] * std::conj(a[static_cast<std::size_t>(b.sigma)]);
    s += w * b.h.cast<C>();
  }
  return s;
}

double HomogeneousHessian::laplacian_symbol(const Vector& k) const {
  double s = 0.0;
  for (const auto& r : offsets) s += 2.0 * (1.0 - std::cos(k.dot(r)));
  return s;
}

double HomogeneousHessian::mean_stiffness() const {
  // BZ averages: ⟨(e^{ikρ}−1)(e^{−ikσ}−1)⟩ = 1 + δ_ρσ and ⟨ĥ⟩ = 2|R|.
  double diag = 0.0, all = 0.0, absdiag = 0.0;
  for (const auto& b : blocks) {
    const double t = b.h.trace();
    all += t;
    if (b.rho == b.sigma) {
      diag += t;
      absdiag += std::abs(t);
    }
  }
  const double denom = 2.0 * range_dim * static_cast<double>(offsets.size());
  const double mu = (diag + all) / denom;
  if (mu > 0.0) return mu;
  return absdiag > 0.0 ? absdiag / denom : 1.0;
}

PhononCheck phonon_check(const SitePotential& pot, const LatticeModel& model, int k_grid) {
  if (model.has_defect()) throw ConfigError("phonon check needs a homogeneous model");
  if (k_grid < 2) throw ConfigError("k-grid density must be at least 2");
  const auto hh = HomogeneousHessian::build(pot, model);
  const int d = model.dim();
  const Matrix recip = 2.0 * std::numbers::pi * model.basis_inverse().transpose() / static_cast<double>(k_grid);

  PhononCheck out;
  out.grid = k_grid;
  out.c0_estimate = std::numeric_limits<double>::infinity();
  out.min_eigenvalue = std::numeric_limits<double>::infinity();
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(k_grid);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es;
  Vector j(d);
  for (std::size_t idx = 1; idx < total; ++idx) {
    std::size_t r = idx;
    for (int i = d - 1; i >= 0; --i) {
      j(i) = static_cast<double>(r % static_cast<std::size_t>(k_grid));
      r /= static_cast<std::size_t>(k_grid);
    }
    const Vector k = recip * j;
    es.compute(hh.symbol(k), Eigen::EigenvaluesOnly);
    const double lam = es.eigenvalues()(0);
    const double ratio = lam / hh.laplacian_symbol(k);
    out.min_eigenvalue = std::min(out.min_eigenvalue, lam);
    if (ratio < out.c0_estimate) {
      out.c0_estimate = ratio;
      out.worst_k = k;
    }
    ++out.points;
  }
  out.stable = out.c0_estimate > 0.0;
  return out;
}

}  // namespace ldlab
