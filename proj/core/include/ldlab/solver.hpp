#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ldlab/fourier.hpp"
#include "ldlab/model.hpp"

namespace ldlab {

/// Spectral inverse of μ·L + ε·I on the periodic cell, L = DᵀD the scalar
/// lattice Laplacian of the homogeneous stencil, applied per component.
/// The zero Fourier mode is dropped, so constants map to zero; removed sites
/// take no input, added sites get the diagonal 1/(μ·2|R_ℓ| + ε). Input and
/// output are projected to zero mean, which makes the map symmetric PSD.
class Preconditioner {
 public:
  Preconditioner(std::shared_ptr<const Supercell> cell, double mu, double shift_ratio = 1e-4);

  /// Mean bond stiffness of the homogeneous Hessian (default μ).
  static double default_mu(const SitePotential& pot, const LatticeModel& model);

  Vector apply(const Vector& r) const;
  double mu() const { return mu_; }
  double shift() const { return eps_; }
  /// 1/(μ·l̂(k) + ε) for a lattice wavevector k ≠ 0.
  double multiplier(const Vector& k) const;
  const FourierGrid& grid() const { return *grid_; }

 private:
  std::shared_ptr<const Supercell> cell_;
  std::unique_ptr<FourierGrid> grid_;
  double mu_;
  double eps_;
  std::vector<double> inv_symbol_;
  std::vector<std::size_t> slots_;  // per lattice site
  std::vector<double> added_diag_;
};

struct SolverOptions {
  double tol_grad_inf = 1e-10;
  int max_iter = 20000;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int restart = 100;
  bool precondition = true;
  double mu = 0.0;           ///< 0 picks Preconditioner::default_mu
  double shift_ratio = 1e-4;
  double max_step = 0.25;    ///< cap on max |Δu| per line-search trial; ≤ 0 disables
  bool newton_refine = false;
  double newton_tol = 1e-12;
  double newton_switch = 1e-6;  ///< hand over from CG below this gradient sup-norm
  int newton_max_iter = 12;
  int linear_max_iter = 2000;
};

struct IterationRecord {
  int iter = 0;
  double energy = 0.0;
  double grad_inf = 0.0;
  double step = 0.0;
};

struct RelaxResult {
  Displacement u;
  int iterations = 0;
  int newton_iterations = 0;
  int evaluations = 0;  ///< energy-gradient calls made by the line search
  int linear_iterations = 0;
  double grad_inf = 0.0;
  double energy = 0.0;
  bool converged = false;
  std::string message;
  std::vector<IterationRecord> history;
};

/// Preconditioned Polak–Ribière+ nonlinear CG with backtracking Armijo line
/// search, optionally followed by matrix-free Newton–PCG refinement.
/// A singular (collapsed) configuration raises SingularityError only when the
/// line search cannot step around it.
RelaxResult relax(const Assembly& asm_, const Displacement& u0, const SolverOptions& opts,
                  const Preconditioner* precon = nullptr);

/// Preconditioned CG for H x = b on the zero-mean space. Returns iterations;
/// throws NumericalError on negative curvature.
int solve_linear(const Assembly& asm_, const Vector& u, const Vector& b, Vector& x, const Preconditioner* precon,
                 double rel_tol, int max_iter, double* residual = nullptr);

/// Copies u from a smaller cell of the same model onto target (by lattice key),
/// shifted so its outermost shell has zero mean, zero elsewhere, then re-centred.
Displacement prolong(const Displacement& u, const Supercell& from, const Supercell& to);

double sup_norm(const Vector& field, int range_dim);

}  // namespace ldlab
