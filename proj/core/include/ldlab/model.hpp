#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "ldlab/lattice.hpp"
#include "ldlab/potential.hpp"

namespace ldlab {

using SparseMatrix = Eigen::SparseMatrix<double>;
using ComplexMatrix = Eigen::MatrixXcd;

/// E_N(u) = Σ_ℓ V_ℓ(Du(ℓ)) on a supercell with one site potential for
/// every site (the defect enters through the per-site stencils).
class Assembly {
 public:
  static constexpr std::size_t kDefaultMatrixBudget = 2'000'000;

  Assembly(std::shared_ptr<const Supercell> cell, std::shared_ptr<const SitePotential> pot);

  const Supercell& cell() const { return *cell_; }
  std::shared_ptr<const Supercell> cell_ptr() const { return cell_; }
  const SitePotential& potential() const { return *pot_; }
  std::shared_ptr<const SitePotential> potential_ptr() const { return pot_; }
  std::size_t dofs() const { return cell_->dofs(); }

  double energy(const Vector& u) const;
  Vector gradient(const Vector& u) const;
  /// Energy and gradient in one pass.
  double energy_gradient(const Vector& u, Vector& grad) const;
  Vector hessian_apply(const Vector& u, const Vector& v) const;
  /// Sparse Hessian; throws ConfigError if dofs exceed the budget.
  SparseMatrix hessian_matrix(const Vector& u, std::size_t budget = kDefaultMatrixBudget) const;
  /// Per-site renormalised energies V_ℓ(Du(ℓ)).
  std::vector<double> site_energies(const Vector& u) const;

  /// Ṽ_ℓ(0) of stencil id s (subtracted by the renormalisation).
  double reference_energy(int stencil_id) const { return reference_[static_cast<std::size_t>(stencil_id)]; }

 private:
  void check_size(const Vector& u) const;

  std::shared_ptr<const Supercell> cell_;
  std::shared_ptr<const SitePotential> pot_;
  std::vector<double> reference_;
};

/// Per-site strain tuple gather g = D_ℓ u into out (count × m).
void gather_strain(const Supercell& cell, std::size_t site, const double* u, double* out);

/// Nonzero blocks ∇²V(0)[ρ, σ] of the homogeneous site potential.
struct HomogeneousHessian {
  int dim = 0;
  int range_dim = 0;
  std::vector<Vector> offsets;  ///< homogeneous stencil
  struct Block {
    int rho = 0;
    int sigma = 0;
    Matrix h;
  };
  std::vector<Block> blocks;

  static HomogeneousHessian build(const SitePotential& pot, const LatticeModel& model);
  /// Ĥ(k) = Σ ∇²V(0)[ρ,σ] (e^{ik·ρ} − 1)(e^{−ik·σ} − 1).
  ComplexMatrix symbol(const Vector& k) const;
  /// Fourier multiplier of the assembled operator: (H v)^(k) = operator_symbol(k)·v̂(k),
  /// which equals symbol(−k).
  ComplexMatrix operator_symbol(const Vector& k) const { return symbol(-k); }
  /// ĥ(k) = Σ_ρ |e^{ik·ρ} − 1|².
  double laplacian_symbol(const Vector& k) const;
  /// Mean bond stiffness: BZ-average trace of the symbol divided by m·avg ĥ.
  double mean_stiffness() const;
};

struct PhononCheck {
  bool stable = false;
  double c0_estimate = 0.0;
  double min_eigenvalue = 0.0;  ///< min over the grid of λ_min(Ĥ(k))
  Vector worst_k;               ///< wavevector attaining c0_estimate
  int grid = 0;
  std::size_t points = 0;
};

/// Scans the uniform grid k = 2π A^{-T} j / K, j ∈ {0..K−1}^d \ {0}.
PhononCheck phonon_check(const SitePotential& pot, const LatticeModel& model, int k_grid = 64);

struct StabilityReport {
  /// Lowest eigenvalues of H v = λ B v on the zero-mean space, ascending,
  /// with B the preconditioner metric (spectrally equivalent to ‖Dv‖²).
  std::vector<double> eigenvalues;
  std::vector<double> residuals;
  int index = 0;           ///< number of negative eigenvalues found
  double inf_sup = 0.0;    ///< smallest |λ|
  int iterations = 0;
  bool converged = false;
  std::string message;
};

struct SpectrumOptions {
  int n_eigs = 4;
  int max_steps = 1000;
  double tol = 1e-8;  ///< relative residual of the reported Ritz pairs
  unsigned seed = 12345;
};

class Preconditioner;

/// Extreme low end of the preconditioned Hessian spectrum at u via Lanczos in
/// the B-inner product with full reorthogonalisation.
StabilityReport stability_spectrum(const Assembly& asm_, const Vector& u, const Preconditioner& metric,
                                   const SpectrumOptions& opts = {});

}  // namespace ldlab
