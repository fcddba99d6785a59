#pragma once

#include <memory>
#include <vector>

#include "ldlab/fit.hpp"
#include "ldlab/lattice.hpp"
#include "ldlab/potential.hpp"

namespace ldlab {

/// Periodic lattice Green's function G_N: one m×m matrix per site of the
/// homogeneous cell, solving δ²E^hom_N(0)·G_N e_i = δ_0 e_i − |Λ_N|^{-1} e_i
/// with Σ_ℓ G_N(ℓ) = 0.
struct GreensTable {
  std::shared_ptr<const Supercell> cell;
  int range_dim = 0;
  std::vector<double> values;  ///< site-major, row-major m×m blocks

  Matrix at(std::size_t site) const;
  /// Column i of G_N as a displacement field.
  Vector column(int i) const;
};

GreensTable periodic_greens(const SitePotential& pot, std::shared_ptr<const LatticeModel> model,
                            const IntMatrix& multiplier, int half_period);

/// Sup norm of H·G_N e_i − (δ_0 − 1/n) e_i over all i.
double greens_residual(const GreensTable& table, const SitePotential& pot);

/// D_{ρ_1}…D_{ρ_j} G_N for the given homogeneous stencil offsets (integer
/// lattice coordinates). Same layout as GreensTable::values.
std::vector<double> greens_differences(const GreensTable& table, const std::vector<IntVector>& offsets);

/// All nondecreasing j-tuples of homogeneous stencil indices.
std::vector<std::vector<IntVector>> difference_tuples(const LatticeModel& model, int j);

/// max over tuples of ‖(D^h)^j G_N(ℓ)‖_F per site.
std::vector<double> difference_magnitudes(const GreensTable& table, int j);

struct GreensStudy {
  std::vector<int> half_periods;
  std::vector<int> orders;
  int big = 0;
  std::vector<std::vector<double>> errors;  ///< errors[jdx][ndx]
  std::vector<FitResult> fits;              ///< one per order
};

/// max_{ℓ ∈ Λ_N} |(D^h)^j G_big(ℓ) − (D^h)^j G_N(ℓ)| against a large cell standing in for G.
GreensStudy greens_convergence_study(const SitePotential& pot, std::shared_ptr<const LatticeModel> model,
                                     const IntMatrix& multiplier, const std::vector<int>& half_periods,
                                     const std::vector<int>& orders, int big);

struct DecayProfile {
  std::vector<double> radii;
  std::vector<double> values;
  FitResult fit;
};

/// Max of per-site magnitudes over Euclidean annuli r ≤ |x| < ratio·r, and the
/// log–log slope over annuli whose maximum exceeds floor.
DecayProfile decay_profile(const Supercell& cell, const std::vector<double>& magnitudes,
                           const std::vector<double>& radii, double floor = 0.0, double ratio = 2.0);

}  // namespace ldlab
