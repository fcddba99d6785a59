#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ldlab/types.hpp"

namespace ldlab {

/// Reference configuration of a point defect in a Bravais host crystal.
///
/// Outside the defect ball B_{R_def} the site set is exactly A·Z^d. Inside,
/// lattice sites may be removed and off-lattice sites added. The homogeneous
/// stencil R = (A·Z^d ∩ B_{r_cut}) \ {0} is ordered lexicographically by
/// integer coordinates.
class LatticeModel {
 public:
  /// Defect-free model. Throws ConfigError if A is singular or the stencil
  /// does not span R^d / generate the lattice.
  static LatticeModel homogeneous(const Matrix& basis, int range_dim, double cutoff);

  /// Returns a copy with the given Cartesian edits inside B_{defect_radius}.
  /// Removed positions must be lattice sites; added positions must not
  /// coincide with retained sites.
  LatticeModel with_defect(const std::vector<Vector>& removed, const std::vector<Vector>& added,
                           double defect_radius) const;

  int dim() const { return static_cast<int>(basis_.rows()); }
  int range_dim() const { return range_dim_; }
  const Matrix& basis() const { return basis_; }
  const Matrix& basis_inverse() const { return basis_inv_; }
  double cutoff() const { return cutoff_; }
  double defect_radius() const { return defect_radius_; }
  bool has_defect() const { return !removed_.empty() || !added_.empty(); }

  const std::vector<IntVector>& removed() const { return removed_; }
  const std::vector<Vector>& added() const { return added_; }

  const std::vector<IntVector>& stencil_coords() const { return stencil_coords_; }
  const std::vector<Vector>& stencil() const { return stencil_; }
  /// Index of −ρ in the homogeneous stencil.
  const std::vector<int>& stencil_opposite() const { return stencil_opposite_; }

  Vector position(const IntVector& n) const { return basis_ * n.cast<double>(); }
  std::optional<IntVector> lattice_coords(const Vector& x, double tol = 1e-8) const;
  bool is_removed(const IntVector& n) const;

  /// Interaction range R_ℓ of the infinite configuration at reference position x
  /// (x must be a site of the model).
  std::vector<Vector> site_stencil(const Vector& x) const;

 private:
  LatticeModel() = default;
  void verify_defect_region() const;

  Matrix basis_;
  Matrix basis_inv_;
  int range_dim_ = 0;
  double cutoff_ = 0.0;
  double defect_radius_ = 0.0;
  std::vector<IntVector> removed_;
  std::vector<Vector> added_;
  std::vector<IntVector> stencil_coords_;
  std::vector<Vector> stencil_;
  std::vector<int> stencil_opposite_;
};

/// Offsets of one site's interaction range, flattened as count × d.
struct Stencil {
  int dim = 0;
  int count = 0;
  std::vector<double> offsets;

  std::span<const double> offset(int k) const {
    return {offsets.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
};

/// Periodic computational cell Λ_N = Λ ∩ B(−N, N]^d with period 2N·B.
///
/// Lattice sites are ordered lexicographically by integer coordinates,
/// added defect sites follow. Each site carries a minimum-image stencil;
/// sites whose stencil equals the homogeneous one share stencil id 0.
class Supercell {
 public:
  static constexpr std::uint32_t npos = std::numeric_limits<std::uint32_t>::max();

  /// B = A·multiplier; the multiplier must be an invertible integer matrix.
  static std::shared_ptr<const Supercell> build(std::shared_ptr<const LatticeModel> model,
                                                const IntMatrix& multiplier, int half_period);
  /// Cartesian cell matrix; its columns must lie in A·Z^d.
  static std::shared_ptr<const Supercell> build(std::shared_ptr<const LatticeModel> model,
                                                const Matrix& cell, int half_period);

  const LatticeModel& model() const { return *model_; }
  std::shared_ptr<const LatticeModel> model_ptr() const { return model_; }
  int dim() const { return model_->dim(); }
  int range_dim() const { return model_->range_dim(); }
  int half_period() const { return half_period_; }
  const Matrix& cell() const { return cell_; }
  const IntMatrix& multiplier() const { return multiplier_; }

  std::size_t size() const { return static_cast<std::size_t>(positions_.cols()); }
  std::size_t dofs() const { return size() * static_cast<std::size_t>(range_dim()); }
  /// (2N)^d·|det(A^{-1}B)|: number of sites of the defect-free cell.
  std::size_t homogeneous_size() const;

  const Matrix& positions() const { return positions_; }
  auto position(std::size_t i) const { return positions_.col(static_cast<Eigen::Index>(i)); }
  /// B^{-1}·x for site i.
  auto cell_coords(std::size_t i) const { return cell_coords_.col(static_cast<Eigen::Index>(i)); }

  bool is_added(std::size_t i) const { return i >= lattice_count_; }
  std::size_t lattice_count() const { return lattice_count_; }
  const SiteKey& key(std::size_t i) const { return keys_[i]; }
  IntVector coords(std::size_t i) const;

  /// Representative of n modulo the period lattice 2N·M·Z^d.
  IntVector reduce(const IntVector& n) const;
  /// Site index of lattice point n (any periodic image), npos if removed.
  std::uint32_t find(const IntVector& n) const;
  /// Site index of a representative key (no reduction), npos if absent.
  std::uint32_t find_key(const SiteKey& key) const;
  std::uint32_t added_site(std::size_t k) const { return static_cast<std::uint32_t>(lattice_count_ + k); }

  std::size_t bond_begin(std::size_t i) const { return bond_start_[i]; }
  std::size_t bond_end(std::size_t i) const { return bond_start_[i + 1]; }
  std::size_t num_bonds() const { return neighbors_.size(); }
  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {neighbors_.data() + bond_start_[i], bond_start_[i + 1] - bond_start_[i]};
  }
  int stencil_id(std::size_t i) const { return stencil_id_[i]; }
  const Stencil& stencil(int id) const { return stencils_[static_cast<std::size_t>(id)]; }
  const Stencil& site_stencil(std::size_t i) const { return stencil(stencil_id_[i]); }
  std::size_t num_stencils() const { return stencils_.size(); }

  /// Smallest distance between opposite faces of B·[0,1]^d.
  double min_cell_height() const;
  /// r_cut expressed in cell units (cut-off radius / min_cell_height).
  double cutoff_in_cells() const { return model_->cutoff() / min_cell_height(); }

 private:
  Supercell() = default;
  void enumerate_sites();
  void build_stencils();
  void check_self_interaction() const;

  std::shared_ptr<const LatticeModel> model_;
  Matrix cell_;
  IntMatrix multiplier_;
  IntMatrix adjugate_;
  std::int64_t det_ = 1;
  int half_period_ = 0;

  Matrix positions_;
  Matrix cell_coords_;
  std::vector<SiteKey> keys_;
  std::size_t lattice_count_ = 0;
  std::unordered_map<SiteKey, std::uint32_t, SiteKeyHash> index_;

  std::vector<std::size_t> bond_start_;
  std::vector<std::uint32_t> neighbors_;
  std::vector<int> stencil_id_;
  std::vector<Stencil> stencils_;
};

/// Periodic displacement field, site-major with range_dim entries per site.
struct Displacement {
  Vector values;
  bool zero_mean = false;

  static Displacement zeros(const Supercell& cell);
  /// Samples f at the reference positions. With check_periodic, every bond
  /// that crosses the cell boundary is checked for consistency with the
  /// periodic wrap; non-periodic fields (e.g. affine maps) are rejected.
  static Displacement sample(const Supercell& cell, const std::function<Vector(const Vector&)>& f,
                             bool check_periodic = true);
};

/// Subtracts the per-component mean of a site-major field.
void project_zero_mean(Vector& field, int range_dim);
/// Per-component mean of a site-major field.
Vector field_mean(const Vector& field, int range_dim);

/// Finite-difference strains (D_ρ u(ℓ))_{ρ ∈ R_ℓ} aligned with the bond list.
class StrainField {
 public:
  StrainField(std::shared_ptr<const Supercell> cell, std::vector<double> values)
      : cell_(std::move(cell)), values_(std::move(values)) {}

  const Supercell& cell() const { return *cell_; }
  std::shared_ptr<const Supercell> cell_ptr() const { return cell_; }
  std::span<const double> at(std::size_t site) const;
  const std::vector<double>& values() const { return values_; }
  /// |Du(ℓ)| = (Σ_ρ |D_ρ u(ℓ)|²)^{1/2} for every site.
  std::vector<double> magnitudes() const;

 private:
  std::shared_ptr<const Supercell> cell_;
  std::vector<double> values_;
};

StrainField strain(const Displacement& u, std::shared_ptr<const Supercell> cell);
/// Pointwise strain difference a − b on a common cell.
StrainField difference(const StrainField& a, const StrainField& b);

/// Lattice region Λ_{outer} \ Λ_{inner}, with Λ_R = Λ ∩ B(−⌈R⌉, ⌈R⌉]^d.
struct Region {
  double inner = 0.0;
  double outer = std::numeric_limits<double>::infinity();

  static Region full() { return {}; }
  static Region cube(double r) { return {0.0, r}; }
  static Region annulus(double r1, double r2) { return {r1, r2}; }
  bool contains_cell_coords(const Eigen::Ref<const Vector>& s) const;
};

/// ℓ^p norm (p ≥ 2, p = infinity allowed) of per-site magnitudes over a region.
double subset_norm(const Supercell& cell, std::span<const double> magnitudes, const Region& region,
                   double p);
double subset_norm(const StrainField& s, const Region& region, double p);
/// ℓ^p norm of |u(ℓ) − c| over the region, with c the region mean when subtract_mean is set.
double displacement_norm(const Supercell& cell, const Vector& u, const Region& region, double p,
                         bool subtract_mean);
std::size_t region_size(const Supercell& cell, const Region& region);

/// Module constants of the truncation and Poincaré machinery, in cell units.
struct TruncationConstants {
  double fattening = 0.0;     ///< R_P: stencil reach
  double min_radius = 0.0;    ///< r_P: keeps the defect core inside inner radii
  double truncation = 0.0;    ///< R_T = max(2 r_P, 6 R_P + 6 r_cut)
};
TruncationConstants truncation_constants(const Supercell& cell);

/// C² cut-off η_R: 1 on Q_{4R/6}, 0 outside Q_{5R/6}, quintic smoothstep between.
double cutoff_eta(const Eigen::Ref<const Vector>& cell_coords, double radius);

/// T^per_{N,R} u: η_R·(u − ⟨u⟩_{A_R}) on Λ_R and zero elsewhere.
Displacement truncate(const Displacement& u, const Supercell& cell, double radius);

}  // namespace ldlab
