#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ldlab/fit.hpp"
#include "ldlab/greens.hpp"
#include "ldlab/model.hpp"
#include "ldlab/solver.hpp"

namespace ldlab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct PlantedError {
  bool enabled = false;
  double amplitude = 1.0;
  double exponent = 2.0;
};

struct StudyConfig {
  std::shared_ptr<const LatticeModel> model;
  IntMatrix multiplier;
  std::shared_ptr<const SitePotential> potential;
  std::vector<int> half_periods;
  int reference = 0;  ///< 0 selects ⌈2.5·N_max⌉
  std::vector<double> norms{2.0, 4.0, kInfinity};
  int exclude_smallest = 2;
  SolverOptions solver;
  SolverOptions reference_solver;
  bool continuation = false;
  bool stability = true;
  SpectrumOptions spectrum;
  int phonon_grid = 64;
  PlantedError planted;
  std::vector<Vector> initial_added;  ///< start offsets of the added sites

  StudyConfig();
  int reference_half_period() const;
};

struct StudyRow {
  int half_period = 0;
  std::size_t sites = 0;
  bool converged = false;
  int iterations = 0;
  int newton_iterations = 0;
  double grad_inf = 0.0;
  double energy = 0.0;
  std::string message;
  std::vector<double> errors;  ///< one per StudyConfig::norms
  double error_inf_half = 0.0; ///< ℓ∞ error over Λ_{N/2}
  std::optional<StabilityReport> stability;
};

struct StudyResult {
  std::vector<double> norms;
  std::vector<StudyRow> rows;
  std::vector<std::optional<FitResult>> fits;  ///< one per norm
  std::vector<std::string> notices;
  std::optional<PhononCheck> phonon;
  int reference_half_period = 0;
  RelaxResult reference;
  std::shared_ptr<const Supercell> reference_cell;
  std::vector<std::shared_ptr<const Supercell>> cells;
  std::vector<Displacement> solutions;
};

StudyResult run_convergence(const StudyConfig& cfg);

/// Zero field except the added sites, which start at the given offsets.
/// Breaks symmetric starting configurations that relax onto saddles.
Displacement initial_guess(const Supercell& cell, const std::vector<Vector>& added_offsets);

/// |Dū_N(ℓ) − Dū_ref(ℓ)| for every ℓ ∈ Λ_N, bonds matched by reference offset.
std::vector<double> strain_error(const Supercell& cell, const Vector& u, const Supercell& ref, const Vector& u_ref);

/// Planted field w with max_ℓ |Dw(ℓ)| = 1 (smooth, periodic on the cell).
Displacement planted_field(const Supercell& cell);

/// |D_ρ D_σ u(ℓ)| over homogeneous stencil pairs at lattice sites whose
/// neighbours all exist; zero elsewhere.
std::vector<double> second_difference_magnitudes(const Supercell& cell, const Vector& u);

struct DecayCheck {
  bool skipped = false;
  std::string notice;
  std::optional<DecayProfile> first;   ///< j = 1
  std::optional<DecayProfile> second;  ///< j = 2
};

/// Decay of |Dū| and |D²ū| on annuli [r, ratio·r) with radii in Cartesian units.
/// Empty radii picks a geometric sequence from 2(R_def + r_cut) to half the cell width.
DecayCheck decay_check(const Supercell& cell, const Vector& u, std::vector<double> radii = {},
                       double ratio = 1.4142135623730951);

struct CaccioppoliEntry {
  double r = 0.0;
  double inner = 0.0;
  double outer = 0.0;
  std::optional<double> ratio;  ///< empty when the annulus norm vanishes
};

struct CaccioppoliCheck {
  std::vector<CaccioppoliEntry> entries;
  std::optional<double> max_ratio;
};

/// ‖De‖_{ℓ²(Λ_{r/2})} / ‖De‖_{ℓ²(Λ_{2r} \ Λ_{r/2})} for r in r_list (default 2..⌊N/4⌋).
CaccioppoliCheck caccioppoli_check(const Supercell& cell, const std::vector<double>& error_magnitudes,
                                   std::vector<double> r_list = {});

/// ‖u − ⟨u⟩_A‖_{ℓ^p(A)} / (R2·‖Du‖_{ℓ^p(A')}), A = Λ_{R2} \ Λ_{R1}, A' the R_P-fattened annulus.
double poincare_ratio(const Supercell& cell, const Displacement& u, double r1, double r2, double p = 2.0);

/// Smooth random field with features on the scale of `scale` cell units.
Displacement smooth_random_field(const Supercell& cell, double scale, unsigned seed, int modes = 6);

struct PoincareCheck {
  double max_ratio = 0.0;
  double max_ratio_inf = 0.0;
  int samples = 0;
};
PoincareCheck poincare_check(const Supercell& cell, double r1, double r2, int samples, unsigned seed);

struct TruncationCheck {
  double max_global = 0.0;  ///< ‖D T_R u‖ / ‖Du‖_{ℓ²(Λ_R)}
  double max_err1 = 0.0;    ///< ‖D T_R u − Du‖_{ℓ²(Λ_R)} / ‖Du‖_{ℓ²(Λ_R \ Λ_{R/2})}
  int samples = 0;
};
TruncationCheck truncation_check(const Supercell& cell, double radius, int samples, unsigned seed);

}  // namespace ldlab
