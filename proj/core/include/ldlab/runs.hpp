#pragma once

#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "ldlab/config.hpp"
#include "ldlab/greens.hpp"
#include "ldlab/study.hpp"

namespace ldlab {

// Drivers behind the CLI subcommands. Each takes a resolved Config.

struct A0Run {
  std::string lattice;
  double a0 = 0.0;
  double energy_per_site = 0.0;
  bool from_potential = false;
};
A0Run run_a0(const Config& cfg);

struct RelaxRun {
  PhononCheck phonon;
  std::shared_ptr<const Supercell> cell;
  RelaxResult result;
  std::optional<StabilityReport> stability;
};
/// Phonon gate, then relaxation on Λ_N (relax.half_period) and its spectrum.
RelaxRun run_relax(const Config& cfg);

struct StabilityRun {
  PhononCheck phonon;
  std::optional<RelaxRun> relaxed;  ///< present when the config has a relax section
};
StabilityRun run_stability(const Config& cfg);

struct GreensRun {
  GreensStudy study;
  int decay_half_period = 0;
  std::optional<DecayProfile> decay;  ///< second differences
  std::string decay_notice;
  double residual = 0.0;        ///< defining-equation residual, sup norm
  double symmetry = 0.0;        ///< max ‖G_N(ℓ) − G_N(−ℓ)‖
  double mean = 0.0;            ///< max entry of Σ_ℓ G_N(ℓ)
  double third_sum = 0.0;       ///< max over tuples of |Σ_ℓ (D^h)³ G_N(ℓ)|
  GreensTable table;            ///< the table at decay_half_period
};
GreensRun run_greens(const Config& cfg);

/// Invariants of one table (used by run_greens and the tests).
double greens_symmetry_defect(const GreensTable& table);
double greens_mean_defect(const GreensTable& table);
double greens_third_sum(const GreensTable& table);

struct ChecksRun {
  std::optional<DecayCheck> decay;
  std::vector<std::pair<int, CaccioppoliCheck>> caccioppoli;
  std::vector<std::tuple<double, double, PoincareCheck>> poincare;
  std::vector<std::pair<double, TruncationCheck>> truncation;
  std::vector<std::string> notices;
};
/// Needs the study result when decay or Caccioppoli checks are enabled.
ChecksRun run_checks(const Config& cfg, const StudyResult* study);

}  // namespace ldlab
