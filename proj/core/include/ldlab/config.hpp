#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ldlab/lattice.hpp"
#include "ldlab/model.hpp"
#include "ldlab/potential.hpp"
#include "ldlab/solver.hpp"
#include "ldlab/study.hpp"

namespace ldlab {

inline constexpr int kSchemaVersion = 1;

/// Unit basis (columns, lattice constant 1) and default cell multiplier of a named lattice.
struct LatticePreset {
  std::string name;
  Matrix unit_basis;
  IntMatrix multiplier;
};
/// square, triangular, cubic, fcc, bcc. fcc/bcc use the cubic cell B = a·I.
LatticePreset lattice_preset(const std::string& name);

struct RelaxSpec {
  int half_period = 0;
  bool stability = true;
  bool write_xyz = true;
};

struct GreensSpec {
  std::vector<int> half_periods{8, 16, 32, 64};
  std::vector<int> orders{1, 2};
  int big = 256;
  int decay_half_period = 0;  ///< 0 selects big
  std::vector<double> decay_radii;
  double decay_ratio = 2.0;
};

struct ChecksSpec {
  bool decay = true;
  double decay_ratio = 1.4142135623730951;
  bool caccioppoli = true;
  // light homogeneous model for the Poincaré / truncation sampling
  double sample_cutoff = 0.0;  ///< 0 keeps the lattice cut-off
  int poincare_half_period = 0;
  std::vector<std::pair<double, double>> poincare_annuli;
  int poincare_samples = 100;
  int truncation_half_period = 0;
  std::vector<double> truncation_radii;
  int truncation_samples = 20;
  unsigned seed = 1;
};

/// Fully resolved run configuration.
struct Config {
  int schema_version = kSchemaVersion;
  std::string canonical;  ///< compact, key-sorted dump of the input (hashed into provenance)

  std::string lattice_name;
  Matrix unit_basis;
  IntMatrix multiplier;
  double lattice_constant = 1.0;
  bool lattice_constant_from_potential = false;
  double energy_per_site = 0.0;
  std::string symbol = "X";

  std::shared_ptr<const LatticeModel> homogeneous;
  std::shared_ptr<const LatticeModel> model;
  std::shared_ptr<const SitePotential> potential;
  /// Starting displacement of each added site (empty: start from zero).
  std::vector<Vector> initial_added;

  SolverOptions solver;
  SpectrumOptions spectrum;
  int phonon_grid = 64;

  std::optional<RelaxSpec> relax;
  std::optional<StudyConfig> study;
  std::optional<GreensSpec> greens;
  std::optional<ChecksSpec> checks;
};

/// Strict parse: unknown keys, wrong types and a missing or unsupported
/// schema_version raise ConfigError; malformed JSON reports line and column.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

}  // namespace ldlab
