#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "ldlab/runs.hpp"

namespace ldlab {

std::string version();

/// 17 significant digits, '.' decimal, scientific ("inf"/"nan" for non-finite).
std::string format_double(double x);

std::uint64_t fnv1a(std::string_view bytes);
std::string fnv1a_hex(std::string_view bytes);

struct Provenance {
  std::string config_hash;  ///< FNV-1a of the canonical config
  std::string version;
  std::string timestamp;    ///< UTC, ISO 8601
  int threads = 1;
  bool deterministic = false;
};
Provenance make_provenance(const Config& cfg, int threads, bool deterministic);

// JSON documents; keys sorted, doubles round-trip exactly.
std::string a0_json(const A0Run& r, const Provenance& p);
std::string stability_json(const StabilityRun& r, const Provenance& p);
std::string relax_json(const RelaxRun& r, const Provenance& p);
std::string study_json(const StudyResult& r, const Provenance& p);
std::string greens_json(const GreensRun& r, const Provenance& p);
std::string checks_json(const ChecksRun& r, const Provenance& p);
std::string diagnostic_json(const std::string& command, const std::string& kind, const std::string& message,
                            const Provenance* p);

/// Columns N,p,err.
std::string study_errors_csv(const StudyResult& r);
/// Columns p,slope,intercept,residual,points.
std::string study_slopes_csv(const StudyResult& r);
/// Columns iter,energy,grad_inf,step.
std::string history_csv(const RelaxResult& r);
/// Columns n_1..n_d, g_ab entries.
std::string greens_table_csv(const GreensTable& t);

/// Atom count, Lattice="..." header, then "symbol x y z" per site at reference + u.
void write_xyz(std::ostream& os, const Supercell& cell, const Vector& u, const std::string& symbol);

/// Re-parses a results document and checks it against the schema of its "kind".
/// Throws ConfigError on any mismatch.
void validate_results(const std::string& text);

void write_file(const std::string& path, const std::string& content);

}  // namespace ldlab
