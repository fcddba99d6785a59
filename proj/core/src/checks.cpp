#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ldlab/error.hpp"
#include "ldlab/study.hpp"

namespace ldlab {
namespace {

std::shared_ptr<const Supercell> borrow(const Supercell& cell) {
  return std::shared_ptr<const Supercell>(&cell, [](const Supercell*) {});
}

std::vector<double> strain_magnitudes(const Supercell& cell, const Vector& u) {
  return strain(Displacement{u, false}, borrow(cell)).magnitudes();
}

// Strains at sites of Λ_r must not see the periodic wrap of a non-periodic field.
void require_interior(const Supercell& cell, double r, const char* what) {
  const double reach = std::ceil(r - 1e-9) + std::ceil(cell.cutoff_in_cells() - 1e-9);
  if (reach > cell.half_period()) {
    throw ConfigError(std::string(what) + ": radius " + std::to_string(r) + " leaves no room inside N = " +
                      std::to_string(cell.half_period()));
  }
}

}  // namespace

std::vector<double> second_difference_magnitudes(const Supercell& cell, const Vector& u) {
  const int m = cell.range_dim();
  std::vector<double> out(cell.size(), 0.0);
  for (std::size_t i = 0; i < cell.lattice_count(); ++i) {
    if (cell.stencil_id(i) != 0) continue;
    const auto nb = cell.neighbors(i);
    bool ok = true;
    for (auto j : nb) ok = ok && cell.stencil_id(j) == 0;
    if (!ok) continue;
    double s = 0.0;
    for (auto j : nb) {
      const auto nj = cell.neighbors(j);
      for (std::size_t k = 0; k < nb.size(); ++k) {
        // D_σ u(ℓ+ρ) − D_σ u(ℓ)
        const auto d = u.segment(static_cast<Eigen::Index>(nj[k]) * m, m) - u.segment(static_cast<Eigen::Index>(j) * m, m) -
                       u.segment(static_cast<Eigen::Index>(nb[k]) * m, m) + u.segment(static_cast<Eigen::Index>(i) * m, m);
        s += d.squaredNorm();
      }
    }
    out[i] = std::sqrt(s);
  }
  return out;
}

DecayCheck decay_check(const Supercell& cell, const Vector& u, std::vector<double> radii, double ratio) {
  DecayCheck out;
  if (!(ratio > 1.0)) throw ConfigError("annulus ratio must exceed 1");
  const auto first = strain_magnitudes(cell, u);
  const double peak = *std::max_element(first.begin(), first.end());
  if (peak <= 1e-12) {
    out.skipped = true;
    out.notice = "strains vanish (max " + std::to_string(peak) + "); decay check skipped";
    return out;
  }
  if (radii.empty()) {
    const auto& model = cell.model();
    const double lo = std::max(2.0 * (model.defect_radius() + model.cutoff()), 2.0 * model.cutoff());
    const double hi = 0.5 * cell.half_period() * cell.min_cell_height();
    for (double r = lo; ratio * r <= hi * (1.0 + 1e-12); r *= ratio) radii.push_back(r);
  }
  constexpr double floor = 1e-14;
  try {
    out.first = decay_profile(cell, first, radii, floor, ratio);
  } catch (const ConfigError& e) {
    out.notice = std::string("first differences: ") + e.what();
  }
  try {
    out.second = decay_profile(cell, second_difference_magnitudes(cell, u), radii, floor, ratio);
  } catch (const ConfigError& e) {
    out.notice += (out.notice.empty() ? "" : "; ") + std::string("second differences: ") + e.what();
  }
  return out;
}

CaccioppoliCheck caccioppoli_check(const Supercell& cell, const std::vector<double>& error_magnitudes,
                                   std::vector<double> r_list) {
  if (error_magnitudes.size() != cell.size()) throw ConfigError("per-site values do not match the cell");
  if (r_list.empty()) {
    for (int r = 2; r <= cell.half_period() / 4; ++r) r_list.push_back(r);
  }
  CaccioppoliCheck out;
  for (double r : r_list) {
    if (r < 2.0 || r > 0.25 * cell.half_period() + 1e-12) {
      throw ConfigError("Caccioppoli radius " + std::to_string(r) + " outside [2, N/4]");
    }
    CaccioppoliEntry e;
    e.r = r;
    e.inner = subset_norm(cell, error_magnitudes, Region::cube(0.5 * r), 2.0);
    e.outer = subset_norm(cell, error_magnitudes, Region::annulus(0.5 * r, 2.0 * r), 2.0);
    if (e.outer > 0.0) {
      e.ratio = e.inner / e.outer;
      out.max_ratio = std::max(out.max_ratio.value_or(0.0), *e.ratio);
    }
    out.entries.push_back(e);
  }
  return out;
}

double poincare_ratio(const Supercell& cell, const Displacement& u, double r1, double r2, double p) {
  const auto c = truncation_constants(cell);
  if (r1 < c.min_radius || r2 - r1 < c.min_radius) {
    throw ConfigError("Poincaré annulus needs R1 >= r_P and R2 - R1 >= r_P (r_P = " + std::to_string(c.min_radius) +
                      ")");
  }
  require_interior(cell, r2 + c.fattening, "Poincaré annulus");
  const Region a = Region::annulus(r1, r2);
  const Region fat = Region::annulus(std::max(0.0, r1 - c.fattening), r2 + c.fattening);
  const double num = displacement_norm(cell, u.values, a, p, true);
  const double den = r2 * subset_norm(cell, strain_magnitudes(cell, u.values), fat, p);
  if (den == 0.0) return 0.0;
  return num / den;
}

Displacement smooth_random_field(const Supercell& cell, double scale, unsigned seed, int modes) {
  if (!(scale > 0.0) || modes < 1) throw ConfigError("random field needs a positive scale and at least one mode");
  const int d = cell.dim();
  const int m = cell.range_dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<Vector> freq, amp;
  std::vector<double> shift;
  for (int j = 0; j < modes; ++j) {
    Vector w(d), a(m);
    for (int i = 0; i < d; ++i) w(i) = normal(rng);
    for (int i = 0; i < m; ++i) a(i) = normal(rng) / std::sqrt(static_cast<double>(modes));
    freq.push_back(w / scale);
    amp.push_back(a);
    shift.push_back(phase(rng));
  }
  Displacement u{Vector::Zero(static_cast<Eigen::Index>(cell.dofs())), false};
  for (std::size_t i = 0; i < cell.size(); ++i) {
    const Vector s = cell.cell_coords(i);
    for (int j = 0; j < modes; ++j) {
      u.values.segment(static_cast<Eigen::Index>(i) * m, m) += std::sin(freq[j].dot(s) + shift[j]) * amp[j];
    }
  }
  return u;
}

PoincareCheck poincare_check(const Supercell& cell, double r1, double r2, int samples, unsigned seed) {
  if (samples < 1) throw ConfigError("Poincaré check needs at least one sample");
  PoincareCheck out;
  out.samples = samples;
  for (int k = 0; k < samples; ++k) {
    const auto u = smooth_random_field(cell, 0.5 * r2, seed + static_cast<unsigned>(k));
    out.max_ratio = std::max(out.max_ratio, poincare_ratio(cell, u, r1, r2, 2.0));
    out.max_ratio_inf = std::max(out.max_ratio_inf, poincare_ratio(cell, u, r1, r2, kInfinity));
  }
  return out;
}

TruncationCheck truncation_check(const Supercell& cell, double radius, int samples, unsigned seed) {
  if (samples < 1) throw ConfigError("truncation check needs at least one sample");
  require_interior(cell, radius, "truncation radius");
  TruncationCheck out;
  out.samples = samples;
  const Region inside = Region::cube(radius);
  const Region outer = Region::annulus(0.5 * radius, radius);
  for (int k = 0; k < samples; ++k) {
    const auto u = smooth_random_field(cell, 0.25 * radius, seed + static_cast<unsigned>(k));
    const auto t = truncate(u, cell, radius);
    const auto du = strain(u, borrow(cell));
    const auto dt = strain(t, borrow(cell));
    const double base = subset_norm(du, inside, 2.0);
    const double ring = subset_norm(du, outer, 2.0);
    if (base > 0.0) out.max_global = std::max(out.max_global, subset_norm(dt, Region::full(), 2.0) / base);
    if (ring > 0.0) out.max_err1 = std::max(out.max_err1, subset_norm(difference(dt, du), inside, 2.0) / ring);
  }
  return out;
}

}  // namespace ldlab
