#include "ldlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "ldlab/error.hpp"

namespace ldlab {
namespace {

constexpr double kSigma = 0.1;

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Trial {
  double alpha = 0.0;
  double energy = 0.0;
  Vector grad;
};

std::optional<Trial> line_search(const Assembly& asm_, const Vector& u, double f0, double slope, const Vector& d,
                                 double alpha, double alpha_max, double noise, const SolverOptions& opts,
                                 int& evaluations) {
  // Strong-Wolfe style search: sufficient decrease (or, below the energy
  // noise floor, no resolvable increase) plus |φ'(α)| <= σ|φ'(0)|. Steps
  // move by secant on φ' once bracketed and expand otherwise.
  const int m = asm_.cell().range_dim();
  const double sigma = kSigma;  // tight, as nonlinear CG wants
  Vector trial_u(u.size());
  std::optional<Trial> best;
  double best_dphi = 0.0;
  double lo = 0.0, dlo = slope;
  double hi = 0.0, dhi = 0.0;  // hi == 0: no upper bracket yet
  for (int attempt = 0; attempt < 40; ++attempt) {
    trial_u = u + alpha * d;
    Trial t;
    t.alpha = alpha;
    ++evaluations;
    try {
      t.energy = asm_.energy_gradient(trial_u, t.grad);
    } catch (const SingularityError&) {
      hi = alpha;
      dhi = 0.0;
      alpha = lo > 0.0 ? 0.5 * (lo + hi) : alpha * opts.backtrack;
      continue;
    }
    project_zero_mean(t.grad, m);
    const double dphi = t.grad.dot(d);
    const bool flat = std::abs(t.energy - f0) <= noise;
    const bool decrease = flat || t.energy <= f0 + opts.armijo * alpha * slope;

    if (!decrease) {
      // resolvable increase: the minimiser lies below alpha
      if (best && attempt >= 20) return best;
      hi = alpha;
      dhi = dphi;
      double next;
      if (dphi > 0.0) {
        next = lo - dlo * (hi - lo) / (dhi - dlo);
      } else {
        const double curv = t.energy - f0 - slope * alpha;
        next = curv > 0.0 ? -slope * alpha * alpha / (2.0 * curv) : opts.backtrack * alpha;
      }
      alpha = std::clamp(next, lo + 0.1 * (hi - lo), lo + opts.backtrack * (hi - lo));
      if (alpha < 1e-300) break;
      continue;
    }

    if (std::abs(dphi) <= sigma * std::abs(slope) || (dphi < 0.0 && alpha >= alpha_max)) return t;
    if (!best || std::abs(dphi) < std::abs(best_dphi)) {
      best = t;
      best_dphi = dphi;
    }
    if (attempt >= 20) break;
    if (dphi < 0.0) {
      lo = alpha;
      dlo = dphi;
    } else {
      hi = alpha;
      dhi = dphi;
    }
    double next;
    if (hi > 0.0 && dhi > 0.0) {
      next = lo - dlo * (hi - lo) / (dhi - dlo);
      next = std::clamp(next, lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo));
    } else if (hi > 0.0) {
      next = 0.5 * (lo + hi);
    } else {
      // extrapolate the secant through (0, φ'(0)) and (α, φ'(α))
      next = alpha * slope / (slope - dphi);
      if (!(next > alpha)) next = 4.0 * alpha;
      next = std::min({next, 4.0 * alpha, alpha_max});
    }
    alpha = next;
  }
  return best;
}

}  // namespace

double sup_norm(const Vector& field, int range_dim) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < field.size() / range_dim; ++i) {
    s = std::max(s, field.segment(i * range_dim, range_dim).norm());
  }
  return s;
}

int solve_linear(const Assembly& asm_, const Vector& u, const Vector& b, Vector& x, const Preconditioner* precon,
                 double rel_tol, int max_iter, double* residual) {
  const int m = asm_.cell().range_dim();
  Vector r = b;
  project_zero_mean(r, m);
  x = Vector::Zero(b.size());
  const double r0 = r.norm();
  if (residual) *residual = r0;
  if (r0 == 0.0) return 0;
  Vector z = precon ? precon->apply(r) : r;
  if (!precon) project_zero_mean(z, m);
  Vector p = z;
  double rz = r.dot(z);
  for (int it = 1; it <= max_iter; ++it) {
    Vector hp = asm_.hessian_apply(u, p);
    project_zero_mean(hp, m);
    const double php = p.dot(hp);
    if (!(php > 0.0)) throw NumericalError("negative curvature in the linear solve: Hessian is not positive");
    const double a = rz / php;
    x += a * p;
    r -= a * hp;
    if (residual) *residual = r.norm();
    if (r.norm() <= rel_tol * r0) return it;
    z = precon ? precon->apply(r) : r;
    if (!precon) project_zero_mean(z, m);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return max_iter;
}

RelaxResult relax(const Assembly& asm_, const Displacement& u0, const SolverOptions& opts,
                  const Preconditioner* precon) {
  if (!(opts.tol_grad_inf > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (opts.restart < 1) throw ConfigError("restart interval must be at least 1");
  if (opts.max_iter < 0) throw ConfigError("max_iter must be non-negative");
  const auto& cell = asm_.cell();
  const int m = cell.range_dim();
  if (u0.values.size() != static_cast<Eigen::Index>(cell.dofs())) {
    throw ConfigError("initial guess does not match the supercell");
  }

  std::unique_ptr<Preconditioner> own;
  if (opts.precondition && !precon) {
    const double mu = opts.mu > 0.0 ? opts.mu : Preconditioner::default_mu(asm_.potential(), cell.model());
    own = std::make_unique<Preconditioner>(asm_.cell_ptr(), mu, opts.shift_ratio);
    precon = own.get();
  }
  if (!opts.precondition) precon = nullptr;
  auto apply_p = [&](const Vector& g) {
    if (precon) return precon->apply(g);
    Vector s = g;
    project_zero_mean(s, m);
    return s;
  };

  double ref_scale = 0.0;
  for (std::size_t i = 0; i < cell.size(); ++i) ref_scale += std::abs(asm_.reference_energy(cell.stencil_id(i)));
  const double noise = 100.0 * kEps * (ref_scale + static_cast<double>(cell.size()));

  RelaxResult res;
  Vector u = u0.values;
  project_zero_mean(u, m);
  Vector g;
  double f = asm_.energy_gradient(u, g);
  project_zero_mean(g, m);
  double ginf = sup_norm(g, m);
  res.history.push_back({0, f, ginf, 0.0});

  const double cg_target = opts.newton_refine ? std::max(opts.tol_grad_inf, opts.newton_switch) : opts.tol_grad_inf;
  Vector s = apply_p(g);
  Vector d = -s;
  double gs = g.dot(s);
  double alpha_prev = 1.0, slope_prev = 0.0;
  int since_restart = 0;
  bool failed = false;
  int k = 0;
  while (ginf > cg_target && ginf > opts.tol_grad_inf) {
    if (k >= opts.max_iter) {
      res.message = "maximum number of iterations reached";
      failed = true;
      break;
    }
    ++k;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      d = -s;
      slope = -gs;
      since_restart = 0;
    }
    double alpha = k == 1 ? 1.0 : alpha_prev * slope_prev / slope;
    alpha = std::min(alpha, 10.0 * alpha_prev);
    double alpha_max = std::numeric_limits<double>::infinity();
    if (opts.max_step > 0.0) {
      const double dmax = sup_norm(d, m);
      if (dmax > 0.0) alpha_max = opts.max_step / dmax;
    }
    alpha = std::min(alpha, alpha_max);
    auto t = line_search(asm_, u, f, slope, d, alpha, alpha_max, noise, opts, res.evaluations);
    if (!t) {
      if (since_restart > 0) {
        // Retry once along steepest descent before giving up.
        d = -s;
        since_restart = 0;
        --k;
        continue;
      }
      res.message = "line search stagnated";
      failed = true;
      break;
    }
    u += t->alpha * d;
    project_zero_mean(u, m);
    Vector g_new = std::move(t->grad);
    f = t->energy;
    ginf = sup_norm(g_new, m);
    res.history.push_back({k, f, ginf, t->alpha * sup_norm(d, m)});

    const Vector s_new = apply_p(g_new);
    const double gs_new = g_new.dot(s_new);
    double beta = (gs_new - g_new.dot(s)) / gs;
    ++since_restart;
    if (!(beta > 0.0) || since_restart >= opts.restart) {
      beta = 0.0;
      since_restart = 0;
    }
    d = -s_new + beta * d;
    alpha_prev = t->alpha;
    slope_prev = slope;
    g = std::move(g_new);
    s = s_new;
    gs = gs_new;
  }
  res.iterations = k;

  if (!failed && opts.newton_refine && ginf > opts.tol_grad_inf) {
    for (int it = 0; it < opts.newton_max_iter && ginf > opts.tol_grad_inf; ++it) {
      Vector delta;
      int lin = 0;
      try {
        lin = solve_linear(asm_, u, -g, delta, precon, 1e-8, opts.linear_max_iter);
      } catch (const NumericalError& e) {
        res.message = std::string("Newton refinement stopped: ") + e.what();
        break;
      }
      res.linear_iterations += lin;
      ++res.newton_iterations;
      // Damp when the gradient does not decrease.
      double step = 1.0;
      bool accepted = false;
      for (int b = 0; b < 6; ++b, step *= 0.5) {
        Vector trial = u + step * delta;
        Vector gt;
        double ft;
        try {
          ft = asm_.energy_gradient(trial, gt);
        } catch (const SingularityError&) {
          continue;
        }
        project_zero_mean(gt, m);
        const double gi = sup_norm(gt, m);
        if (gi < ginf) {
          u = std::move(trial);
          project_zero_mean(u, m);
          g = std::move(gt);
          f = ft;
          ginf = gi;
          accepted = true;
          break;
        }
      }
      res.history.push_back({k + res.newton_iterations, f, ginf, step * sup_norm(delta, m)});
      if (!accepted) {
        res.message = "Newton refinement stagnated at the roundoff floor";
        break;
      }
    }
  } else if (!failed && ginf > opts.tol_grad_inf) {
    res.message = "gradient tolerance not reached";
  }

  res.u = {u, true};
  res.energy = f;
  res.grad_inf = ginf;
  res.converged = !failed && ginf <= opts.tol_grad_inf;
  if (res.converged) res.message = "converged";
  return res;
}

Displacement prolong(const Displacement& u, const Supercell& from, const Supercell& to) {
  if (&from.model() != &to.model() && from.model_ptr() != to.model_ptr()) {
    if (from.model().basis() != to.model().basis() || from.model().added().size() != to.model().added().size()) {
      throw ConfigError("prolongation needs cells of the same lattice model");
    }
  }
  if (to.half_period() < from.half_period()) throw ConfigError("prolongation target must be larger");
  const int m = from.range_dim();
  if (u.values.size() != static_cast<Eigen::Index>(from.dofs())) throw ConfigError("field does not match the cell");

  // Blend the source out smoothly before the zero extension: a hard cut at
  // the old boundary leaves a kink that costs as many iterations as it saves.
  // The gauge is the mean over the blending annulus.
  const double n = from.half_period();
  const double rcell = from.cutoff_in_cells();
  const Region band = Region::annulus(4.0 * n / 6.0 - rcell, 5.0 * n / 6.0 + rcell);
  Vector shift = Vector::Zero(m);
  std::size_t count = 0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (!band.contains_cell_coords(from.cell_coords(i))) continue;
    shift += u.values.segment(static_cast<Eigen::Index>(i) * m, m);
    ++count;
  }
  if (count > 0) shift /= static_cast<double>(count);

  Displacement out{Vector::Zero(static_cast<Eigen::Index>(to.dofs())), false};
  for (std::size_t i = 0; i < to.size(); ++i) {
    const std::uint32_t s = from.find_key(to.key(i));
    if (s == Supercell::npos) continue;
    const double w = cutoff_eta(from.cell_coords(s), n);
    if (w == 0.0) continue;
    out.values.segment(static_cast<Eigen::Index>(i) * m, m) =
        w * (u.values.segment(static_cast<Eigen::Index>(s) * m, m) - shift);
  }
  project_zero_mean(out.values, m);
  out.zero_mean = true;
  return out;
}

}  // namespace ldlab
