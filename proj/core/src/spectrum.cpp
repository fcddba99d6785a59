#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "ldlab/error.hpp"
#include "ldlab/model.hpp"
#include "ldlab/solver.hpp"

namespace ldlab {

// Lanczos for H v = λ B v using only B⁻¹ (the preconditioner). The basis
// v_j is B-orthonormal; z_j = B v_j is carried along so no B apply is needed.
StabilityReport stability_spectrum(const Assembly& asm_, const Vector& u, const Preconditioner& metric,
                                   const SpectrumOptions& opts) {
  const int m = asm_.cell().range_dim();
  const auto n = static_cast<Eigen::Index>(asm_.dofs());
  const int quotient = static_cast<int>(n) - m;
  if (opts.n_eigs < 1) throw ConfigError("n_eigs must be at least 1");
  const int max_steps = std::min(opts.max_steps, quotient);
  const int want = std::min(opts.n_eigs, quotient);

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  project_zero_mean(z, m);
  Vector v = metric.apply(z);
  double nrm = std::sqrt(v.dot(z));
  v /= nrm;
  z /= nrm;

  std::vector<Vector> V{v}, Z{z};
  std::vector<double> alpha, beta;
  StabilityReport rep;
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  for (int j = 0; j < max_steps; ++j) {
    Vector r = asm_.hessian_apply(u, V[static_cast<std::size_t>(j)]);
    project_zero_mean(r, m);
    const double a = V[static_cast<std::size_t>(j)].dot(r);
    alpha.push_back(a);
    r -= a * Z[static_cast<std::size_t>(j)];
    if (j > 0) r -= beta.back() * Z[static_cast<std::size_t>(j - 1)];
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < V.size(); ++i) r -= V[i].dot(r) * Z[i];
      // The metric cannot see constants, so rounding in that direction
      // would grow unchecked through the recurrence.
      project_zero_mean(r, m);
    }
    Vector w = metric.apply(r);
    const double b2 = w.dot(r);
    const int k = j + 1;

    const double b = b2 > 0.0 ? std::sqrt(b2) : 0.0;
    const double scale_est = std::abs(alpha.front()) + (beta.empty() ? 0.0 : beta.front());
    const bool breakdown = !(b > 1e-14 * std::max(scale_est, 1e-300));
    // the Ritz solve is cheap next to the reorthogonalisation, but not free at k ~ 1000
    if (!breakdown && !(k >= want && (k % 10 == 0 || k == max_steps))) {
      beta.push_back(b);
      V.push_back(w / b);
      Z.push_back(r / b);
      continue;
    }
    Vector diag = Eigen::Map<const Vector>(alpha.data(), k);
    Vector sub = Eigen::Map<const Vector>(beta.data(), k - 1);
    es.computeFromTridiagonal(diag, sub);
    const double scale = std::max(std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(k - 1)));
    rep.iterations = k;
    rep.eigenvalues.clear();
    rep.residuals.clear();
    bool done = k >= want;
    for (int i = 0; i < std::min(want, k); ++i) {
      rep.eigenvalues.push_back(es.eigenvalues()(i));
      const double res = std::abs(b * es.eigenvectors()(k - 1, i));
      rep.residuals.push_back(res);
      if (res > opts.tol * std::max(scale, 1e-300)) done = false;
    }
    if (done || breakdown || k == max_steps) {
      rep.converged = done || breakdown;
      break;
    }
    beta.push_back(b);
    V.push_back(w / b);
    Z.push_back(r / b);
  }

  rep.index = static_cast<int>(std::count_if(rep.eigenvalues.begin(), rep.eigenvalues.end(),
                                             [](double x) { return x < 0.0; }));
  rep.inf_sup = std::numeric_limits<double>::infinity();
  for (double x : rep.eigenvalues) rep.inf_sup = std::min(rep.inf_sup, std::abs(x));
  if (rep.converged) {
    rep.message = "converged";
    if (rep.index == want) rep.message += "; all requested eigenvalues are negative, index may be larger";
  } else {
    double worst = 0.0;
    for (double r : rep.residuals) worst = std::max(worst, r);
    rep.message = "Lanczos did not converge in " + std::to_string(rep.iterations) +
                  " steps; largest residual " + std::to_string(worst);
  }
  return rep;
}

}  // namespace ldlab
