#include <cmath>
#include <string>

#include "ldlab/error.hpp"
#include "ldlab/model.hpp"
#include "ldlab/parallel.hpp"

namespace ldlab {
namespace {

[[noreturn]] void rethrow_at_site(const SingularityError& e, std::size_t site) {
  throw SingularityError("site " + std::to_string(site) + ": " + e.what());
}

}  // namespace

void gather_strain(const Supercell& cell, std::size_t site, const double* u, double* out) {
  const auto m = static_cast<std::size_t>(cell.range_dim());
  const auto nb = cell.neighbors(site);
  const double* ui = u + site * m;
  for (std::size_t k = 0; k < nb.size(); ++k) {
    const double* ut = u + static_cast<std::size_t>(nb[k]) * m;
    for (std::size_t a = 0; a < m; ++a) out[k * m + a] = ut[a] - ui[a];
  }
}

Assembly::Assembly(std::shared_ptr<const Supercell> cell, std::shared_ptr<const SitePotential> pot)
    : cell_(std::move(cell)), pot_(std::move(pot)) {
  const int need = pot_->required_range_dim(cell_->dim());
  if (need != 0 && need != cell_->range_dim()) {
    throw ConfigError("potential '" + pot_->name() + "' needs range dimension " + std::to_string(need) +
                      ", model has " + std::to_string(cell_->range_dim()));
  }
  if (pot_->cutoff() > cell_->model().cutoff() + 1e-12) {
    throw ConfigError("potential cut-off exceeds the stencil cut-off radius of the lattice model");
  }
  const int m = cell_->range_dim();
  reference_.resize(cell_->num_stencils());
  for (std::size_t s = 0; s < reference_.size(); ++s) {
    const auto& st = cell_->stencil(static_cast<int>(s));
    const std::vector<double> zero(static_cast<std::size_t>(st.count) * static_cast<std::size_t>(m), 0.0);
    reference_[s] = pot_->energy(StencilView(st), m, zero);
  }
}

void Assembly::check_size(const Vector& u) const {
  if (u.size() != static_cast<Eigen::Index>(cell_->dofs())) {
    throw ConfigError("field length " + std::to_string(u.size()) + " does not match the cell (" +
                      std::to_string(cell_->dofs()) + " dofs)");
  }
}

std::vector<double> Assembly::site_energies(const Vector& u) const {
  check_size(u);
  const int m = cell_->range_dim();
  std::vector<double> out(cell_->size());
  parallel_chunks(cell_->size(), [&](std::size_t begin, std::size_t end, int) {
    std::vector<double> g;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& st = cell_->site_stencil(i);
      g.resize(static_cast<std::size_t>(st.count) * static_cast<std::size_t>(m));
      gather_strain(*cell_, i, u.data(), g.data());
      try {
        out[i] = pot_->energy_change(StencilView(st), m, g);
      } catch (const SingularityError& e) {
        rethrow_at_site(e, i);
      }
    }
  });
  return out;
}

double Assembly::energy(const Vector& u) const {
  const auto e = site_energies(u);
  double total = 0.0;
  for (double x : e) total += x;
  if (!std::isfinite(total)) throw SingularityError("energy is not finite");
  return total;
}

double Assembly::energy_gradient(const Vector& u, Vector& grad) const {
  check_size(u);
  const int m = cell_->range_dim();
  const std::size_t n = cell_->size();
  const int chunks = num_chunks(n);
  std::vector<Vector> partial(static_cast<std::size_t>(chunks));
  std::vector<double> energies(static_cast<std::size_t>(chunks), 0.0);
  grad = Vector::Zero(u.size());
  parallel_chunks(n, [&](std::size_t begin, std::size_t end, int c) {
    Vector& out = chunks == 1 ? grad : partial[static_cast<std::size_t>(c)];
    if (chunks > 1) out = Vector::Zero(u.size());
    std::vector<double> g, gr;
    double e = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& st = cell_->site_stencil(i);
      const auto len = static_cast<std::size_t>(st.count) * static_cast<std::size_t>(m);
      g.resize(len);
      gr.resize(len);
      gather_strain(*cell_, i, u.data(), g.data());
      try {
        e += pot_->energy_change_gradient(StencilView(st), m, g, gr);
      } catch (const SingularityError& err) {
        rethrow_at_site(err, i);
      }
      const auto nb = cell_->neighbors(i);
      double* oi = out.data() + i * static_cast<std::size_t>(m);
      for (std::size_t k = 0; k < nb.size(); ++k) {
        double* ot = out.data() + static_cast<std::size_t>(nb[k]) * static_cast<std::size_t>(m);
        for (int a = 0; a < m; ++a) {
          const double v = gr[k * static_cast<std::size_t>(m) + static_cast<std::size_t>(a)];
          ot[a] += v;
          oi[a] -= v;
        }
      }
    }
    energies[static_cast<std::size_t>(c)] = e;
  });
  double total = 0.0;
  for (int c = 0; c < chunks; ++c) {
    total += energies[static_cast<std::size_t>(c)];
    if (chunks > 1) grad += partial[static_cast<std::size_t>(c)];
  }
  if (!std::isfinite(total)) throw SingularityError("energy is not finite");
  return total;
}

Vector Assembly::gradient(const Vector& u) const {
  Vector g;
  energy_gradient(u, g);
  return g;
}

Vector Assembly::hessian_apply(const Vector& u, const Vector& v) const {
  check_size(u);
  check_size(v);
  const int m = cell_->range_dim();
  const std::size_t n = cell_->size();
  const int chunks = num_chunks(n);
  std::vector<Vector> partial(static_cast<std::size_t>(chunks));
  Vector result = Vector::Zero(u.size());
  parallel_chunks(n, [&](std::size_t begin, std::size_t end, int c) {
    Vector& out = chunks == 1 ? result : partial[static_cast<std::size_t>(c)];
    if (chunks > 1) out = Vector::Zero(u.size());
    std::vector<double> g, w, hw;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& st = cell_->site_stencil(i);
      const auto len = static_cast<std::size_t>(st.count) * static_cast<std::size_t>(m);
      g.resize(len);
      w.resize(len);
      hw.resize(len);
      gather_strain(*cell_, i, u.data(), g.data());
      gather_strain(*cell_, i, v.data(), w.data());
      try {
        pot_->hessian_apply(StencilView(st), m, g, w, hw);
      } catch (const SingularityError& err) {
        rethrow_at_site(err, i);
      }
      const auto nb = cell_->neighbors(i);
      double* oi = out.data() + i * static_cast<std::size_t>(m);
      for (std::size_t k = 0; k < nb.size(); ++k) {
        double* ot = out.data() + static_cast<std::size_t>(nb[k]) * static_cast<std::size_t>(m);
        for (int a = 0; a < m; ++a) {
          const double x = hw[k * static_cast<std::size_t>(m) + static_cast<std::size_t>(a)];
          ot[a] += x;
          oi[a] -= x;
        }
      }
    }
  });
  for (int c = 0; c < chunks && chunks > 1; ++c) result += partial[static_cast<std::size_t>(c)];
  return result;
}

SparseMatrix Assembly::hessian_matrix(const Vector& u, std::size_t budget) const {
  check_size(u);
  if (cell_->dofs() > budget) {
    throw ConfigError("Hessian matrix with " + std::to_string(cell_->dofs()) + " dofs exceeds the budget of " +
                      std::to_string(budget) + "; use the matrix-free hessian_apply mode");
  }
  const int m = cell_->range_dim();
  const bool diag_only = pot_->block_diagonal();
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> g;
  Matrix h;
  for (std::size_t i = 0; i < cell_->size(); ++i) {
    const auto& st = cell_->site_stencil(i);
    const auto len = static_cast<Eigen::Index>(st.count) * m;
    g.resize(static_cast<std::size_t>(len));
    gather_strain(*cell_, i, u.data(), g.data());
    h.setZero(len, len);
    try {
      pot_->hessian(StencilView(st), m, g, h);
    } catch (const SingularityError& err) {
      rethrow_at_site(err, i);
    }
    const auto nb = cell_->neighbors(i);
    const auto si = static_cast<Eigen::Index>(i);
    for (int k = 0; k < st.count; ++k) {
      for (int l = 0; l < st.count; ++l) {
        if (diag_only && k != l) continue;
        const auto tk = static_cast<Eigen::Index>(nb[static_cast<std::size_t>(k)]);
        const auto tl = static_cast<Eigen::Index>(nb[static_cast<std::size_t>(l)]);
        for (int a = 0; a < m; ++a) {
          for (int b = 0; b < m; ++b) {
            const double x = h(k * m + a, l * m + b);
            if (x == 0.0) continue;
            trip.emplace_back(tk * m + a, tl * m + b, x);
            trip.emplace_back(tk * m + a, si * m + b, -x);
            trip.emplace_back(si * m + a, tl * m + b, -x);
            trip.emplace_back(si * m + a, si * m + b, x);
          }
        }
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(cell_->dofs());
  SparseMatrix out(n, n);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

}  // namespace ldlab
