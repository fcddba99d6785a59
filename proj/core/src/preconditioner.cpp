#include <cmath>

#include "ldlab/error.hpp"
#include "ldlab/solver.hpp"

namespace ldlab {

double Preconditioner::default_mu(const SitePotential& pot, const LatticeModel& model) {
  const auto hom = LatticeModel::homogeneous(model.basis(), model.range_dim(), model.cutoff());
  return HomogeneousHessian::build(pot, hom).mean_stiffness();
}

Preconditioner::Preconditioner(std::shared_ptr<const Supercell> cell, double mu, double shift_ratio)
    : cell_(std::move(cell)), mu_(mu), eps_(shift_ratio * mu) {
  if (!(mu > 0.0)) throw ConfigError("preconditioner stiffness mu must be positive");
  if (!(shift_ratio >= 0.0)) throw ConfigError("preconditioner shift must be non-negative");
  const auto& model = cell_->model();
  grid_ = std::make_unique<FourierGrid>(model.basis(),
                                        IntMatrix(2 * cell_->half_period() * cell_->multiplier()));
  inv_symbol_.resize(grid_->size());
  for (std::size_t j = 0; j < grid_->size(); ++j) inv_symbol_[j] = j == 0 ? 0.0 : multiplier(grid_->wavevector(j));
  slots_.resize(cell_->lattice_count());
  for (std::size_t i = 0; i < slots_.size(); ++i) slots_[i] = grid_->slot(cell_->coords(i));
  const double two_r = 2.0 * static_cast<double>(model.stencil().size());
  for (std::size_t i = cell_->lattice_count(); i < cell_->size(); ++i) {
    (void)i;
    added_diag_.push_back(1.0 / (mu_ * two_r + eps_));
  }
}

double Preconditioner::multiplier(const Vector& k) const {
  double l = 0.0;
  for (const auto& r : cell_->model().stencil()) l += 2.0 * (1.0 - std::cos(k.dot(r)));
  return 1.0 / (mu_ * l + eps_);
}

Vector Preconditioner::apply(const Vector& r) const {
  const int m = cell_->range_dim();
  if (r.size() != static_cast<Eigen::Index>(cell_->dofs())) throw ConfigError("preconditioner input has wrong size");
  Vector in = r;
  project_zero_mean(in, m);
  Vector out(in.size());
  std::vector<FourierGrid::Complex> data(grid_->size());
  const double scale = 1.0 / static_cast<double>(grid_->size());
  for (int a = 0; a < m; ++a) {
    std::fill(data.begin(), data.end(), FourierGrid::Complex(0.0, 0.0));
    for (std::size_t i = 0; i < slots_.size(); ++i) data[slots_[i]] = in(static_cast<Eigen::Index>(i) * m + a);
    grid_->forward(data);
    for (std::size_t j = 0; j < data.size(); ++j) data[j] *= inv_symbol_[j] * scale;
    grid_->backward(data);
    for (std::size_t i = 0; i < slots_.size(); ++i) out(static_cast<Eigen::Index>(i) * m + a) = data[slots_[i]].real();
    for (std::size_t k = 0; k < added_diag_.size(); ++k) {
      const auto idx = static_cast<Eigen::Index>(slots_.size() + k) * m + a;
      out(idx) = added_diag_[k] * in(idx);
    }
  }
  project_zero_mean(out, m);
  return out;
}

}  // namespace ldlab
