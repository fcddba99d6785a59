#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "ldlab/error.hpp"
#include "ldlab/lattice.hpp"

namespace ldlab {
namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  // b > 0
  return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

std::int64_t int_det(const IntMatrix& m) {
  switch (m.rows()) {
    case 1:
      return m(0, 0);
    case 2:
      return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    case 3:
      return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
             m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
             m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    default:
      throw ConfigError("unsupported dimension");
  }
}

IntMatrix int_adjugate(const IntMatrix& m) {
  const auto d = m.rows();
  IntMatrix adj(d, d);
  if (d == 1) {
    adj(0, 0) = 1;
  } else if (d == 2) {
    adj << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  } else {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
        adj(i, j) = m(r0, c0) * m(r1, c1) - m(r0, c1) * m(r1, c0);
      }
    }
  }
  return adj;
}

}  // namespace

std::shared_ptr<const Supercell> Supercell::build(std::shared_ptr<const LatticeModel> model,
                                                  const Matrix& cell, int half_period) {
  if (cell.rows() != model->dim() || cell.cols() != model->dim()) {
    throw ConfigError("cell matrix has wrong shape");
  }
  const Matrix m = model->basis_inverse() * cell;
  IntMatrix mi(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double r = std::round(m(i, j));
      if (std::abs(m(i, j) - r) > 1e-8) {
        throw ConfigError("cell column " + std::to_string(j) + " is not a lattice vector of A·Z^d");
      }
      mi(i, j) = static_cast<std::int64_t>(r);
    }
  }
  return build(std::move(model), mi, half_period);
}

std::shared_ptr<const Supercell> Supercell::build(std::shared_ptr<const LatticeModel> model,
                                                  const IntMatrix& multiplier, int half_period) {
  const int d = model->dim();
  if (multiplier.rows() != d || multiplier.cols() != d) {
    throw ConfigError("cell multiplier has wrong shape");
  }
  if (half_period < 1) throw ConfigError("half-period N must be at least 1");
  const std::int64_t det = int_det(multiplier);
  if (det == 0) throw ConfigError("cell multiplier is singular");

  std::shared_ptr<Supercell> cell(new Supercell());
  cell->model_ = std::move(model);
  cell->multiplier_ = multiplier;
  cell->cell_ = cell->model_->basis() * multiplier.cast<double>();
  cell->half_period_ = half_period;
  const std::int64_t sign = det > 0 ? 1 : -1;
  cell->adjugate_ = sign * int_adjugate(multiplier);
  cell->det_ = sign * det;

  cell->check_self_interaction();
  cell->enumerate_sites();
  cell->build_stencils();
  return cell;
}

double Supercell::min_cell_height() const {
  const Matrix inv = cell_.inverse();
  double h = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < inv.rows(); ++i) h = std::min(h, 1.0 / inv.row(i).norm());
  return h;
}

std::size_t Supercell::homogeneous_size() const {
  std::size_t n = static_cast<std::size_t>(det_);
  for (int i = 0; i < dim(); ++i) n *= static_cast<std::size_t>(2 * half_period_);
  return n;
}

void Supercell::check_self_interaction() const {
  const int d = dim();
  const Matrix period = 2.0 * half_period_ * cell_;
  double shortest = std::numeric_limits<double>::infinity();
  IntVector z = IntVector::Constant(d, -3);
  while (true) {
    if (!z.isZero()) shortest = std::min(shortest, (period * z.cast<double>()).norm());
    int axis = d - 1;
    while (axis >= 0 && z(axis) == 3) {
      z(axis) = -3;
      --axis;
    }
    if (axis < 0) break;
    ++z(axis);
  }
  const double rcut = model_->cutoff();
  if (!(shortest > 2.0 * rcut)) {
    std::ostringstream os;
    os << "supercell with N = " << half_period_ << " has shortest periodic image distance "
       << shortest << " <= 2 r_cut = " << 2.0 * rcut
       << "; atoms would interact with their own images, use a larger N";
    throw ConfigError(os.str());
  }
}

IntVector Supercell::reduce(const IntVector& n) const {
  const IntVector t = adjugate_ * n;
  const std::int64_t N = half_period_;
  IntVector z(n.size());
  for (Eigen::Index i = 0; i < n.size(); ++i) z(i) = ceil_div(t(i) - N * det_, 2 * N * det_);
  return n - 2 * N * (multiplier_ * z);
}

std::uint32_t Supercell::find(const IntVector& n) const { return find_key(to_key(reduce(n))); }

std::uint32_t Supercell::find_key(const SiteKey& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? npos : it->second;
}

IntVector Supercell::coords(std::size_t i) const {
  if (is_added(i)) throw ConfigError("added site has no lattice coordinates");
  IntVector n(dim());
  for (int a = 0; a < dim(); ++a) n(a) = keys_[i][static_cast<std::size_t>(a)];
  return n;
}

void Supercell::enumerate_sites() {
  const int d = dim();
  const std::int64_t N = half_period_;
  const auto& model = *model_;
  IntVector lo(d), hi(d);
  for (int i = 0; i < d; ++i) {
    hi(i) = N * multiplier_.row(i).cwiseAbs().sum();
    lo(i) = -hi(i);
  }

  std::vector<IntVector> kept;
  kept.reserve(homogeneous_size());
  std::size_t removed_inside = 0;
  IntVector n = lo;
  while (true) {
    const IntVector t = adjugate_ * n;
    bool inside = true;
    for (int i = 0; i < d && inside; ++i) inside = t(i) > -N * det_ && t(i) <= N * det_;
    if (inside) {
      if (model.is_removed(n)) {
        ++removed_inside;
      } else {
        kept.push_back(n);
      }
    }
    int axis = d - 1;
    while (axis >= 0 && n(axis) == hi(axis)) {
      n(axis) = lo(axis);
      --axis;
    }
    if (axis < 0) break;
    ++n(axis);
  }
  if (removed_inside != model.removed().size()) {
    throw ConfigError("defect core does not fit inside the supercell; use a larger N");
  }

  const Matrix cell_inv = cell_.inverse();
  const std::size_t total = kept.size() + model.added().size();
  positions_.resize(d, static_cast<Eigen::Index>(total));
  cell_coords_.resize(d, static_cast<Eigen::Index>(total));
  keys_.resize(total);
  lattice_count_ = kept.size();
  index_.reserve(total);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    positions_.col(col) = model.position(kept[i]);
    cell_coords_.col(col) = (adjugate_ * kept[i]).cast<double>() / static_cast<double>(det_);
    keys_[i] = to_key(kept[i]);
    index_.emplace(keys_[i], static_cast<std::uint32_t>(i));
  }
  for (std::size_t k = 0; k < model.added().size(); ++k) {
    const auto col = static_cast<Eigen::Index>(kept.size() + k);
    const Vector& p = model.added()[k];
    const Vector s = cell_inv * p;
    for (int i = 0; i < d; ++i) {
      if (!(s(i) > -static_cast<double>(N) && s(i) <= static_cast<double>(N))) {
        throw ConfigError("added defect site lies outside the supercell; use a larger N");
      }
    }
    positions_.col(col) = p;
    cell_coords_.col(col) = s;
    keys_[kept.size() + k] = SiteKey{std::numeric_limits<std::int64_t>::min(),
                                     static_cast<std::int64_t>(k), 0};
    index_.emplace(keys_[kept.size() + k], static_cast<std::uint32_t>(kept.size() + k));
  }
}

void Supercell::build_stencils() {
  const int d = dim();
  const auto& model = *model_;
  const double rcut = model.cutoff();
  const Matrix period = 2.0 * half_period_ * cell_;
  const Matrix period_inv = period.inverse();
  const std::size_t n = size();

  // All minimum-image copies of delta that lie within the cut-off.
  auto images_within = [&](const Vector& delta, std::vector<Vector>& out) {
    out.clear();
    Vector base = delta;
    const Vector s = period_inv * delta;
    for (int i = 0; i < d; ++i) base -= period.col(i) * std::round(s(i));
    IntVector z = IntVector::Constant(d, -1);
    while (true) {
      const Vector v = base + period * z.cast<double>();
      const double r = v.norm();
      if (r < rcut && r > 1e-12) out.push_back(v);
      int axis = d - 1;
      while (axis >= 0 && z(axis) == 1) {
        z(axis) = -1;
        --axis;
      }
      if (axis < 0) break;
      ++z(axis);
    }
  };

  Stencil hom;
  hom.dim = d;
  hom.count = static_cast<int>(model.stencil().size());
  for (const auto& rho : model.stencil()) hom.offsets.insert(hom.offsets.end(), rho.data(), rho.data() + d);
  stencils_.clear();
  stencils_.push_back(hom);

  bond_start_.assign(n + 1, 0);
  neighbors_.clear();
  neighbors_.reserve(n * static_cast<std::size_t>(hom.count));
  stencil_id_.assign(n, 0);

  std::vector<Vector> images;
  std::vector<double> offsets;
  std::vector<std::uint32_t> targets;
  for (std::size_t i = 0; i < n; ++i) {
    offsets.clear();
    targets.clear();
    bool modified = false;
    const Vector x = positions_.col(static_cast<Eigen::Index>(i));
    if (!is_added(i)) {
      const IntVector ni = coords(i);
      for (std::size_t k = 0; k < model.stencil_coords().size(); ++k) {
        const std::uint32_t t = find(ni + model.stencil_coords()[k]);
        if (t == npos) {
          modified = true;
          continue;
        }
        offsets.insert(offsets.end(), model.stencil()[k].data(), model.stencil()[k].data() + d);
        targets.push_back(t);
      }
    } else {
      modified = true;
      const Vector c = model.basis_inverse() * x;
      IntVector lo(d), hi(d);
      for (int a = 0; a < d; ++a) {
        const double reach = rcut * model.basis_inverse().row(a).norm();
        lo(a) = static_cast<std::int64_t>(std::floor(c(a) - reach)) - 1;
        hi(a) = static_cast<std::int64_t>(std::ceil(c(a) + reach)) + 1;
      }
      IntVector m = lo;
      while (true) {
        const Vector rho = model.position(m) - x;
        if (rho.norm() < rcut) {
          const std::uint32_t t = find(m);
          if (t != npos) {
            offsets.insert(offsets.end(), rho.data(), rho.data() + d);
            targets.push_back(t);
          }
        }
        int axis = d - 1;
        while (axis >= 0 && m(axis) == hi(axis)) {
          m(axis) = lo(axis);
          --axis;
        }
        if (axis < 0) break;
        ++m(axis);
      }
    }
    for (std::size_t k = 0; k < model.added().size(); ++k) {
      const std::uint32_t t = added_site(k);
      if (t == i) continue;
      images_within(model.added()[k] - x, images);
      if (images.size() > 1) {
        throw ConfigError("defect site interacts with several periodic images; use a larger N");
      }
      for (const auto& v : images) {
        modified = true;
        offsets.insert(offsets.end(), v.data(), v.data() + d);
        targets.push_back(t);
      }
    }
    if (modified) {
      Stencil st;
      st.dim = d;
      st.count = static_cast<int>(targets.size());
      st.offsets = offsets;
      if (st.count == 0) throw ConfigError("site without neighbours in the supercell");
      stencil_id_[i] = static_cast<int>(stencils_.size());
      stencils_.push_back(std::move(st));
    }
    neighbors_.insert(neighbors_.end(), targets.begin(), targets.end());
    bond_start_[i + 1] = neighbors_.size();
  }
}

}  // namespace ldlab
