#include "ldlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <unordered_set>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "ldlab/error.hpp"

namespace ldlab {
namespace {

// Integer points n with |A n − center| < radius, lexicographic order.
template <typename Fn>
void for_lattice_points_near(const Matrix& basis, const Matrix& basis_inv, const Vector& center,
                             double radius, Fn&& fn) {
  const int d = static_cast<int>(basis.rows());
  const Vector c = basis_inv * center;
  IntVector lo(d), hi(d);
  for (int i = 0; i < d; ++i) {
    const double reach = radius * basis_inv.row(i).norm();
    lo(i) = static_cast<std::int64_t>(std::floor(c(i) - reach)) - 1;
    hi(i) = static_cast<std::int64_t>(std::ceil(c(i) + reach)) + 1;
  }
  IntVector n = lo;
  while (true) {
    const Vector x = basis * n.cast<double>();
    if ((x - center).norm() < radius) fn(n, x);
    int axis = d - 1;
    while (axis >= 0 && n(axis) == hi(axis)) {
      n(axis) = lo(axis);
      --axis;
    }
    if (axis < 0) break;
    ++n(axis);
  }
}

std::string format_vector(const Vector& v) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
  os << ")";
  return os.str();
}

void require_span(const std::vector<Vector>& offsets, int d, const std::string& where) {
  if (offsets.empty()) {
    throw ConfigError("interaction stencil " + where + " is empty: increase the cut-off radius");
  }
  Matrix m(d, static_cast<Eigen::Index>(offsets.size()));
  for (std::size_t k = 0; k < offsets.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = offsets[k];
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const double tol = 1e-10 * std::max(1.0, sv(0));
  if (sv.size() < d || sv(d - 1) <= tol) {
    throw ConfigError("interaction stencil " + where + " does not span R^d; deficient direction " +
                      format_vector(svd.matrixU().col(d - 1)));
  }
}

}  // namespace

LatticeModel LatticeModel::homogeneous(const Matrix& basis, int range_dim, double cutoff) {
  const int d = static_cast<int>(basis.rows());
  if (basis.cols() != d || d < 1 || d > kMaxDim) {
    throw ConfigError("lattice basis must be a square matrix of dimension 1..3");
  }
  if (range_dim < 1) throw ConfigError("range dimension must be at least 1");
  if (!(cutoff > 0.0)) throw ConfigError("cut-off radius must be positive");
  Eigen::FullPivLU<Matrix> lu(basis);
  if (!lu.isInvertible() || std::abs(basis.determinant()) < 1e-12) {
    throw ConfigError("lattice basis matrix is singular");
  }

  LatticeModel model;
  model.basis_ = basis;
  model.basis_inv_ = basis.inverse();
  model.range_dim_ = range_dim;
  model.cutoff_ = cutoff;

  for_lattice_points_near(basis, model.basis_inv_, Vector::Zero(d), cutoff,
                          [&](const IntVector& n, const Vector& x) {
                            if (n.isZero()) return;
                            model.stencil_coords_.push_back(n);
                            model.stencil_.push_back(x);
                          });
  require_span(model.stencil_, d, "of the homogeneous lattice");

  // The stencil must generate A·Z^d so that the bond graph is connected.
  std::int64_t reach = 0;
  for (const auto& r : model.stencil_coords_) reach = std::max(reach, r.cwiseAbs().maxCoeff());
  const std::int64_t box = 4 * reach + 4;
  std::unordered_set<SiteKey, SiteKeyHash> seen;
  std::deque<IntVector> queue{IntVector::Zero(d)};
  seen.insert(to_key(queue.front()));
  while (!queue.empty()) {
    IntVector n = queue.front();
    queue.pop_front();
    for (const auto& r : model.stencil_coords_) {
      IntVector t = n + r;
      if (t.cwiseAbs().maxCoeff() > box) continue;
      if (seen.insert(to_key(t)).second) queue.push_back(t);
    }
  }
  for (int i = 0; i < d; ++i) {
    IntVector e = IntVector::Zero(d);
    e(i) = 1;
    if (!seen.count(to_key(e))) {
      throw ConfigError("bond graph of the homogeneous lattice is disconnected: stencil does not "
                        "generate lattice direction " + std::to_string(i));
    }
  }

  const auto count = model.stencil_coords_.size();
  model.stencil_opposite_.assign(count, -1);
  for (std::size_t a = 0; a < count; ++a) {
    for (std::size_t b = 0; b < count; ++b) {
      if ((model.stencil_coords_[a] + model.stencil_coords_[b]).isZero()) {
        model.stencil_opposite_[a] = static_cast<int>(b);
      }
    }
  }
  return model;
}

std::optional<IntVector> LatticeModel::lattice_coords(const Vector& x, double tol) const {
  const Vector c = basis_inv_ * x;
  IntVector n(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double r = std::round(c(i));
    if (std::abs(c(i) - r) > tol) return std::nullopt;
    n(i) = static_cast<std::int64_t>(r);
  }
  return n;
}

bool LatticeModel::is_removed(const IntVector& n) const {
  return std::any_of(removed_.begin(), removed_.end(), [&](const IntVector& r) { return r == n; });
}

LatticeModel LatticeModel::with_defect(const std::vector<Vector>& removed,
                                       const std::vector<Vector>& added,
                                       double defect_radius) const {
  if (has_defect()) throw ConfigError("model already carries a defect");
  if (!(defect_radius > 0.0)) throw ConfigError("defect radius must be positive");
  const int d = dim();
  LatticeModel model = *this;
  model.defect_radius_ = defect_radius;

  for (const auto& x : removed) {
    if (x.size() != d) throw ConfigError("removed site has wrong dimension");
    if (!(x.norm() < defect_radius)) {
      throw ConfigError("removed site " + format_vector(x) +
                        " lies outside the defect core ball B_{R_def}; the defect must stay inside its core radius");
    }
    auto n = lattice_coords(x);
    if (!n) throw ConfigError("removed site " + format_vector(x) + " is not a lattice site");
    if (model.is_removed(*n)) throw ConfigError("site " + format_vector(x) + " removed twice");
    model.removed_.push_back(*n);
  }
  for (const auto& x : added) {
    if (x.size() != d) throw ConfigError("added site has wrong dimension");
    if (!(x.norm() < defect_radius)) {
      throw ConfigError("added site " + format_vector(x) +
                        " lies outside the defect core ball B_{R_def}; the defect must stay inside its core radius");
    }
    if (auto n = lattice_coords(x, 1e-9); n && !model.is_removed(*n)) {
      throw ConfigError("added site " + format_vector(x) + " coincides with a lattice site");
    }
    for (const auto& y : model.added_) {
      if ((x - y).norm() < 1e-9) throw ConfigError("added site " + format_vector(x) + " given twice");
    }
    model.added_.push_back(x);
  }
  model.verify_defect_region();
  return model;
}

std::vector<Vector> LatticeModel::site_stencil(const Vector& x) const {
  std::vector<Vector> out;
  for_lattice_points_near(basis_, basis_inv_, x, cutoff_, [&](const IntVector& n, const Vector& y) {
    if (is_removed(n)) return;
    const Vector rho = y - x;
    if (rho.norm() > 1e-12) out.push_back(rho);
  });
  for (const auto& y : added_) {
    const Vector rho = y - x;
    if (rho.norm() > 1e-12 && rho.norm() < cutoff_) out.push_back(rho);
  }
  return out;
}

void LatticeModel::verify_defect_region() const {
  // Sites within R_def + 2 r_cut; those beyond R_def + r_cut see a homogeneous
  // stencil and are connected to infinity through the host lattice.
  const double outer = defect_radius_ + 2.0 * cutoff_;
  const double core = defect_radius_ + cutoff_;
  std::vector<Vector> sites;
  for_lattice_points_near(basis_, basis_inv_, Vector::Zero(dim()), outer,
                          [&](const IntVector& n, const Vector& x) {
                            if (!is_removed(n)) sites.push_back(x);
                          });
  for (const auto& y : added_) sites.push_back(y);

  std::vector<char> reached(sites.size(), 0);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i].norm() > core) {
      reached[i] = 1;
      queue.push_back(i);
    } else {
      require_span(site_stencil(sites[i]), dim(), "at site " + format_vector(sites[i]));
    }
  }
  while (!queue.empty()) {
    const auto i = queue.front();
    queue.pop_front();
    for (std::size_t j = 0; j < sites.size(); ++j) {
      if (!reached[j] && (sites[j] - sites[i]).norm() < cutoff_) {
        reached[j] = 1;
        queue.push_back(j);
      }
    }
  }
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (!reached[i]) {
      throw ConfigError("bond graph is disconnected: site " + format_vector(sites[i]) +
                        " has no bonded path to the host crystal");
    }
  }
}

}  // namespace ldlab
