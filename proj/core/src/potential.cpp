#include "ldlab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ldlab/error.hpp"

namespace ldlab {
namespace {

struct Bond {
  double r = 0.0;
  double y[kMaxDim] = {0.0, 0.0, 0.0};  // unit vector (ρ + g_ρ)/r
};

double reference_length(const StencilView& s, int k) {
  const double* rho = s.offset(k);
  double r2 = 0.0;
  for (int i = 0; i < s.dim; ++i) r2 += rho[i] * rho[i];
  return std::sqrt(r2);
}

Bond bond_geometry(const StencilView& s, int m, std::span<const double> g, int k) {
  if (m != s.dim) {
    throw ConfigError("potential requires range dimension m = d (got m = " + std::to_string(m) +
                      ", d = " + std::to_string(s.dim) + ")");
  }
  Bond b;
  const double* rho = s.offset(k);
  const double* gk = g.data() + static_cast<std::ptrdiff_t>(k) * m;
  double r2 = 0.0;
  for (int i = 0; i < m; ++i) {
    b.y[i] = rho[i] + gk[i];
    r2 += b.y[i] * b.y[i];
  }
  b.r = std::sqrt(r2);
  if (!(b.r > 1e-12)) {
    std::ostringstream os;
    os << "atoms coincide along stencil offset " << k << " (";
    for (int i = 0; i < m; ++i) os << (i ? ", " : "") << rho[i];
    os << ")";
    throw SingularityError(os.str());
  }
  for (int i = 0; i < m; ++i) b.y[i] /= b.r;
  return b;
}

void check_sizes(const StencilView& s, int m, std::span<const double> g) {
  if (g.size() != static_cast<std::size_t>(s.count) * static_cast<std::size_t>(m)) {
    throw ConfigError("strain tuple does not match the stencil");
  }
}

// a·ŷŷᵀ + b·(I − ŷŷᵀ) times v, accumulated into out.
void radial_block_apply(const Bond& b, int m, double a, double c, const double* v, double* out) {
  double yv = 0.0;
  for (int i = 0; i < m; ++i) yv += b.y[i] * v[i];
  for (int i = 0; i < m; ++i) out[i] += (a - c) * b.y[i] * yv + c * v[i];
}

void radial_block(const Bond& b, int m, double a, double c, Eigen::Ref<Matrix> out, Eigen::Index at) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      out(at + i, at + j) += (a - c) * b.y[i] * b.y[j] + (i == j ? c : 0.0);
    }
  }
}

}  // namespace

CutoffSpline::CutoffSpline(double r_lo, double r_hi, Kind kind) : r_lo_(r_lo), r_hi_(r_hi), kind_(kind) {
  if (!(r_lo > 0.0 && r_hi > r_lo)) throw ConfigError("cut-off spline needs 0 < r_lo < r_hi");
}

RadialValue CutoffSpline::operator()(double r) const {
  if (r <= r_lo_) return {1.0, 0.0, 0.0};
  if (r >= r_hi_) return {0.0, 0.0, 0.0};
  const double h = r_hi_ - r_lo_;
  const double t = (r - r_lo_) / h;
  if (kind_ == Kind::Cubic) {
    return {1.0 - t * t * (3.0 - 2.0 * t), 6.0 * t * (t - 1.0) / h, (12.0 * t - 6.0) / (h * h)};
  }
  const double t2 = t * t;
  return {1.0 - t2 * t * (10.0 - 15.0 * t + 6.0 * t2), -30.0 * t2 * (1.0 - t) * (1.0 - t) / h,
          -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (h * h)};
}

MorseFunction::MorseFunction(double alpha, CutoffSpline spline, double r0, double epsilon)
    : alpha_(alpha), spline_(spline), r0_(r0), epsilon_(epsilon) {
  if (!(alpha > 0.0)) throw ConfigError("Morse stiffness alpha must be positive");
}

RadialValue MorseFunction::operator()(double r) const {
  if (r >= spline_.outer()) return {};
  const double e1 = std::exp(-alpha_ * (r - r0_));
  const double e2 = e1 * e1;
  const double a = alpha_;
  const double m0 = epsilon_ * (e2 - 2.0 * e1);
  const double m1 = epsilon_ * (-2.0 * a * e2 + 2.0 * a * e1);
  const double m2 = epsilon_ * (4.0 * a * a * e2 - 2.0 * a * a * e1);
  const auto c = spline_(r);
  return {m0 * c.f, m1 * c.f + m0 * c.df, m2 * c.f + 2.0 * m1 * c.df + m0 * c.d2f};
}

HarmonicFunction::HarmonicFunction(double stiffness, double r0, double hard_cutoff)
    : k_(stiffness), r0_(r0), cutoff_(hard_cutoff) {
  if (!(hard_cutoff > 0.0)) throw ConfigError("harmonic cut-off must be positive");
}

RadialValue HarmonicFunction::operator()(double r) const {
  if (r >= cutoff_) return {};
  return {0.5 * k_ * (r - r0_) * (r - r0_), k_ * (r - r0_), k_};
}

ExponentialFunction::ExponentialFunction(double beta, CutoffSpline spline, double r0)
    : beta_(beta), spline_(spline), r0_(r0) {}

RadialValue ExponentialFunction::operator()(double r) const {
  if (r >= spline_.outer()) return {};
  const double e = std::exp(-beta_ * (r / r0_ - 1.0));
  const double k = beta_ / r0_;
  const auto c = spline_(r);
  return {e * c.f, -k * e * c.f + e * c.df, k * k * e * c.f - 2.0 * k * e * c.df + e * c.d2f};
}

void SitePotential::hessian_apply(const StencilView& s, int m, std::span<const double> g,
                                  std::span<const double> v, std::span<double> out) const {
  const auto n = static_cast<Eigen::Index>(s.count) * m;
  Matrix h = Matrix::Zero(n, n);
  hessian(s, m, g, h);
  Eigen::Map<Vector>(out.data(), n) = h * Eigen::Map<const Vector>(v.data(), n);
}

double SitePotential::energy_change(const StencilView& s, int m, std::span<const double> g) const {
  const std::vector<double> zero(g.size(), 0.0);
  return energy(s, m, g) - energy(s, m, zero);
}

double SitePotential::energy_change_gradient(const StencilView& s, int m, std::span<const double> g,
                                             std::span<double> grad) const {
  const std::vector<double> zero(g.size(), 0.0);
  return energy_gradient(s, m, g, grad) - energy(s, m, zero);
}

double eval(const SitePotential& pot, const StencilView& s, int m, std::span<const double> g) {
  return pot.energy_change(s, m, g);
}

Vector grad(const SitePotential& pot, const StencilView& s, int m, std::span<const double> g) {
  Vector out(static_cast<Eigen::Index>(g.size()));
  pot.energy_gradient(s, m, g, {out.data(), g.size()});
  return out;
}

Matrix hess(const SitePotential& pot, const StencilView& s, int m, std::span<const double> g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Matrix out = Matrix::Zero(n, n);
  pot.hessian(s, m, g, out);
  return out;
}

PairPotential::PairPotential(std::shared_ptr<const RadialFunction> phi, std::string name)
    : phi_(std::move(phi)), name_(std::move(name)) {}

double PairPotential::energy(const StencilView& s, int m, std::span<const double> g) const {
  check_sizes(s, m, g);
  double e = 0.0;
  for (int k = 0; k < s.count; ++k) e += (*phi_)(bond_geometry(s, m, g, k).r).f;
  return 0.5 * e;
}

double PairPotential::energy_gradient(const StencilView& s, int m, std::span<const double> g,
                                      std::span<double> grad) const {
  check_sizes(s, m, g);
  double e = 0.0;
  for (int k = 0; k < s.count; ++k) {
    const Bond b = bond_geometry(s, m, g, k);
    const auto p = (*phi_)(b.r);
    e += p.f;
    for (int i = 0; i < m; ++i) grad[static_cast<std::size_t>(k * m + i)] = 0.5 * p.df * b.y[i];
  }
  return 0.5 * e;
}

double PairPotential::energy_change(const StencilView& s, int m, std::span<const double> g) const {
  check_sizes(s, m, g);
  double e = 0.0;
  for (int k = 0; k < s.count; ++k) {
    e += (*phi_)(bond_geometry(s, m, g, k).r).f - (*phi_)(reference_length(s, k)).f;
  }
  return 0.5 * e;
}

double PairPotential::energy_change_gradient(const StencilView& s, int m, std::span<const double> g,
                                             std::span<double> grad) const {
  check_sizes(s, m, g);
  double e = 0.0;
  for (int k = 0; k < s.count; ++k) {
    const Bond b = bond_geometry(s, m, g, k);
    const auto p = (*phi_)(b.r);
    e += p.f - (*phi_)(reference_length(s, k)).f;
    for (int i = 0; i < m; ++i) grad[static_cast<std::size_t>(k * m + i)] = 0.5 * p.df * b.y[i];
  }
  return 0.5 * e;
}

void PairPotential::hessian(const StencilView& s, int m, std::span<const double> g,
                            Eigen::Ref<Matrix> out) const {
  check_sizes(s, m, g);
  out.setZero();
  for (int k = 0; k < s.count; ++k) {
    const Bond b = bond_geometry(s, m, g, k);
    const auto p = (*phi_)(b.r);
    radial_block(b, m, 0.5 * p.d2f, 0.5 * p.df / b.r, out, static_cast<Eigen::Index>(k) * m);
  }
}

void PairPotential::hessian_apply(const StencilView& s, int m, std::span<const double> g,
                                  std::span<const double> v, std::span<double> out) const {
  check_sizes(s, m, g);
  std::fill(out.begin(), out.end(), 0.0);
  for (int k = 0; k < s.count; ++k) {
    const Bond b = bond_geometry(s, m, g, k);
    const auto p = (*phi_)(b.r);
    radial_block_apply(b, m, 0.5 * p.d2f, 0.5 * p.df / b.r, v.data() + k * m, out.data() + k * m);
  }
}

std::shared_ptr<PairPotential> make_morse(double alpha, double r_lo, double r_hi, CutoffSpline::Kind kind,
                                          double r0, double epsilon) {
  auto phi = std::make_shared<MorseFunction>(alpha, CutoffSpline(r_lo, r_hi, kind), r0, epsilon);
  return std::make_shared<PairPotential>(std::move(phi), "morse");
}

EamPotential::EamPotential(std::shared_ptr<const RadialFunction> pair,
                           std::shared_ptr<const RadialFunction> density, double embedding_strength)
    : pair_(std::move(pair)), density_(std::move(density)), strength_(embedding_strength) {}

double EamPotential::cutoff() const { return std::max(pair_->cutoff(), density_->cutoff()); }

RadialValue EamPotential::embedding(double s) const {
  const double x = s + kDensityGuard;
  if (!(x > 0.0)) throw SingularityError("negative electron density in embedding function");
  const double q = std::sqrt(x);
  return {-strength_ * q, -0.5 * strength_ / q, 0.25 * strength_ / (q * x)};
}

double EamPotential::energy(const StencilView& s, int m, std::span<const double> g) const {
  check_sizes(s, m, g);
  double e = 0.0, rho = 0.0;
  for (int k = 0; k < s.count; ++k) {
    const double r = bond_geometry(s, m, g, k).r;
    e += (*pair_)(r).f;
    rho += (*density_)(r).f;
  }
  return 0.5 * e + embedding(rho).f;
}

double EamPotential::energy_gradient(const StencilView& s, int m, std::span<const double> g,
                                     std::span<double> grad) const {
  check_sizes(s, m, g);
  double e = 0.0, rho = 0.0;
  for (int k = 0; k < s.count; ++k) {
    const double r = bond_geometry(s, m, g, k).r;
    e += (*pair_)(r).f;
    rho += (*density_)(r).f;
  }
  const auto F = embedding(rho);
  for (int k = 0; k < s.count; ++k) {
    const Bond b = bond_geometry(s, m, g, k);
    const double c = 0.5 * (*pair_)(b.r).df + F.df * (*density_)(b.r).df;
    for (int i = 0; i < m; ++i) grad[static_cast<std::size_t>(k * m + i)] = c * b.y[i];
  }
  return 0.5 * e + F.f;
}

double EamPotential::embedding_change(double rho0, double drho) const {
  // √x − √x0 = (x − x0)/(√x + √x0)
  const double x0 = rho0 + kDensityGuard;
  const double x = x0 + drho;
  if (!(x > 0.0)) throw SingularityError("negative electron density in embedding function");
  return -strength_ * drho / (std::sqrt(x) + std::sqrt(x0));
}

double EamPotential::energy_change(const StencilView& s, int m, std::span<const double> g) const {
  check_sizes(s, m, g);
  double e = 0.0, rho0 = 0.0, drho = 0.0;
  for (int k = 0; k < s.count; ++k) {
    const double r = bond_geometry(s, m, g, k).r;
    const double r0 = reference_length(s, k);
    const double q0 = (*density_)(r0).f;
    e += (*pair_)(r).f - (*pair_)(r0).f;
    rho0 += q0;
    drho += (*density_)(r).f - q0;
  }
  return 0.5 * e + embedding_change(rho0, drho);
}

double EamPotential::energy_change_gradient(const StencilView& s, int m, std::span<const double> g,
                                            std::span<double> grad) const {
  check_sizes(s, m, g);
  double e = 0.0, rho0 = 0.0, drho = 0.0;
  for (int k = 0; k < s.count; ++k) {
    const double r = bond_geometry(s, m, g, k).r;
    const double r0 = reference_length(s, k);
    const double q0 = (*density_)(r0).f;
    e += (*pair_)(r).f - (*pair_)(r0).f;
    rho0 += q0;
    drho += (*density_)(r).f - q0;
  }
  const auto F = embedding(rho0 + drho);
  for (int k = 0; k < s.count; ++k) {
    const Bond b = bond_geometry(s, m, g, k);
    const double c = 0.5 * (*pair_)(b.r).df + F.df * (*density_)(b.r).df;
    for (int i = 0; i < m; ++i) grad[static_cast<std::size_t>(k * m + i)] = c * b.y[i];
  }
  return 0.5 * e + embedding_change(rho0, drho);
}

void EamPotential::hessian(const StencilView& s, int m, std::span<const double> g,
                           Eigen::Ref<Matrix> out) const {
  check_sizes(s, m, g);
  out.setZero();
  double rho = 0.0;
  for (int k = 0; k < s.count; ++k) rho += (*density_)(bond_geometry(s, m, g, k).r).f;
  const auto F = embedding(rho);
  const auto n = static_cast<Eigen::Index>(s.count) * m;
  Vector w(n);
  for (int k = 0; k < s.count; ++k) {
    const Bond b = bond_geometry(s, m, g, k);
    const auto p = (*pair_)(b.r);
    const auto q = (*density_)(b.r);
    radial_block(b, m, 0.5 * p.d2f + F.df * q.d2f, (0.5 * p.df + F.df * q.df) / b.r, out,
                 static_cast<Eigen::Index>(k) * m);
    for (int i = 0; i < m; ++i) w(k * m + i) = q.df * b.y[i];
  }
  out.noalias() += F.d2f * w * w.transpose();
}

void EamPotential::hessian_apply(const StencilView& s, int m, std::span<const double> g,
                                 std::span<const double> v, std::span<double> out) const {
  check_sizes(s, m, g);
  std::fill(out.begin(), out.end(), 0.0);
  double rho = 0.0;
  for (int k = 0; k < s.count; ++k) rho += (*density_)(bond_geometry(s, m, g, k).r).f;
  const auto F = embedding(rho);
  double wv = 0.0;
  thread_local std::vector<double> w;
  w.resize(out.size());
  for (int k = 0; k < s.count; ++k) {
    const Bond b = bond_geometry(s, m, g, k);
    const auto p = (*pair_)(b.r);
    const auto q = (*density_)(b.r);
    radial_block_apply(b, m, 0.5 * p.d2f + F.df * q.d2f, (0.5 * p.df + F.df * q.df) / b.r,
                       v.data() + k * m, out.data() + k * m);
    for (int i = 0; i < m; ++i) {
      w[static_cast<std::size_t>(k * m + i)] = q.df * b.y[i];
      wv += q.df * b.y[i] * v[static_cast<std::size_t>(k * m + i)];
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += F.d2f * wv * w[i];
}

double LaplacianPotential::energy(const StencilView& s, int m, std::span<const double> g) const {
  check_sizes(s, m, g);
  double e = 0.0;
  for (double x : g) e += x * x;
  return 0.5 * kappa_ * e;
}

double LaplacianPotential::energy_gradient(const StencilView& s, int m, std::span<const double> g,
                                           std::span<double> grad) const {
  check_sizes(s, m, g);
  double e = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    e += g[i] * g[i];
    grad[i] = kappa_ * g[i];
  }
  return 0.5 * kappa_ * e;
}

double LaplacianPotential::energy_change(const StencilView& s, int m, std::span<const double> g) const {
  return energy(s, m, g);
}

double LaplacianPotential::energy_change_gradient(const StencilView& s, int m, std::span<const double> g,
                                                  std::span<double> grad) const {
  return energy_gradient(s, m, g, grad);
}

void LaplacianPotential::hessian(const StencilView& s, int m, std::span<const double> g,
                                 Eigen::Ref<Matrix> out) const {
  check_sizes(s, m, g);
  out.setZero();
  out.diagonal().setConstant(kappa_);
}

void LaplacianPotential::hessian_apply(const StencilView& s, int m, std::span<const double> g,
                                       std::span<const double> v, std::span<double> out) const {
  check_sizes(s, m, g);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = kappa_ * v[i];
}

double LinearizedPotential::energy(const StencilView& s, int m, std::span<const double> g) const {
  const std::vector<double> zero(g.size(), 0.0);
  const Vector g0 = grad(*base_, s, m, zero);
  const Matrix h0 = hess(*base_, s, m, zero);
  const Eigen::Map<const Vector> x(g.data(), static_cast<Eigen::Index>(g.size()));
  return g0.dot(x) + 0.5 * x.dot(h0 * x);
}

double LinearizedPotential::energy_gradient(const StencilView& s, int m, std::span<const double> g,
                                            std::span<double> out) const {
  const std::vector<double> zero(g.size(), 0.0);
  const Vector g0 = grad(*base_, s, m, zero);
  const Matrix h0 = hess(*base_, s, m, zero);
  const Eigen::Map<const Vector> x(g.data(), static_cast<Eigen::Index>(g.size()));
  const Vector hx = h0 * x;
  Eigen::Map<Vector>(out.data(), static_cast<Eigen::Index>(out.size())) = g0 + hx;
  return g0.dot(x) + 0.5 * x.dot(hx);
}

double LinearizedPotential::energy_change(const StencilView& s, int m, std::span<const double> g) const {
  return energy(s, m, g);
}

double LinearizedPotential::energy_change_gradient(const StencilView& s, int m, std::span<const double> g,
                                                   std::span<double> grad) const {
  return energy_gradient(s, m, g, grad);
}

void LinearizedPotential::hessian(const StencilView& s, int m, std::span<const double> g,
                                  Eigen::Ref<Matrix> out) const {
  const std::vector<double> zero(g.size(), 0.0);
  base_->hessian(s, m, zero, out);
}

}  // namespace ldlab
