#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ldlab/lattice.hpp"
#include "ldlab/types.hpp"

namespace ldlab {

/// Value and first two derivatives of a radial function.
struct RadialValue {
  double f = 0.0;
  double df = 0.0;
  double d2f = 0.0;
};

/// Polynomial bridge from 1 at r_lo to 0 at r_hi with vanishing slopes.
/// The cubic variant (Hermite) gives a C¹ product with the pair function;
/// the quintic one is C².
class CutoffSpline {
 public:
  enum class Kind { Cubic, Quintic };

  CutoffSpline() = default;
  CutoffSpline(double r_lo, double r_hi, Kind kind = Kind::Cubic);

  RadialValue operator()(double r) const;
  double inner() const { return r_lo_; }
  double outer() const { return r_hi_; }
  Kind kind() const { return kind_; }

 private:
  double r_lo_ = 0.0;
  double r_hi_ = 0.0;
  Kind kind_ = Kind::Cubic;
};

class RadialFunction {
 public:
  virtual ~RadialFunction() = default;
  virtual RadialValue operator()(double r) const = 0;
  /// Radius beyond which the function is identically zero.
  virtual double cutoff() const = 0;
};

/// φ(r) = ε·(e^{−2α(r−r0)} − 2e^{−α(r−r0)})·φ_cut(r).
class MorseFunction final : public RadialFunction {
 public:
  MorseFunction(double alpha, CutoffSpline spline, double r0 = 1.0, double epsilon = 1.0);
  RadialValue operator()(double r) const override;
  double cutoff() const override { return spline_.outer(); }
  double alpha() const { return alpha_; }
  const CutoffSpline& spline() const { return spline_; }

 private:
  double alpha_;
  CutoffSpline spline_;
  double r0_;
  double epsilon_;
};

/// φ(r) = ½k(r − r0)² inside a hard cut-off, 0 beyond it.
class HarmonicFunction final : public RadialFunction {
 public:
  HarmonicFunction(double stiffness, double r0, double hard_cutoff);
  RadialValue operator()(double r) const override;
  double cutoff() const override { return cutoff_; }

 private:
  double k_;
  double r0_;
  double cutoff_;
};

/// ψ(r) = e^{−β(r/r0 − 1)}·φ_cut(r).
class ExponentialFunction final : public RadialFunction {
 public:
  ExponentialFunction(double beta, CutoffSpline spline, double r0 = 1.0);
  RadialValue operator()(double r) const override;
  double cutoff() const override { return spline_.outer(); }

 private:
  double beta_;
  CutoffSpline spline_;
  double r0_;
};

/// Geometry of one site's interaction range as seen by a site potential.
struct StencilView {
  int dim = 0;
  int count = 0;
  const double* offsets = nullptr;  ///< count × dim

  StencilView() = default;
  StencilView(const Stencil& s) : dim(s.dim), count(s.count), offsets(s.offsets.data()) {}
  const double* offset(int k) const { return offsets + static_cast<std::ptrdiff_t>(k) * dim; }
};

/// Site energy Ṽ of a deformed stencil, a function of the strain tuple
/// g = (g_ρ)_{ρ ∈ R_ℓ}, each g_ρ ∈ R^m, laid out as count × m.
///
/// energy() is the raw Ṽ; energy_change() is the renormalised V(g) = Ṽ(g) − Ṽ(0).
class SitePotential {
 public:
  virtual ~SitePotential() = default;
  virtual std::string name() const = 0;

  /// Required range dimension; 0 when any m is accepted.
  virtual int required_range_dim(int dim) const { return dim; }
  /// Radius beyond which bonds carry no energy; 0 when bond geometry is irrelevant.
  virtual double cutoff() const = 0;
  /// True when ∇²Ṽ couples only g_ρ with itself (pair-type potentials).
  virtual bool block_diagonal() const = 0;

  virtual double energy(const StencilView& s, int m, std::span<const double> g) const = 0;
  /// Returns the energy and writes ∂Ṽ/∂g into grad (count × m).
  virtual double energy_gradient(const StencilView& s, int m, std::span<const double> g,
                                 std::span<double> grad) const = 0;
  /// Ṽ(g) − Ṽ(0). The default subtracts the totals; overrides avoid the cancellation.
  virtual double energy_change(const StencilView& s, int m, std::span<const double> g) const;
  /// Same, with ∂Ṽ/∂g written into grad.
  virtual double energy_change_gradient(const StencilView& s, int m, std::span<const double> g,
                                        std::span<double> grad) const;
  /// Dense Hessian over (ρ, i) × (σ, j), size count·m square.
  virtual void hessian(const StencilView& s, int m, std::span<const double> g,
                       Eigen::Ref<Matrix> out) const = 0;
  /// out = ∇²Ṽ(g)·v. The default forms the dense Hessian.
  virtual void hessian_apply(const StencilView& s, int m, std::span<const double> g,
                             std::span<const double> v, std::span<double> out) const;
};

/// Renormalised site energy V_ℓ(g) = Ṽ(g) − Ṽ(0).
double eval(const SitePotential& pot, const StencilView& s, int m, std::span<const double> g);
Vector grad(const SitePotential& pot, const StencilView& s, int m, std::span<const double> g);
Matrix hess(const SitePotential& pot, const StencilView& s, int m, std::span<const double> g);

/// Ṽ(g) = ½ Σ_ρ φ(|ρ + g_ρ|).
class PairPotential final : public SitePotential {
 public:
  explicit PairPotential(std::shared_ptr<const RadialFunction> phi, std::string name = "pair");
  std::string name() const override { return name_; }
  double cutoff() const override { return phi_->cutoff(); }
  bool block_diagonal() const override { return true; }
  const RadialFunction& radial() const { return *phi_; }

  double energy(const StencilView& s, int m, std::span<const double> g) const override;
  double energy_gradient(const StencilView& s, int m, std::span<const double> g,
                         std::span<double> grad) const override;
  double energy_change(const StencilView& s, int m, std::span<const double> g) const override;
  double energy_change_gradient(const StencilView& s, int m, std::span<const double> g,
                                std::span<double> grad) const override;
  void hessian(const StencilView& s, int m, std::span<const double> g, Eigen::Ref<Matrix> out) const override;
  void hessian_apply(const StencilView& s, int m, std::span<const double> g,
                     std::span<const double> v, std::span<double> out) const override;

 private:
  std::shared_ptr<const RadialFunction> phi_;
  std::string name_;
};

/// Morse pair potential with spline cut-off.
std::shared_ptr<PairPotential> make_morse(double alpha, double r_lo, double r_hi,
                                          CutoffSpline::Kind kind = CutoffSpline::Kind::Cubic,
                                          double r0 = 1.0, double epsilon = 1.0);

/// Finnis–Sinclair / EAM: Ṽ = ½Σφ(r_ρ) + F(Σψ(r_ρ)), F(s) = −A·√(s + ε_F).
class EamPotential final : public SitePotential {
 public:
  static constexpr double kDensityGuard = 1e-30;

  EamPotential(std::shared_ptr<const RadialFunction> pair, std::shared_ptr<const RadialFunction> density,
               double embedding_strength);
  std::string name() const override { return "eam"; }
  double cutoff() const override;
  bool block_diagonal() const override { return false; }

  /// F, F', F'' at density s.
  RadialValue embedding(double s) const;
  /// F(ρ0 + Δρ) − F(ρ0) without cancellation.
  double embedding_change(double rho0, double drho) const;

  double energy(const StencilView& s, int m, std::span<const double> g) const override;
  double energy_gradient(const StencilView& s, int m, std::span<const double> g,
                         std::span<double> grad) const override;
  double energy_change(const StencilView& s, int m, std::span<const double> g) const override;
  double energy_change_gradient(const StencilView& s, int m, std::span<const double> g,
                                std::span<double> grad) const override;
  void hessian(const StencilView& s, int m, std::span<const double> g, Eigen::Ref<Matrix> out) const override;
  void hessian_apply(const StencilView& s, int m, std::span<const double> g,
                     std::span<const double> v, std::span<double> out) const override;

 private:
  std::shared_ptr<const RadialFunction> pair_;
  std::shared_ptr<const RadialFunction> density_;
  double strength_;
};

/// Scalar or vector quadratic bonds Ṽ(g) = ½κ Σ_ρ |g_ρ|², independent of geometry.
/// With κ = 1 the phonon symbol is Σ_ρ 2(1 − cos k·ρ).
class LaplacianPotential final : public SitePotential {
 public:
  explicit LaplacianPotential(double stiffness = 1.0) : kappa_(stiffness) {}
  std::string name() const override { return "laplacian"; }
  int required_range_dim(int) const override { return 0; }
  double cutoff() const override { return 0.0; }
  bool block_diagonal() const override { return true; }

  double energy(const StencilView& s, int m, std::span<const double> g) const override;
  double energy_gradient(const StencilView& s, int m, std::span<const double> g,
                         std::span<double> grad) const override;
  double energy_change(const StencilView& s, int m, std::span<const double> g) const override;
  double energy_change_gradient(const StencilView& s, int m, std::span<const double> g,
                                std::span<double> grad) const override;
  void hessian(const StencilView& s, int m, std::span<const double> g, Eigen::Ref<Matrix> out) const override;
  void hessian_apply(const StencilView& s, int m, std::span<const double> g,
                     std::span<const double> v, std::span<double> out) const override;

 private:
  double kappa_;
};

/// Second-order Taylor expansion of another potential about g = 0:
/// Ṽ(g) = ∇V(0)·g + ½ ∇²V(0)[g, g]. Exactly quadratic.
class LinearizedPotential final : public SitePotential {
 public:
  explicit LinearizedPotential(std::shared_ptr<const SitePotential> base) : base_(std::move(base)) {}
  std::string name() const override { return "linearized-" + base_->name(); }
  int required_range_dim(int dim) const override { return base_->required_range_dim(dim); }
  double cutoff() const override { return base_->cutoff(); }
  bool block_diagonal() const override { return base_->block_diagonal(); }

  double energy(const StencilView& s, int m, std::span<const double> g) const override;
  double energy_gradient(const StencilView& s, int m, std::span<const double> g,
                         std::span<double> grad) const override;
  double energy_change(const StencilView& s, int m, std::span<const double> g) const override;
  double energy_change_gradient(const StencilView& s, int m, std::span<const double> g,
                                std::span<double> grad) const override;
  void hessian(const StencilView& s, int m, std::span<const double> g, Eigen::Ref<Matrix> out) const override;

 private:
  std::shared_ptr<const SitePotential> base_;
};

/// Result of the equilibrium lattice-parameter search.
struct LatticeParameter {
  double a0 = 0.0;
  double energy_per_site = 0.0;  ///< unrenormalised Ṽ of the homogeneous stencil at a0
};

/// Per-site energy of the homogeneous lattice a·unit_basis, stencil radius = pot.cutoff().
double homogeneous_site_energy(const SitePotential& pot, const Matrix& unit_basis, double a);
/// d/da of the above (virial).
double homogeneous_site_energy_derivative(const SitePotential& pot, const Matrix& unit_basis, double a);

/// Minimises the homogeneous per-site energy over uniform scaling. Scans
/// [scan_lo, scan_hi] for a bracket, then refines the root of the virial to
/// relative tolerance 1e-12. Throws NumericalError when no bracket exists.
LatticeParameter find_lattice_parameter(const SitePotential& pot, const Matrix& unit_basis,
                                        double scan_lo = 0.5, double scan_hi = 2.0,
                                        int scan_points = 301);

}  // namespace ldlab
