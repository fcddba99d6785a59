#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "ldlab/types.hpp"

namespace ldlab {

/// Smith normal form U·P·V = diag(s) of a square integer matrix; U, V unimodular.
struct SmithForm {
  IntMatrix U;
  IntMatrix V;
  IntVector diagonal;
};
SmithForm smith_normal_form(const IntMatrix& p);

/// Discrete Fourier transform over the finite group Z^d / P·Z^d, where
/// P = 2N·M is the period of a supercell in lattice coordinates.
///
/// Lattice point n sits at grid slot (U·n) mod s (row-major), and grid
/// index j corresponds to the Cartesian wavevector k = 2π A^{-T} U^T (j / s).
/// forward() computes Σ_n f(n) e^{-ik·x_n}; backward() the unnormalised
/// inverse Σ_k F(k) e^{+ik·x_n}. Not safe for concurrent use of one object.
class FourierGrid {
 public:
  using Complex = std::complex<double>;

  FourierGrid(const Matrix& basis, const IntMatrix& period);
  ~FourierGrid();
  FourierGrid(const FourierGrid&) = delete;
  FourierGrid& operator=(const FourierGrid&) = delete;

  int dim() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return size_; }
  const std::vector<int>& shape() const { return shape_; }

  std::size_t slot(const IntVector& n) const;
  /// Wavevector of grid slot j (Cartesian units).
  Vector wavevector(std::size_t j) const;

  void forward(std::vector<Complex>& data) const;
  void backward(std::vector<Complex>& data) const;

 private:
  void execute(std::vector<Complex>& data, bool forward) const;

  Matrix recip_;  // 2π A^{-T} U^T diag(1/s)
  IntMatrix u_;
  std::vector<int> shape_;
  std::size_t size_ = 0;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

}  // namespace ldlab
