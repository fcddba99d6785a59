#include "ldlab/fourier.hpp"

#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include <Eigen/LU>

#include "ldlab/error.hpp"

namespace ldlab {
namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

SmithForm smith_normal_form(const IntMatrix& p) {
  const auto d = p.rows();
  IntMatrix a = p;
  IntMatrix u = IntMatrix::Identity(d, d);
  IntMatrix v = IntMatrix::Identity(d, d);
  for (Eigen::Index t = 0; t < d; ++t) {
    while (true) {
      // Smallest nonzero pivot of the trailing block goes to (t, t).
      Eigen::Index pi = -1, pj = -1;
      for (Eigen::Index i = t; i < d; ++i) {
        for (Eigen::Index j = t; j < d; ++j) {
          if (a(i, j) != 0 && (pi < 0 || std::abs(a(i, j)) < std::abs(a(pi, pj)))) {
            pi = i;
            pj = j;
          }
        }
      }
      if (pi < 0) throw ConfigError("period matrix is singular");
      a.row(t).swap(a.row(pi));
      u.row(t).swap(u.row(pi));
      a.col(t).swap(a.col(pj));
      v.col(t).swap(v.col(pj));

      bool clean = true;
      for (Eigen::Index i = t + 1; i < d; ++i) {
        const std::int64_t q = floor_div(a(i, t), a(t, t));
        a.row(i) -= q * a.row(t);
        u.row(i) -= q * u.row(t);
        clean = clean && a(i, t) == 0;
      }
      for (Eigen::Index j = t + 1; j < d; ++j) {
        const std::int64_t q = floor_div(a(t, j), a(t, t));
        a.col(j) -= q * a.col(t);
        v.col(j) -= q * v.col(t);
        clean = clean && a(t, j) == 0;
      }
      if (!clean) continue;
      // Divisibility of the trailing block by the pivot.
      Eigen::Index bad = -1;
      for (Eigen::Index i = t + 1; i < d && bad < 0; ++i) {
        for (Eigen::Index j = t + 1; j < d; ++j) {
          if (a(i, j) % a(t, t) != 0) {
            bad = i;
            break;
          }
        }
      }
      if (bad < 0) break;
      a.row(t) += a.row(bad);
      u.row(t) += u.row(bad);
    }
    if (a(t, t) < 0) {
      a.row(t) *= -1;
      u.row(t) *= -1;
    }
  }
  return {u, v, a.diagonal()};
}

struct FourierGrid::Plans {
  fftw_complex* buffer = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::mutex mutex;
};

FourierGrid::FourierGrid(const Matrix& basis, const IntMatrix& period) {
  const auto d = period.rows();
  const SmithForm snf = smith_normal_form(period);
  u_ = snf.U;
  shape_.resize(static_cast<std::size_t>(d));
  size_ = 1;
  for (Eigen::Index i = 0; i < d; ++i) {
    shape_[static_cast<std::size_t>(i)] = static_cast<int>(snf.diagonal(i));
    size_ *= static_cast<std::size_t>(snf.diagonal(i));
  }
  Vector inv_s(d);
  for (Eigen::Index i = 0; i < d; ++i) inv_s(i) = 1.0 / static_cast<double>(snf.diagonal(i));
  recip_ = 2.0 * std::numbers::pi * basis.inverse().transpose() * u_.cast<double>().transpose() *
           inv_s.asDiagonal();

  plans_ = std::make_unique<Plans>();
  std::lock_guard lock(planner_mutex());
  plans_->buffer = fftw_alloc_complex(size_);
  plans_->forward = fftw_plan_dft(static_cast<int>(d), shape_.data(), plans_->buffer, plans_->buffer,
                                  FFTW_FORWARD, FFTW_ESTIMATE);
  plans_->backward = fftw_plan_dft(static_cast<int>(d), shape_.data(), plans_->buffer, plans_->buffer,
                                   FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!plans_->forward || !plans_->backward) throw NumericalError("FFTW planning failed");
}

FourierGrid::~FourierGrid() {
  if (!plans_) return;
  std::lock_guard lock(planner_mutex());
  if (plans_->forward) fftw_destroy_plan(plans_->forward);
  if (plans_->backward) fftw_destroy_plan(plans_->backward);
  if (plans_->buffer) fftw_free(plans_->buffer);
}

std::size_t FourierGrid::slot(const IntVector& n) const {
  const IntVector t = u_ * n;
  std::size_t s = 0;
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    std::int64_t r = t(static_cast<Eigen::Index>(i)) % shape_[i];
    if (r < 0) r += shape_[i];
    s = s * static_cast<std::size_t>(shape_[i]) + static_cast<std::size_t>(r);
  }
  return s;
}

Vector FourierGrid::wavevector(std::size_t j) const {
  const auto d = static_cast<Eigen::Index>(shape_.size());
  Vector idx(d);
  for (Eigen::Index i = d - 1; i >= 0; --i) {
    const auto s = static_cast<std::size_t>(shape_[static_cast<std::size_t>(i)]);
    idx(i) = static_cast<double>(j % s);
    j /= s;
  }
  return recip_ * idx;
}

void FourierGrid::execute(std::vector<Complex>& data, bool fwd) const {
  if (data.size() != size_) throw ConfigError("FFT input has wrong size");
  std::lock_guard lock(plans_->mutex);
  std::memcpy(plans_->buffer, data.data(), size_ * sizeof(fftw_complex));
  fftw_execute(fwd ? plans_->forward : plans_->backward);
  std::memcpy(static_cast<void*>(data.data()), plans_->buffer, size_ * sizeof(fftw_complex));
}

void FourierGrid::forward(std::vector<Complex>& data) const { execute(data, true); }
void FourierGrid::backward(std::vector<Complex>& data) const { execute(data, false); }

}  // namespace ldlab
