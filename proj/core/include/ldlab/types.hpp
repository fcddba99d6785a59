#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace ldlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IntVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr int kMaxDim = 3;

/// Integer lattice coordinates padded to three entries; used as a hash key.
using SiteKey = std::array<std::int64_t, kMaxDim>;

struct SiteKeyHash {
  std::size_t operator()(const SiteKey& k) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (auto c : k) {
      h ^= static_cast<std::uint64_t>(c) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

inline SiteKey to_key(const IntVector& n) {
  SiteKey k{0, 0, 0};
  for (Eigen::Index i = 0; i < n.size(); ++i) k[static_cast<std::size_t>(i)] = n(i);
  return k;
}

}  // namespace ldlab
