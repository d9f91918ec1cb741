#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "vpn/error.hpp"

namespace vpn {

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline double dot(std::span<const float> a, std::span<const float> b) {
  require(a.size() == b.size(), ErrorCode::shape, "dot: dimension mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

inline double norm(std::span<const float> a) { return std::sqrt(dot(a, a)); }

inline double cosine(std::span<const float> a, std::span<const float> b) {
  const double na = norm(a), nb = norm(b);
  if (na == 0 || nb == 0) return 0.0;
  return dot(a, b) / (na * nb);
}

/// Scales `v` to unit length. Returns false and leaves `v` untouched when
/// its norm is zero.
inline bool normalize(std::span<float> v) {
  const double n = norm(v);
  if (!(n > 0) || !std::isfinite(n)) return false;
  for (float& x : v) x = static_cast<float>(x / n);
  return true;
}

/// A seeded random matrix with orthonormal rows (rows <= cols) or orthonormal
/// columns (rows > cols). Deterministic for a given (seed, rows, cols) and
/// cached, since encoders request the same projection for every frame.
inline std::shared_ptr<const RowMatrixD> random_orthonormal(std::uint64_t seed, int rows, int cols) {
  static std::mutex mu;
  static std::map<std::tuple<std::uint64_t, int, int>, std::shared_ptr<const RowMatrixD>> cache;
  require(rows > 0 && cols > 0, ErrorCode::parameter, "projection dimensions must be positive");
  std::lock_guard lock(mu);
  auto& slot = cache[{seed, rows, cols}];
  if (slot) return slot;

  const int tall = std::max(rows, cols), thin = std::min(rows, cols);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(tall, thin);
  for (int j = 0; j < thin; ++j)
    for (int i = 0; i < tall; ++i) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, thin);
  auto m = std::make_shared<RowMatrixD>(rows, cols);
  if (rows >= cols)
    *m = q;
  else
    *m = q.transpose();
  slot = std::move(m);
  return slot;
}

}  // namespace vpn
