#pragma once

#include <random>

#include "renkf/psd_stats.hpp"

namespace renkf::testing {

// Random SPD-ish matrix G G^T / d (+ jitter), deterministic in `seed`.
inline Matrix random_psd(Eigen::Index d, std::uint64_t seed, double jitter = 0.0, Eigen::Index rank = -1) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const Eigen::Index r = rank < 0 ? d : rank;
  Matrix g(d, r);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = nd(gen);
  Matrix q = g * g.transpose() / static_cast<double>(d);
  q = 0.5 * (q + q.transpose());
  q.diagonal().array() += jitter;
  return q;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
  return m;
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace renkf::testing
