#pragma once

#include <cstdint>
#include <cmath>
#include <random>

#include <Eigen/Core>

namespace renkf {

// SplitMix64 finalizer; used to derive independent substream keys.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Owned, splittable random stream.
///
/// A stream is identified by a 64-bit key. `split(i)` derives a child key
/// from (key, i) without touching the parent's engine state, so substreams
/// can be handed out in any order and still produce the same draws. The
/// engine is std::mt19937_64, whose output sequence is fixed by the
/// standard; normals use a Box-Muller transform implemented here so that
/// draws are bit-identical across standard library implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key), engine_(mix64(key)) {}

  std::uint64_t key() const noexcept { return key_; }

  RngStream split(std::uint64_t index) const {
    return RngStream(mix64(key_ ^ mix64(index + 0x632be59bd9b4e019ULL)));
  }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    // 53 random bits, offset by half an ulp so that 0 is never returned.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double standard_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = two_pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// rows x cols matrix of i.i.d. N(0,1), filled column by column.
  Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd z(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) z(r, c) = standard_normal();
    }
    return z;
  }

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace renkf
