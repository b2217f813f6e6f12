#ifndef IPS_RANDOM_HPP
#define IPS_RANDOM_HPP

// Counter-based random numbers (Philox4x32-10) and the samplers built on them.
// A stream is a (key, counter) pair, so draws are reproducible from the
// recorded seed regardless of scheduling.

#include <array>
#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace ips {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

constexpr Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key) {
  constexpr std::uint32_t kMulA = 0xD2511F53;
  constexpr std::uint32_t kMulB = 0xCD9E8D57;
  constexpr std::uint32_t kWeylA = 0x9E3779B9;
  constexpr std::uint32_t kWeylB = 0xBB67AE85;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kMulA} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMulB} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeylA;
    key[1] += kWeylB;
  }
  return ctr;
}

/// Uniform in (0, 1) from 53 random bits; never returns 0 or 1.
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Sequential draws from the stream keyed by `seed`, with `stream` selecting
/// an independent substream (trajectory index, trial number, ...).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  /// Block of four words at an explicit position of the stream.
  Philox4x32Counter block(std::uint64_t position) const {
    return philox4x32({static_cast<std::uint32_t>(position), static_cast<std::uint32_t>(position >> 32),
                       static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                      key_);
  }

  double uniform() {
    if (used_ == 2) {
      buffer_ = block(position_++);
      used_ = 0;
    }
    const double u = to_open_unit(buffer_[2 * used_], buffer_[2 * used_ + 1]);
    ++used_;
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double exponential() { return -std::log(uniform()); }
  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  /// Dirichlet(1, ..., 1) sample of length n: normalized exponentials.
  Eigen::VectorXd dirichlet(Eigen::Index n) {
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = exponential();
    return w / w.sum();
  }

  std::uint64_t position() const { return position_; }

 private:
  Philox4x32Key key_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  Philox4x32Counter buffer_{};
  int used_ = 2;
};

}  // namespace ips

#endif  // IPS_RANDOM_HPP
