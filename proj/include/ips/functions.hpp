#ifndef IPS_FUNCTIONS_HPP
#define IPS_FUNCTIONS_HPP

// Scalar kernels shared by the entropy functionals and the inequality checks.

#include <cmath>

namespace ips {

/// x log x with 0 log 0 = 0.
template <typename T>
T xlogx(T x) {
  using std::log;
  return x == T(0) ? T(0) : x * log(x);
}

/// F(x) = x log x - x + 1, x >= 0.
template <typename T>
T F(T x) {
  return xlogx(x) - x + T(1);
}

/// Lower bound (1 - sqrt x)^2 / 2 for F.
template <typename T>
T F_lower(T x) {
  using std::sqrt;
  const T r = T(1) - sqrt(x);
  return r * r / T(2);
}

/// Phi(u, v) = (sqrt(u / c) - sqrt(v / d))^2 for fixed masses c, d > 0.
template <typename T>
T Phi(T u, T v, T c, T d) {
  using std::sqrt;
  const T r = sqrt(u / c) - sqrt(v / d);
  return r * r;
}

}  // namespace ips

#endif  // IPS_FUNCTIONS_HPP
