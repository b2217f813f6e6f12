#ifndef IPS_SEQUENCE_HPP
#define IPS_SEQUENCE_HPP

// The growth bound delta_n >= C n^{1-d} (sum_{k<=n} delta_k)^2: nonzero
// solutions exist iff d >= 3. Tools for both sides of the dichotomy and the
// shell sequence alpha_n(x) showing the bound alone cannot decide d >= 3.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ips {

/// delta_n - C n^{1-d} S_n^2, S_n the prefix sum through n.
template <typename T>
T growth_slack(T delta_n, T prefix, T C, std::int64_t n, int d) {
  using std::pow;
  return delta_n - C * pow(static_cast<T>(n), static_cast<T>(1 - d)) * prefix * prefix;
}

struct GrowthCheck {
  double C = 1.0;
  int d = 1;
  std::vector<double> delta;  ///< delta_1..delta_N
  std::vector<double> slack;  ///< slack[n-1] for index n

  std::size_t N() const { return delta.size(); }
  /// First index n with slack below -tol * scale, scale the larger side of the bound.
  std::optional<std::size_t> first_violation(double rel_tol = 1e-12) const;

 private:
  friend GrowthCheck growth_check(double, int, std::vector<double>);
  std::vector<double> rhs_;
};

/// Throws InvalidArgument on negative entries or C <= 0.
GrowthCheck growth_check(double C, int d, std::vector<double> delta);

/// a* = 1 / (C S^2), S = zeta(d - 1), enclosed by partial sums through N plus
/// the integral tail bounds int_{N+1}^inf <= tail <= int_N^inf and a bound on
/// summation rounding. N doubles until the enclosure of a* is narrower than `tail_tol`.
struct AmplitudeEnclosure {
  double lower = 0.0;  ///< certified admissible amplitude
  double upper = 0.0;
  double S_lower = 0.0;
  double S_upper = 0.0;
  std::uint64_t N = 0;

  double width() const { return upper - lower; }
};

AmplitudeEnclosure max_admissible_amplitude(double C, int d, std::uint64_t N = 1000, double tail_tol = 1e-9);

enum class VanishingOutcome { pass, bound_violation, contradiction };

struct VanishingResult {
  VanishingOutcome outcome = VanishingOutcome::pass;
  std::size_t violation_index = 0;  ///< bound_violation: index n where the bound fails
  double violation_slack = 0.0;
  std::size_t m = 0;                ///< contradiction: first index with delta_m > 0
  double threshold = 0.0;           ///< C^{-1} / S_m
  /// Smallest N' with sum_{n=m+1}^{N'} n^{1-d} > threshold, when it was
  /// enumerated (always for d = 1, up to `N` for d = 2).
  std::optional<double> contradiction_index;
  /// Analytic upper bound on N' (d = 2: ceil((m+1) e^threshold)) and its log.
  double index_bound = 0.0;
  double log_index_bound = 0.0;
};

std::string to_string(VanishingOutcome o);

/// d in {1, 2}. The bound is checked on the given entries first; a failure
/// there is a bound violation. Otherwise the telescoped sum shows it must fail
/// by index N'.
VanishingResult verify_vanishing(double C, int d, const std::vector<double>& delta, std::uint64_t N);

nlohmann::json to_json(const VanishingResult& r);

/// |Lambda_k \ Lambda_{k-1}| with the origin counted in shell 1: 3^d for
/// k = 1, (2k+1)^d - (2k-1)^d after.
double shell_size(int d, std::int64_t k);

struct ShellRow {
  std::int64_t k = 0;
  double count = 0.0;
  double value = 0.0;  ///< alpha_n(x) = a k^{2-2d} on shell k
};

struct Counterexample {
  int d = 0;
  double a = 0.0;
  std::int64_t n = 0;
  double c_d = 0.0;  ///< max_k |shell_k| / k^{d-1}, k <= n
  std::vector<ShellRow> rows;
  double sum_alpha = 0.0;       ///< sum over Lambda_n
  double sum_bound = 0.0;       ///< c(d) a sum_{k<=n} k^{1-d}
  double boundary_sum = 0.0;    ///< sum over the outer shell of sqrt(alpha_n)
  double boundary_bound = 0.0;  ///< c(d) sqrt(a)
  bool monotone = false;
  bool sums_ok = false;

  bool passed() const { return monotone && sums_ok; }
};

/// alpha_n(x) for x on shell k: a k^{2-2d} if k <= n, else 0.
double shell_alpha(double a, int d, std::int64_t k, std::int64_t n);

/// d >= 3, a >= 0.
Counterexample counterexample_alpha(int d, double a, std::int64_t n);

inline constexpr const char* kShellSchema = "# ips-shells v1";
std::string shell_csv(const Counterexample& c);
nlohmann::json to_json(const Counterexample& c);
nlohmann::json to_json(const AmplitudeEnclosure& e);

}  // namespace ips

#endif  // IPS_SEQUENCE_HPP
