#include "ips/sequence.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "ips/error.hpp"
#include "ips/io.hpp"

namespace ips {

std::optional<std::size_t> GrowthCheck::first_violation(double rel_tol) const {
  for (std::size_t i = 0; i < slack.size(); ++i)
    if (slack[i] < -rel_tol * std::max(delta[i], rhs_[i])) return i + 1;
  return std::nullopt;
}

GrowthCheck growth_check(double C, int d, std::vector<double> delta) {
  if (!(C > 0.0)) throw InvalidArgument("C must be positive");
  if (d < 1) throw InvalidArgument("dimension must be positive");
  GrowthCheck g;
  g.C = C;
  g.d = d;
  g.slack.reserve(delta.size());
  g.rhs_.reserve(delta.size());
  double prefix = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    if (!(delta[i] >= 0.0)) throw InvalidArgument("sequence entry " + std::to_string(i + 1) + " is negative");
    prefix += delta[i];
    const double s = growth_slack(delta[i], prefix, C, static_cast<std::int64_t>(i + 1), d);
    g.slack.push_back(s);
    g.rhs_.push_back(delta[i] - s);
  }
  g.delta = std::move(delta);
  return g;
}

namespace {

// Partial sum of k^{-p}, k = 1..N, summed smallest first, with an absolute
// bound on the accumulated rounding.
std::pair<double, double> partial_zeta(int p, std::uint64_t N) {
  double s = 0.0;
  for (std::uint64_t k = N; k >= 1; --k) s += std::pow(static_cast<double>(k), -p);
  const double err = 2.0 * static_cast<double>(N) * std::numeric_limits<double>::epsilon() * s;
  return {s, err};
}

}  // namespace

AmplitudeEnclosure max_admissible_amplitude(double C, int d, std::uint64_t N, double tail_tol) {
  if (d < 3) throw InvalidArgument("the amplitude a* exists only for d >= 3");
  if (!(C > 0.0)) throw InvalidArgument("C must be positive");
  if (N < 1) N = 1;
  const int p = d - 1;
  AmplitudeEnclosure e;
  for (;;) {
    const auto [s, err] = partial_zeta(p, N);
    const double n = static_cast<double>(N);
    const double tail_lo = std::pow(n + 1.0, 1 - p) / (p - 1);
    const double tail_hi = std::pow(n, 1 - p) / (p - 1);
    e.S_lower = s + tail_lo - err;
    e.S_upper = s + tail_hi + err;
    e.N = N;
    e.lower = 1.0 / (C * e.S_upper * e.S_upper);
    e.upper = 1.0 / (C * e.S_lower * e.S_lower);
    // widen by one ulp per operation
    e.lower = std::nextafter(std::nextafter(e.lower, 0.0), 0.0);
    e.upper = std::nextafter(std::nextafter(e.upper, HUGE_VAL), HUGE_VAL);
    if (e.width() <= tail_tol || N >= (std::uint64_t{1} << 26)) break;
    N *= 2;
  }
  return e;
}

std::string to_string(VanishingOutcome o) {
  switch (o) {
    case VanishingOutcome::pass:
      return "pass";
    case VanishingOutcome::bound_violation:
      return "bound_violation";
    case VanishingOutcome::contradiction:
      return "contradiction";
  }
  return "?";
}

VanishingResult verify_vanishing(double C, int d, const std::vector<double>& delta, std::uint64_t N) {
  if (d != 1 && d != 2) throw InvalidArgument("verify_vanishing covers d = 1 and d = 2");
  const auto g = growth_check(C, d, delta);
  VanishingResult r;
  if (auto v = g.first_violation()) {
    r.outcome = VanishingOutcome::bound_violation;
    r.violation_index = *v;
    r.violation_slack = g.slack[*v - 1];
    return r;
  }
  const auto first = std::find_if(delta.begin(), delta.end(), [](double x) { return x > 0.0; });
  if (first == delta.end()) return r;

  r.outcome = VanishingOutcome::contradiction;
  r.m = static_cast<std::size_t>(first - delta.begin()) + 1;
  double Sm = 0.0;
  for (std::size_t i = 0; i < r.m; ++i) Sm += delta[i];
  r.threshold = 1.0 / (C * Sm);
  const double m = static_cast<double>(r.m);
  if (d == 1) {
    const double idx = m + std::floor(r.threshold) + 1.0;
    r.contradiction_index = idx;
    r.index_bound = idx;
    r.log_index_bound = std::log(idx);
    return r;
  }
  // sum_{n=m+1}^{N'} 1/n >= log((N'+1)/(m+1)) exceeds the threshold once N'+1 > (m+1) e^threshold
  r.log_index_bound = std::log(m + 1.0) + r.threshold;
  r.index_bound = std::ceil((m + 1.0) * std::exp(r.threshold));
  double sum = 0.0;
  for (std::uint64_t n = r.m + 1; n <= N; ++n) {
    sum += 1.0 / static_cast<double>(n);
    if (sum > r.threshold) {
      r.contradiction_index = static_cast<double>(n);
      break;
    }
  }
  return r;
}

nlohmann::json to_json(const VanishingResult& r) {
  nlohmann::json j;
  j["outcome"] = to_string(r.outcome);
  if (r.outcome == VanishingOutcome::bound_violation) {
    j["violation_index"] = r.violation_index;
    j["violation_slack"] = r.violation_slack;
  } else if (r.outcome == VanishingOutcome::contradiction) {
    j["m"] = r.m;
    j["threshold"] = r.threshold;
    j["contradiction_index"] = r.contradiction_index ? nlohmann::json(*r.contradiction_index) : nlohmann::json();
    j["index_bound"] = format_real(r.index_bound);
    j["log_index_bound"] = r.log_index_bound;
  }
  return j;
}

double shell_size(int d, std::int64_t k) {
  if (k < 1) throw InvalidArgument("shells start at k = 1");
  if (k == 1) return std::pow(3.0, d);
  const double kk = static_cast<double>(k);
  return std::pow(2.0 * kk + 1.0, d) - std::pow(2.0 * kk - 1.0, d);
}

double shell_alpha(double a, int d, std::int64_t k, std::int64_t n) {
  return k <= n ? a * std::pow(static_cast<double>(k), 2 - 2 * d) : 0.0;
}

Counterexample counterexample_alpha(int d, double a, std::int64_t n) {
  if (d < 3) throw InvalidArgument("the shell counterexample needs d >= 3");
  if (!(a >= 0.0)) throw InvalidArgument("amplitude must be non-negative");
  if (n < 1) throw InvalidArgument("n must be positive");
  Counterexample c;
  c.d = d;
  c.a = a;
  c.n = n;
  double harmonic = 0.0;
  c.monotone = true;
  for (std::int64_t k = 1; k <= n; ++k) {
    const double kk = static_cast<double>(k);
    const double count = shell_size(d, k);
    c.c_d = std::max(c.c_d, count / std::pow(kk, d - 1));
    const double v = shell_alpha(a, d, k, n);
    c.rows.push_back({k, count, v});
    c.sum_alpha += count * v;
    harmonic += std::pow(kk, 1 - d);
    // alpha_m(x) on shell k is 0 for m < k and constant after
    const double before = shell_alpha(a, d, k, k - 1);
    const double at = shell_alpha(a, d, k, k);
    const double after = shell_alpha(a, d, k, n);
    if (!(before <= at && at <= after)) c.monotone = false;
  }
  c.sum_bound = c.c_d * a * harmonic;
  c.boundary_sum = shell_size(d, n) * std::sqrt(shell_alpha(a, d, n, n));
  c.boundary_bound = c.c_d * std::sqrt(a);
  const double slack = 1e-12;
  c.sums_ok = c.sum_alpha <= c.sum_bound * (1.0 + slack) && c.boundary_sum <= c.boundary_bound * (1.0 + slack);
  return c;
}

std::string shell_csv(const Counterexample& c) {
  std::ostringstream out;
  out << kShellSchema << " d=" << c.d << " a=" << format_real(c.a) << " n=" << c.n << "\n";
  out << "k,count,alpha,shell_sum\n";
  for (const auto& r : c.rows)
    out << r.k << ',' << format_real(r.count) << ',' << format_real(r.value) << ',' << format_real(r.count * r.value)
        << '\n';
  return out.str();
}

nlohmann::json to_json(const Counterexample& c) {
  return {{"d", c.d},
          {"a", c.a},
          {"n", c.n},
          {"c_d", c.c_d},
          {"sum_alpha", c.sum_alpha},
          {"sum_bound", c.sum_bound},
          {"boundary_sum", c.boundary_sum},
          {"boundary_bound", c.boundary_bound},
          {"monotone", c.monotone},
          {"sums_ok", c.sums_ok}};
}

nlohmann::json to_json(const AmplitudeEnclosure& e) {
  return {{"a_star", e.lower}, {"lower", e.lower},     {"upper", e.upper},
          {"S_lower", e.S_lower}, {"S_upper", e.S_upper}, {"N", e.N}};
}

}  // namespace ips
