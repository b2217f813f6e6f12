#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ips/error.hpp"
#include "ips/random.hpp"
#include "ips/sequence.hpp"

using namespace ips;

namespace {

// Apery-type series: zeta(3) = 5/2 sum (-1)^{k+1} / (k^3 binom(2k, k))
double zeta3() {
  double s = 0.0, binom = 1.0;
  for (int k = 1; k <= 30; ++k) {
    binom *= 2.0 * (2.0 * k - 1.0) / k;
    s += (k % 2 ? 1.0 : -1.0) / (std::pow(k, 3) * binom);
  }
  return 2.5 * s;
}

}  // namespace

TEST_CASE("growth slack") {
  const auto g = growth_check(1.0, 1, {1.0, 0.0, 0.0});
  CHECK(g.slack[0] == 0.0);
  CHECK(g.slack[1] == -1.0);
  REQUIRE(g.first_violation());
  CHECK(*g.first_violation() == 2);
  CHECK_THROWS_AS(growth_check(1.0, 1, {0.5, -1.0}), InvalidArgument);
  CHECK(growth_slack<long double>(1.0L, 1.0L, 1.0L, 1, 3) == 0.0L);
}

TEST_CASE("amplitude enclosure") {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const auto e3 = max_admissible_amplitude(1.0, 3);
  const double exact3 = (6.0 / pi2) * (6.0 / pi2);
  CHECK(e3.lower <= exact3);
  CHECK(exact3 <= e3.upper);
  CHECK(e3.width() <= 1e-9);
  CHECK(e3.S_lower <= pi2 / 6.0);
  CHECK(pi2 / 6.0 <= e3.S_upper);

  const auto e4 = max_admissible_amplitude(1.0, 4);
  const double z3 = zeta3();
  CHECK(z3 == doctest::Approx(1.2020569031595942).epsilon(1e-14));
  CHECK(e4.lower <= 1.0 / (z3 * z3));
  CHECK(1.0 / (z3 * z3) <= e4.upper);

  double prev = 0.0;
  for (int d = 3; d <= 7; ++d) {
    const double a = max_admissible_amplitude(1.0, d).lower;
    CHECK(a > prev);
    prev = a;
  }
  CHECK(max_admissible_amplitude(10.0, 3).lower < e3.lower);
  CHECK(max_admissible_amplitude(1e8, 3).lower < 1e-8);
  CHECK_THROWS_AS(max_admissible_amplitude(1.0, 2), InvalidArgument);
}

TEST_CASE("candidate sequence passes at a*") {
  for (int d = 3; d <= 4; ++d) {
    const double a = max_admissible_amplitude(1.0, d).lower;
    std::vector<double> delta(200000);
    for (std::size_t n = 1; n <= delta.size(); ++n) delta[n - 1] = a * std::pow(double(n), 1 - d);
    const auto g = growth_check(1.0, d, delta);
    CHECK_FALSE(g.first_violation(0.0));
    // slightly above the amplitude the bound fails
    for (auto& x : delta) x *= 1.01;
    CHECK(growth_check(1.0, d, delta).first_violation(0.0));
  }
}

TEST_CASE("vanishing examples") {
  CHECK(verify_vanishing(1.0, 1, std::vector<double>(10, 0.0), 10).outcome == VanishingOutcome::pass);
  const auto v = verify_vanishing(1.0, 1, {1.0, 0.0, 0.0}, 3);
  CHECK(v.outcome == VanishingOutcome::bound_violation);
  CHECK(v.violation_index == 2);

  // d = 2, delta_1 = 0.1 and nothing else checked: threshold 10
  const auto c = verify_vanishing(1.0, 2, {0.1}, 1000);
  CHECK(c.outcome == VanishingOutcome::contradiction);
  CHECK(c.m == 1);
  CHECK(c.threshold == doctest::Approx(10.0));
  CHECK_FALSE(c.contradiction_index);
  CHECK(c.index_bound == std::ceil(2.0 * std::exp(10.0)));
  // exact index through the harmonic sum stays under the analytic bound
  const auto ce = verify_vanishing(1.0, 2, {0.1}, 100000);
  REQUIRE(ce.contradiction_index);
  double h = 0.0;
  for (int n = 2; n < *ce.contradiction_index; ++n) h += 1.0 / n;
  CHECK(h <= 10.0);
  CHECK(h + 1.0 / *ce.contradiction_index > 10.0);
  CHECK(*ce.contradiction_index <= ce.index_bound);
}

TEST_CASE("every nonzero sequence in d = 1, 2 is refuted") {
  int contradictions = 0, violations = 0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    CounterRng rng(99, t);
    const int d = 1 + static_cast<int>(t % 2);
    const double C = rng.uniform(0.1, 10.0);
    std::vector<double> delta;
    const auto len = 1 + rng.below(60);
    if (t % 3 == 0) {
      for (std::uint64_t n = 0; n < len; ++n) delta.push_back(rng.uniform() < 0.3 ? 0.0 : rng.uniform());
      if (std::all_of(delta.begin(), delta.end(), [](double x) { return x == 0.0; })) delta.back() = 0.5;
    } else {
      // stay between the roots of c x^2 + (2cS - 1) x + c S^2 while they exist
      double S = 0.0;
      const auto lead = rng.below(4);
      for (std::uint64_t n = 1; n <= lead; ++n) delta.push_back(0.0);
      for (std::uint64_t n = lead + 1; n <= lead + len; ++n) {
        const double c = C * std::pow(double(n), 1 - d);
        if (S == 0.0) {
          delta.push_back(rng.uniform() / c);
        } else {
          const double disc = 1.0 - 4.0 * c * S;
          if (disc < 0.0) break;
          const double lo = ((1.0 - 2.0 * c * S) - std::sqrt(disc)) / (2.0 * c);
          const double hi = ((1.0 - 2.0 * c * S) + std::sqrt(disc)) / (2.0 * c);
          delta.push_back(lo + (hi - lo) * rng.uniform(0.1, 0.9));
        }
        S += delta.back();
      }
    }
    const auto r = verify_vanishing(C, d, delta, 1 << 20);
    INFO("trial " << t);
    REQUIRE(r.outcome != VanishingOutcome::pass);
    if (r.outcome == VanishingOutcome::contradiction) {
      ++contradictions;
      // the bound held on the data, so the refuting index lies beyond it
      CHECK(r.index_bound > double(delta.size()));
      if (r.contradiction_index) CHECK(*r.contradiction_index > double(delta.size()));
    } else {
      ++violations;
    }
  }
  CHECK(contradictions > 100);
  CHECK(violations > 100);
}

TEST_CASE("shell counterexample") {
  CHECK(shell_size(3, 1) == 27.0);
  CHECK(shell_size(3, 2) == 98.0);
  // shells tile the box
  for (int d = 3; d <= 5; ++d) {
    double total = 0.0;
    for (int k = 1; k <= 7; ++k) total += shell_size(d, k);
    CHECK(total == std::pow(15.0, d));
  }
  const auto c = counterexample_alpha(3, 0.1, 5);
  REQUIRE(c.rows.size() == 5);
  for (const auto& r : c.rows) CHECK(r.value == doctest::Approx(0.1 * std::pow(double(r.k), -4)));
  CHECK(c.passed());
  CHECK(c.c_d == 27.0);

  const auto z = counterexample_alpha(3, 0.0, 4);
  for (const auto& r : z.rows) CHECK(r.value == 0.0);

  double worst = 0.0;
  for (int n = 1; n <= 50; ++n) {
    const auto cn = counterexample_alpha(3, 0.2, n);
    CHECK(cn.passed());
    worst = std::max(worst, cn.boundary_sum / std::sqrt(0.2));
  }
  CHECK(worst <= 27.0);
  CHECK(shell_csv(c).rfind(kShellSchema, 0) == 0);
}
