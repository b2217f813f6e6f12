#include <doctest.h>

#include <cmath>

#include "ips/audit.hpp"
#include "ips/models.hpp"

using namespace ips;

namespace {

// Oscillation by brute force over every configuration of the whole volume.
double brute_oscillation(const RateModel& m, const Volume& v, int x, int y, Spin j) {
  const StateIndex n = v.state_count();
  double best = 0.0;
  for (StateIndex s = 0; s < n; ++s) {
    auto eta = decode(s, v);
    if (eta[static_cast<std::size_t>(x)] == j) continue;
    for (Spin a = 0; a < v.q(); ++a) {
      auto xi = flip(eta, y, a);
      if (xi[static_cast<std::size_t>(x)] == j) continue;
      best = std::max(best, std::abs(rate(m, v, eta, x, j) - rate(m, v, xi, x, j)));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("zoo rates") {
  auto v1 = Volume::torus(1, 5, 2);
  SpinConfig eta{0, 1, 1, 0, 1};
  auto flip2 = IndependentFlip::uniform(2);
  CHECK(rate(flip2, v1, eta, 2, 0) == 0.5);
  CHECK(total_rate(flip2, v1, eta, 2) == 0.5);
  auto v3 = Volume::torus(1, 5, 3);
  CHECK(total_rate(IndependentFlip::uniform(3), v3, SpinConfig{0, 1, 2, 0, 1}, 2) == doctest::Approx(2.0 / 3.0));

  GlauberIsing g0(0.0, 1);
  CHECK(rate(g0, v1, eta, 1, 0) == 0.5);
  GlauberIsing g(1.0, 1);
  // site 1: neighbours 0 and 2 -> spins -1, +1 -> h = 0
  CHECK(rate(g, v1, eta, 1, 0) == doctest::Approx(0.5));
  // site 2: neighbours 1 and 3 -> +1, -1; site 4: neighbours 3 (0 -> -1), 0 (0 -> -1), h = -2
  CHECK(rate(g, v1, eta, 4, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-4.0))));
}

TEST_CASE("driven clock elevates only the clockwise target") {
  const double eps = 0.7, base = 0.3;
  auto m = DrivenClock::standard(3, eps, base);
  auto v = Volume::torus(1, 4, 3);
  for (StateIndex s = 0; s < v.state_count(); ++s) {
    auto eta = decode(s, v);
    for (int x = 0; x < 4; ++x) {
      const Spin own = eta[static_cast<std::size_t>(x)];
      const Spin left = eta[static_cast<std::size_t>((x + 3) % 4)];
      for (Spin j = 0; j < 3; ++j) {
        if (j == own) continue;
        const double expect = j == (own + 1) % 3 ? 1.0 + eps * (left == 0) : base;
        CHECK(rate(m, v, eta, x, j) == doctest::Approx(expect));
      }
    }
  }
  // single-site cycle 0 -> 1 -> 2 -> 0 is not balanced by the reverse cycle
  SpinConfig eta{0, 0, 0, 0};
  double fwd = 1.0, bwd = 1.0;
  for (Spin s = 0; s < 3; ++s) {
    eta[1] = s;
    fwd *= rate(m, v, eta, 1, (s + 1) % 3);
    bwd *= rate(m, v, eta, 1, (s + 2) % 3);
  }
  CHECK(fwd != doctest::Approx(bwd));
}

TEST_CASE("oscillations agree with brute force") {
  auto v = Volume::torus(1, 5, 2);
  GlauberIsing g(1.0, 1);
  const double expect = std::tanh(2.0) / 2.0;
  for (Spin j = 0; j < 2; ++j) {
    CHECK(oscillation(g, v, 2, 3, j) == doctest::Approx(brute_oscillation(g, v, 2, 3, j)).epsilon(1e-14));
    CHECK(oscillation(g, v, 2, 3, j) == doctest::Approx(expect).epsilon(1e-14));
  }
  CHECK(oscillation(g, v, 2, 3) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(oscillation(g, v, 2, 0) == 0.0);

  auto v3 = Volume::torus(2, 3, 3);
  auto clock = DrivenClock::standard(3, 0.5, 0.2);
  for (int y : {1, 3, 6})
    for (Spin j = 0; j < 3; ++j)
      CHECK(oscillation(clock, v3, 0, y, j) == doctest::Approx(brute_oscillation(clock, v3, 0, y, j)).epsilon(1e-14));

  auto fa = SoftFA(0.2, 0.3);
  auto v2 = Volume::torus(2, 3, 2);
  for (int y : {1, 3, 4})
    for (Spin j = 0; j < 2; ++j)
      CHECK(oscillation(fa, v2, 0, y, j) == doctest::Approx(brute_oscillation(fa, v2, 0, y, j)).epsilon(1e-14));

  auto flip = IndependentFlip::uniform(3);
  CHECK(oscillation(flip, v3, 0, 1, 1) == 0.0);
}

TEST_CASE("gamma on a one-dimensional window") {
  // Lambda = {-1,0,1} around the centre of a side-7 torus, x = +1, y = +2.
  auto v = Volume::torus(1, 7, 2);
  GlauberIsing g(0.8, 1);
  const Window w({2, 3, 4});
  const double expect = brute_oscillation(g, v, 4, 5, 0) + brute_oscillation(g, v, 4, 5, 1);
  CHECK(gamma(g, w, 4, v) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(gamma(g, w, 3, v) == 0.0);
  CHECK(gamma(IndependentFlip::uniform(2), w, 4, v) == 0.0);
}

TEST_CASE("audit of Glauber d=1 beta=0.5 on a side-9 torus") {
  auto v = Volume::torus(1, 9, 2);
  GlauberIsing g(0.5, 1);
  auto a = audit(g, v, window_ladder(v, 3));
  CHECK(a.passed());
  CHECK(a.r3);
  CHECK(a.radius_ok);
  // oracle: a boundary site of Lambda_k has one outside neighbour with
  // per-target oscillation tanh(2 beta)/2 for each of the two targets
  const double per_target = std::tanh(1.0) / 2.0;
  CHECK(a.c1 == doctest::Approx(2 * per_target).epsilon(1e-13));
  CHECK(a.c2 == doctest::Approx(4 * per_target).epsilon(1e-13));
  CHECK(a.c1_total == doctest::Approx(per_target).epsilon(1e-13));
  CHECK(a.c2_total == doctest::Approx(2 * per_target).epsilon(1e-13));
  CHECK(a.min_rate == doctest::Approx(1.0 / (1.0 + std::exp(2.0))));
  for (const auto& wg : a.ladder)
    for (int x = 0; x < 9; ++x)
      if (wg.window.contains(x) && wg.window.contains(x - 1) && wg.window.contains(x + 1)) CHECK(wg.gamma[x] == 0.0);
}

TEST_CASE("audit of independent flip") {
  auto v = Volume::torus(2, 3, 2);
  Eigen::Vector2d p(0.3, 0.7);
  IndependentFlip m(p, 2.0);
  auto a = audit(m, v, window_ladder(Volume::torus(2, 3, 2), 1));
  CHECK(a.passed());
  CHECK(a.min_rate == doctest::Approx(0.6));
  CHECK(a.c1 == 0.0);
  CHECK(a.c2 == 0.0);
}

TEST_CASE("audit reports a vanishing rate") {
  auto v = Volume::torus(1, 5, 2);
  SoftFA hard(0.0, 0.5);
  auto a = audit(hard, v, window_ladder(v, 1));
  CHECK_FALSE(a.passed());
  CHECK_FALSE(a.r3);
  REQUIRE(!a.failures.empty());
  CHECK(a.failures.front().condition == "R3");
  CHECK(a.failures.front().site >= 0);
  CHECK(!a.failures.front().neighbourhood.empty());
}

TEST_CASE("audit catches an understated radius") {
  // a table that claims radius 0 but reads neighbours is impossible to
  // write, so check a radius-1 table is exercised exhaustively instead
  auto t = RateTable::parse("q 2\ndimension 1\nradius 1\ndefault 0.5\n000 1 0.25\n");
  auto v = Volume::torus(1, 5, 2);
  auto a = audit(t, v, window_ladder(v, 1));
  CHECK(a.radius_ok);
  CHECK(a.radius_exhaustive);
}

TEST_CASE("rate table parsing") {
  const std::string text =
      "# facilitated flips\n"
      "q 2\n"
      "dimension 1\n"
      "radius 1\n"
      "default 0.1\n"
      "000 1 0.25\n"
      "111 0 0.75\n";
  auto t = RateTable::parse(text);
  auto v = Volume::torus(1, 4, 2);
  CHECK(rate(t, v, SpinConfig{0, 0, 0, 0}, 1, 1) == 0.25);
  CHECK(rate(t, v, SpinConfig{1, 1, 1, 0}, 1, 0) == 0.75);
  CHECK(rate(t, v, SpinConfig{1, 0, 1, 0}, 1, 1) == 0.1);
  CHECK(t.bounds().min == 0.1);
  CHECK(t.bounds().max == 0.75);
  CHECK(model_hash(t) == model_hash(RateTable::parse(text)));

  CHECK_THROWS_WITH_AS(RateTable::parse("q 2\ndimension 1\nradius 1\n000 1 x\n"), doctest::Contains("line 4"),
                       InvalidArgument);
  CHECK_THROWS_AS(RateTable::parse("q 2\ndimension 1\nradius 1\n000 0 0.5\n"), InvalidArgument);
  CHECK_THROWS_AS(RateTable::parse("q 2\ndimension 1\nradius 1\n000 1 0.5\n"), InvalidArgument);
}

TEST_CASE("compatibility checks") {
  CHECK_THROWS(check_compatible(GlauberIsing(1.0, 2), Volume::torus(1, 5, 2)));
  CHECK_THROWS(check_compatible(IndependentFlip::uniform(3), Volume::torus(1, 5, 2)));
  CHECK_NOTHROW(check_compatible(GlauberIsing(1.0, 1), Volume::frozen_box(1, 5, 2, 0)));
}
