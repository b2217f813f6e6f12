#include <doctest.h>

#include "ips/random.hpp"

using namespace ips;

// Known-answer vectors of the Random123 reference implementation.
TEST_CASE("philox4x32-10 known answers") {
  constexpr auto zero = philox4x32({0, 0, 0, 0}, {0, 0});
  static_assert(zero[0] == 0x6627e8d5u && zero[1] == 0xe169c58du && zero[2] == 0xbc57ac4cu && zero[3] == 0x9b00dbd8u);
  const auto ones = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  CHECK(ones[0] == 0x408f276du);
  CHECK(ones[1] == 0x41c83b0eu);
  CHECK(ones[2] == 0xa20bc7c6u);
  CHECK(ones[3] == 0x6d5451fdu);
  const auto pi = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  CHECK(pi[0] == 0xd16cfe09u);
  CHECK(pi[1] == 0x94fdccebu);
  CHECK(pi[2] == 0x5001e420u);
  CHECK(pi[3] == 0x24126ea1u);
}

TEST_CASE("streams are reproducible and independent") {
  CounterRng a(42, 3), b(42, 3), c(42, 4);
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
  CHECK(CounterRng(42, 3).uniform() != c.uniform());
}

TEST_CASE("uniform mean and dirichlet normalisation") {
  CounterRng r(1);
  double s = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) s += r.uniform();
  CHECK(s / n == doctest::Approx(0.5).epsilon(0.01));
  auto d = r.dirichlet(7);
  CHECK(d.sum() == doctest::Approx(1.0));
  CHECK((d.array() > 0).all());
  for (int i = 0; i < 1000; ++i) CHECK(r.below(5) < 5);
}
