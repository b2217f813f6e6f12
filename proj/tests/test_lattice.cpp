#include <doctest.h>

#include "ips/io.hpp"
#include "ips/lattice.hpp"
#include "ips/random.hpp"

#include <filesystem>

using namespace ips;

TEST_CASE("encode follows the mixed-radix convention") {
  auto v2 = Volume::torus(1, 2, 2);
  CHECK(encode(SpinConfig{0, 0}, v2) == 0);
  CHECK(encode(SpinConfig{1, 0}, v2) == 1);
  auto v3 = Volume::torus(1, 2, 3);
  CHECK(encode(SpinConfig{2, 1}, v3) == 5);
  CHECK_THROWS_AS(encode(SpinConfig{0, 0, 0}, v3), InvalidArgument);
}

TEST_CASE("encode and decode are inverse") {
  auto v = Volume::torus(2, 2, 3);
  for (StateIndex i = 0; i < v.state_count(); ++i) CHECK(encode(decode(i, v), v) == i);
}

TEST_CASE("flip") {
  SpinConfig eta{0, 0};
  CHECK(flip(eta, 0, 1) == SpinConfig{1, 0});
  CHECK(flip(eta, 1, 0) == eta);
  CHECK(flip(flip(SpinConfig{2, 1, 0}, 1, 0), 1, 1) == SpinConfig{2, 1, 0});
}

TEST_CASE("torus neighbours wrap") {
  auto v = Volume::torus(2, 3, 2);
  CHECK(v.site_count() == 9);
  for (int s = 0; s < v.site_count(); ++s) CHECK(v.nearest(s).size() == 4);
  // site (0,0): axis-0 minus neighbour is (2,0) = 6
  CHECK(v.nearest(0)[0].site == 6);
  CHECK(v.nearest(0)[3].site == 1);
  CHECK(v.distance(0, 8) == 1);
}

TEST_CASE("side 2 torus lists the same neighbour twice") {
  auto v = Volume::torus(1, 2, 2);
  CHECK(v.nearest(0)[0].site == 1);
  CHECK(v.nearest(0)[1].site == 1);
}

TEST_CASE("frozen box reads its shell") {
  auto v = Volume::frozen_box(1, 3, 2, 1);
  CHECK_FALSE(v.nearest(0)[0].is_site());
  CHECK(v.nearest(0)[0].frozen == 1);
  CHECK(v.nearest(0)[1].site == 1);
}

TEST_CASE("state count cap") {
  auto big = Volume::torus(2, 5, 2);
  CHECK_THROWS_AS(big.state_count(), InfeasibleSize);
}

TEST_CASE("marginalize") {
  auto v = Volume::torus(1, 3, 2);
  const Window all = Window::all(v);
  const Window w({0, 2});
  const auto u = Distribution::uniform(2, 3);
  auto m = marginalize(u, v, w);
  for (StateIndex i = 0; i < m.size(); ++i) CHECK(m[i] == doctest::Approx(0.25));

  const auto pm = Distribution::point_mass(2, 3, encode(SpinConfig{1, 0, 1}, v));
  auto mp = marginalize(pm, v, w);
  CHECK(mp[3] == 1.0);

  CounterRng rng(7);
  Distribution r(2, 3, rng.dirichlet(8));
  auto same = marginalize(r, v, all);
  CHECK((same.weights() - r.weights()).lpNorm<Eigen::Infinity>() < 1e-15);

  // projection property
  const Window inner({2});
  auto direct = marginalize(r, v, inner);
  auto two_step = marginalize(marginalize(r, v, w), Volume::torus(1, 2, 2), Window({1}));
  CHECK((direct.weights() - two_step.weights()).lpNorm<1>() < 1e-12);
  CHECK_THROWS(marginalize(r, v, Window({0, 5})));
}

TEST_CASE("product measure expands to its own marginals") {
  auto v = Volume::torus(1, 3, 3);
  CounterRng rng(11);
  std::vector<Eigen::VectorXd> m;
  for (int s = 0; s < 3; ++s) m.push_back(rng.dirichlet(3));
  ProductMeasure mu(m);
  auto full = mu.expand();
  full.validate();
  const Window w({0, 2});
  auto marg = marginalize(full, v, w);
  auto restricted = mu.restrict(w).expand();
  CHECK((marg.weights() - restricted.weights()).lpNorm<1>() < 1e-12);
  CHECK(mu.delta() > 0.0);

  std::vector<Eigen::VectorXd> bad{Eigen::Vector2d(1.0, 0.0)};
  CHECK_THROWS_AS(ProductMeasure{bad}, InvalidArgument);
}

TEST_CASE("window box is centered") {
  auto v = Volume::torus(2, 5, 2);
  auto w = Window::box(v, 1);
  CHECK(w.size() == 9);
  CHECK(w.contains(v.center()));
  CHECK_THROWS(Window::box(v, 3));
}

TEST_CASE("distribution file round trip") {
  auto v = Volume::torus(1, 4, 2);
  CounterRng rng(3);
  Distribution d(2, 4, rng.dirichlet(16));
  const auto path = (std::filesystem::temp_directory_path() / "ips_dist_roundtrip.bin").string();
  write_distribution(path, d, v);
  auto back = read_distribution(path);
  CHECK(back.header.side == 4);
  CHECK(back.header.enumeration == kEnumerationVersion);
  CHECK(back.dist.weights() == d.weights());
  auto j = distribution_to_json(d, v);
  auto back2 = distribution_from_json(nlohmann::json::parse(j.dump()));
  CHECK((back2.dist.weights() - d.weights()).lpNorm<Eigen::Infinity>() == 0.0);
  std::filesystem::remove(path);
}
