#include <doctest.h>

#include <cmath>

#include "ips/functions.hpp"
#include "ips/verify.hpp"

using namespace ips;

TEST_CASE("worked values") {
  CHECK(F(4.0) == doctest::Approx(4.0 * std::log(4.0) - 3.0).epsilon(1e-15));
  CHECK(F(4.0) >= 0.5 * (1.0 - 2.0) * (1.0 - 2.0));
  CHECK(Phi(1.0, 1.0, 1.0, 1.0) == 0.0);
  // point mass on a uniform q=2 single site: alpha = 2, beta = 2, C = 8
  const auto mu = ProductMeasure::uniform(2, 1);
  const Distribution rho(2, 1, Eigen::Vector2d(1.0, 0.0));
  const double a = alpha(rho, mu, 0);
  const double b = beta(rho, mu, 0);
  CHECK(b * b == doctest::Approx(4.0));
  CHECK(b * b <= 2.0 * (1.0 / mu.delta() + 2) * a);
}

TEST_CASE("random laws are reproducible and positive") {
  CounterRng a(7, 3), b(7, 3);
  const auto x = random_law(a, 12, 9);
  const auto y = random_law(b, 12, 9);
  CHECK(x == y);
  CHECK(x.sum() == doctest::Approx(1.0));
  CHECK(x.minCoeff() > 0.0);
}

TEST_CASE("individual checks pass on small inputs") {
  CHECK(check_F_bound(20000).pass);
  const auto ba = check_beta_alpha(ProductMeasure::uniform(3, 2), 100, 11);
  CHECK(ba.pass);
  CHECK(ba.details["max_ratio"].get<double>() <= ba.details["proof_constant"].get<double>());
  CHECK(check_alpha_monotone(Volume::torus(1, 3, 2), ProductMeasure::uniform(2, 3), 50, 5).pass);
  CHECK(check_subadditivity(20000, 3).pass);
  const auto v = Volume::torus(1, 5, 2);
  CHECK(check_quant_diff(GlauberIsing(0.6, 1), v, Window({1, 2}), 2, 1).pass);
  CHECK(check_invariance(SoftFA(0.2, 0.4), v, ProductMeasure::homogeneous(5, Eigen::Vector2d(0.6, 0.4)),
                         Window({1, 2, 3}), 100, 2)
            .pass);
  const GlauberIsing g(0.6, 1);
  const WindowKernel k(g, v, Window({1, 2, 3}));
  CHECK(check_loss_identity(k, ProductMeasure::uniform(2, 5), 20, 4).pass);
  const SoftFA fa(0.2, 0.4);
  const WindowKernel kf(fa, v, Window({1, 2}));
  CHECK(check_zero_loss_chain(kf, ProductMeasure::homogeneous(5, Eigen::Vector2d(0.6, 0.4)), 20, 4).pass);
}

TEST_CASE("merge keeps the worst part") {
  CheckResult a, b;
  a.name = "a";
  a.trials = 3;
  a.max_slack = -1.0;
  a.pass = true;
  b.name = "b";
  b.trials = 4;
  b.max_slack = 0.5;
  b.pass = false;
  b.witness = {{"x", 1}};
  const auto m = merge("m", {a, b});
  CHECK(m.trials == 7);
  CHECK(m.max_slack == 0.5);
  CHECK_FALSE(m.pass);
  CHECK(m.witness["part"] == "b");
}

TEST_CASE("fast suite passes and is deterministic") {
  SuiteOptions o;
  o.profile = Profile::fast;
  const auto r1 = run_suite(o);
  REQUIRE(r1.size() == kChecks.size());
  for (const auto& r : r1) {
    INFO(r.name << " slack " << r.max_slack);
    CHECK(r.pass);
    CHECK(r.trials > 0);
  }
  o.threads = 3;
  const auto r2 = run_suite(o);
  for (std::size_t i = 0; i < r1.size(); ++i) CHECK(to_json(r1[i]) == to_json(r2[i]));
}

TEST_CASE("negative controls fail") {
  for (const auto& c : run_negative_controls({})) {
    INFO(c.name << " slack " << c.result.max_slack);
    CHECK(c.failed_as_designed);
  }
}
