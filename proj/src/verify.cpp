#include "ips/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <thread>

#include "ips/audit.hpp"
#include "ips/error.hpp"
#include "ips/exact.hpp"
#include "ips/functions.hpp"

namespace ips {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) { return splitmix(seed ^ splitmix(tag)); }

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd bernoulli(double p) { return Eigen::Vector2d(1.0 - p, p); }

// Random product measure kept away from the simplex boundary.
ProductMeasure random_product(std::uint64_t seed, int q, int sites) {
  CounterRng rng(seed, 0xC0FFEE);
  std::vector<Eigen::VectorXd> m;
  for (int s = 0; s < sites; ++s)
    m.push_back(0.5 * rng.dirichlet(q) + 0.5 * Eigen::VectorXd::Constant(q, 1.0 / q));
  return ProductMeasure(std::move(m));
}

nlohmann::json describe_mu(const ProductMeasure& mu) {
  auto j = nlohmann::json::array();
  for (int s = 0; s < mu.sites(); ++s) j.push_back(to_vec(mu.marginal(s)));
  return j;
}

// Ambient state odometer.
void advance(SpinConfig& eta, int q) {
  for (auto& s : eta) {
    if (++s < q) return;
    s = 0;
  }
}

struct Case {
  std::string label;
  std::shared_ptr<const RateModel> model;
  Volume volume;
  ProductMeasure mu;
  std::vector<Window> windows;
};

}  // namespace

nlohmann::json to_json(const CheckResult& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["trials"] = r.trials;
  j["max_slack"] = r.max_slack;
  j["witness"] = r.witness;
  j["pass"] = r.pass;
  j["seed"] = r.seed;
  j["tolerance"] = r.tolerance;
  j["details"] = r.details;
  return j;
}

CheckResult merge(std::string name, const std::vector<CheckResult>& parts) {
  CheckResult out;
  out.name = std::move(name);
  out.details = nlohmann::json::object();
  out.details["parts"] = nlohmann::json::array();
  bool all = !parts.empty();
  for (const auto& p : parts) {
    out.trials += p.trials;
    out.tolerance = std::max(out.tolerance, p.tolerance);
    if (p.max_slack > out.max_slack) {
      out.max_slack = p.max_slack;
      out.witness = p.witness;
      out.witness["part"] = p.name;
    }
    all = all && p.pass;
    nlohmann::json pj = {{"name", p.name}, {"trials", p.trials}, {"max_slack", p.max_slack},
                         {"pass", p.pass}, {"seed", p.seed}};
    if (!p.details.empty()) pj["details"] = p.details;
    out.details["parts"].push_back(std::move(pj));
  }
  if (!parts.empty()) out.seed = parts.front().seed;
  out.pass = all;
  return out;
}

Eigen::VectorXd random_law(CounterRng& rng, Eigen::Index n, std::uint64_t trial) {
  Eigen::VectorXd w = rng.dirichlet(n);
  if (trial % 10 == 9 && n > 1) {
    const auto k = 1 + rng.below(static_cast<std::uint64_t>(std::min<Eigen::Index>(3, n - 1)));
    for (std::uint64_t i = 0; i < k; ++i) w[static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)))] = 1e-8;
  }
  return w / w.sum();
}

CheckResult check_F_bound(std::size_t points, double lo, double hi, double tol, double factor) {
  CheckResult r;
  r.name = "F_bound";
  r.tolerance = tol;
  const double span = std::log(hi / lo);
  for (std::size_t i = 0; i < points; ++i) {
    const double x = points == 1 ? lo : lo * std::exp(span * static_cast<double>(i) / static_cast<double>(points - 1));
    const double f = F(x);
    const double rhs = factor * (1.0 - std::sqrt(x)) * (1.0 - std::sqrt(x));
    r.record(rhs - f, [&] { return nlohmann::json{{"x", x}, {"F", f}, {"bound", rhs}}; });
  }
  // the worked value F(4) = 4 log 4 - 3
  r.record(factor * 1.0 - F(4.0), [&] { return nlohmann::json{{"x", 4.0}, {"F", F(4.0)}, {"bound", factor}}; });
  r.trials = points + 1;
  r.details = {{"factor", factor}, {"lo", lo}, {"hi", hi}};
  r.finish();
  return r;
}

CheckResult check_beta_alpha(const ProductMeasure& mu_window, std::size_t trials, std::uint64_t seed, double tol,
                             std::optional<double> constant, bool adversarial) {
  CheckResult r;
  r.name = "beta_alpha";
  r.seed = seed;
  r.tolerance = tol;
  const int q = mu_window.q();
  const int k = mu_window.sites();
  const double delta = mu_window.delta();
  const double proof_c = 2.0 * (1.0 / delta + q);
  const double c = constant.value_or(proof_c);
  const auto n = static_cast<Eigen::Index>(checked_state_count(q, k));
  double max_ratio = 0.0;

  Eigen::VectorXd worst_w;
  double worst = -std::numeric_limits<double>::infinity();
  auto eval = [&](const Eigen::VectorXd& w) {
    const Distribution rho(q, k, w);
    double local = -std::numeric_limits<double>::infinity();
    for (int x = 0; x < k; ++x) {
      const double a = alpha(rho, mu_window, x);
      const double b = beta(rho, mu_window, x);
      if (a > 0.0) max_ratio = std::max(max_ratio, b * b / a);
      const double slack = b * b - c * a;
      local = std::max(local, slack);
      r.record(slack, [&] {
        return nlohmann::json{{"rho", to_vec(w)}, {"x", x}, {"alpha", a}, {"beta", b}, {"constant", c}};
      });
    }
    ++r.trials;
    return local;
  };

  for (std::size_t t = 0; t < trials; ++t) {
    CounterRng rng(seed, t);
    Eigen::VectorXd w = random_law(rng, n, t);
    const double s = eval(w);
    if (s > worst) {
      worst = s;
      worst_w = w;
    }
  }
  if (adversarial && worst_w.size() > 0) {
    // coordinate ascent on the slack from the worst random start
    static constexpr double kFactors[] = {1e-3, 0.1, 0.5, 2.0, 10.0, 1e3};
    for (int round = 0; round < 20; ++round) {
      bool improved = false;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (double f : kFactors) {
          Eigen::VectorXd w = worst_w;
          w[i] = std::clamp(w[i] * f, 1e-12, 1.0);
          w /= w.sum();
          const double s = eval(w);
          if (s > worst) {
            worst = s;
            worst_w = w;
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
  }
  r.details = {{"delta", delta},
               {"q", q},
               {"window_sites", k},
               {"constant_used", c},
               {"proof_constant", proof_c},
               {"stated_constant", 2.0 * q / delta},
               {"max_ratio", max_ratio},
               {"mu", describe_mu(mu_window)}};
  r.finish();
  return r;
}

CheckResult check_alpha_monotone(const Volume& volume, const ProductMeasure& mu, std::size_t trials,
                                 std::uint64_t seed, double tol) {
  CheckResult r;
  r.name = "alpha_monotone";
  r.seed = seed;
  r.tolerance = tol;
  const int n = volume.site_count();
  if (n > 10) throw InfeasibleSize("alpha monotonicity enumerates every window; at most 10 sites");
  const std::uint32_t full = (1u << n) - 1;
  std::vector<Window> windows(full + 1);
  for (std::uint32_t m = 1; m <= full; ++m) {
    std::vector<int> s;
    for (int i = 0; i < n; ++i)
      if (m >> i & 1u) s.push_back(i);
    windows[m] = Window(std::move(s));
  }
  const auto states = static_cast<Eigen::Index>(volume.state_count());
  // a[m][i]: alpha of window m at site i
  std::vector<std::vector<double>> a(full + 1, std::vector<double>(static_cast<std::size_t>(n), 0.0));
  std::uint64_t pairs = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    CounterRng rng(seed, t);
    const Distribution rho(volume.q(), n, random_law(rng, states, t));
    for (std::uint32_t m = 1; m <= full; ++m) {
      const Distribution rw = marginalize(rho, volume, windows[m]);
      const ProductMeasure mw = mu.restrict(windows[m]);
      for (int x = 0; x < windows[m].size(); ++x)
        a[m][static_cast<std::size_t>(windows[m].sites()[static_cast<std::size_t>(x)])] = alpha(rw, mw, x);
    }
    for (std::uint32_t big = 1; big <= full; ++big) {
      for (std::uint32_t sub = (big - 1) & big; sub; sub = (sub - 1) & big) {
        for (int x = 0; x < n; ++x) {
          if (!(sub >> x & 1u)) continue;
          const double as = a[sub][static_cast<std::size_t>(x)];
          const double ab = a[big][static_cast<std::size_t>(x)];
          ++pairs;
          r.record(std::max(as - ab, -as), [&] {
            return nlohmann::json{{"trial", t},
                                  {"delta_window", windows[sub].sites()},
                                  {"lambda_window", windows[big].sites()},
                                  {"x", x},
                                  {"alpha_delta", as},
                                  {"alpha_lambda", ab}};
          });
        }
      }
    }
    ++r.trials;
  }
  r.details = {{"volume", volume.describe()}, {"comparisons", pairs}, {"mu", describe_mu(mu)}};
  r.finish();
  return r;
}

CheckResult check_subadditivity(std::size_t trials, std::uint64_t seed, double tol, bool reversed) {
  CheckResult r;
  r.name = "subadditivity";
  r.seed = seed;
  r.tolerance = tol;
  const double sign = reversed ? -1.0 : 1.0;
  auto eval = [&](double u1, double u2, double v1, double v2, double c, double d) {
    const double s1 = std::sqrt(u1 * v1) + std::sqrt(u2 * v2) - std::sqrt((u1 + u2) * (v1 + v2));
    const double s2 = Phi(u1 + u2, v1 + v2, c, d) - Phi(u1, v1, c, d) - Phi(u2, v2, c, d);
    const double slack = std::max(sign * s1, sign * s2);
    r.record(slack, [&] {
      return nlohmann::json{{"u1", u1}, {"u2", u2}, {"v1", v1}, {"v2", v2}, {"c", c}, {"d", d},
                            {"sqrt_slack", s1}, {"phi_slack", s2}};
    });
    ++r.trials;
  };
  eval(1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
  for (std::size_t t = 0; t < trials; ++t) {
    CounterRng rng(seed, t);
    const double u1 = rng.uniform(), u2 = rng.uniform(), v1 = rng.uniform();
    double v2 = rng.uniform();
    const double c = rng.uniform(0.25, 1.0), d = rng.uniform(0.25, 1.0);
    // equality case: (u1, v1) and (u2, v2) proportional
    if (t % 10 == 3) v2 = std::min(1.0, u2 * v1 / u1);
    eval(u1, u2, v1, v2, c, d);
  }
  r.details = {{"reversed", reversed}};
  r.finish();
  return r;
}

CheckResult check_quant_diff(const RateModel& model, const Volume& volume, const Window& window, std::size_t laws,
                             std::uint64_t seed, double tol, double scale) {
  CheckResult r;
  r.name = "quant_diff";
  r.seed = seed;
  r.tolerance = tol;
  const WindowKernel kernel(model, volume, window);
  const int q = volume.q();
  const int k = window.size();
  // bound[x][j] = sum over y outside the window of delta_y(c_x(., j))
  std::vector<double> bound(static_cast<std::size_t>(k * q), 0.0);
  for (int x = 0; x < k; ++x) {
    const int site = window.sites()[static_cast<std::size_t>(x)];
    for (int y = 0; y < volume.site_count(); ++y) {
      if (window.contains(y)) continue;
      for (Spin j = 0; j < q; ++j) bound[static_cast<std::size_t>(x * q + j)] += oscillation(model, volume, site, y, j);
    }
  }
  for (std::size_t t = 0; t < laws; ++t) {
    CounterRng rng(seed, t);
    const Distribution nu(q, volume.site_count(), random_law(rng, static_cast<Eigen::Index>(kernel.states()), t));
    const auto cyl = kernel.integrate(nu);
    SpinConfig eta(static_cast<std::size_t>(volume.site_count()), 0);
    for (StateIndex s = 0; s < kernel.states(); ++s, advance(eta, q)) {
      const auto p = kernel.pattern_of(s);
      for (int x = 0; x < k; ++x) {
        const int site = window.sites()[static_cast<std::size_t>(x)];
        for (Spin j = 0; j < q; ++j) {
          if (j == eta[static_cast<std::size_t>(site)]) continue;
          const double wr = window_rate(cyl, p, x, j);
          const double c = kernel.rate(s, x, j);
          const double b = scale * bound[static_cast<std::size_t>(x * q + j)];
          r.record(std::abs(wr - c) - b, [&] {
            return nlohmann::json{{"law", t},         {"state", s},     {"pattern", kernel.pattern_name(p)},
                                  {"site", site},     {"target", j},    {"window_rate", wr},
                                  {"rate", c},        {"bound", b}};
          });
        }
      }
    }
    ++r.trials;
  }
  r.details = {{"model", model.describe()}, {"volume", volume.describe()}, {"window", window.sites()},
               {"scale", scale}};
  r.finish();
  return r;
}

CheckResult check_invariance(const RateModel& model, const Volume& volume, const ProductMeasure& mu,
                             const Window& window, std::size_t trials, std::uint64_t seed, double tol) {
  CheckResult r;
  r.name = "invariance";
  r.seed = seed;
  r.tolerance = tol;
  const double residual = stationarity_residual(model, volume, mu);
  r.details = {{"model", model.describe()},
               {"volume", volume.describe()},
               {"window", window.sites()},
               {"stationarity_residual", residual},
               {"mu", describe_mu(mu)}};
  const WindowKernel kernel(model, volume, window);
  const auto mi = kernel.integrate(mu.expand());
  const ProductMeasure mw = mu.restrict(window);
  const auto n = static_cast<Eigen::Index>(kernel.patterns());
  for (std::size_t t = 0; t < trials; ++t) {
    CounterRng rng(seed, t);
    const Distribution rho = t == 0 ? mw.expand() : Distribution(volume.q(), window.size(), random_law(rng, n, t));
    const double s = invariance_sum(kernel, mi, mu, rho);
    r.record(std::abs(s), [&] { return nlohmann::json{{"trial", t}, {"rho", to_vec(rho.weights())}, {"sum", s}}; });
    ++r.trials;
  }
  r.finish();
  if (residual > 1e-10) {
    r.pass = false;
    r.details["error"] = "mu is not stationary for this model";
    r.witness["stationarity_residual"] = residual;
  }
  return r;
}

CheckResult check_loss_identity(const WindowKernel& kernel, const ProductMeasure& mu, std::size_t trials,
                                std::uint64_t seed, double tol, bool drop_boundary) {
  CheckResult r;
  r.name = "loss_identity";
  r.seed = seed;
  r.tolerance = tol;
  const int sites = kernel.volume().site_count();
  for (std::size_t t = 0; t < trials; ++t) {
    CounterRng rng(seed, t);
    const Distribution nu(kernel.q(), sites, random_law(rng, static_cast<Eigen::Index>(kernel.states()), t));
    const auto rep = entropy_report(kernel, nu, mu);
    const double rhs = rep.bulk + (drop_boundary ? 0.0 : rep.boundary);
    const double slack = std::abs(rep.g_direct - rhs);
    r.record(slack, [&] {
      return nlohmann::json{
          {"trial", t}, {"g_direct", rep.g_direct}, {"bulk", rep.bulk}, {"boundary", rep.boundary}};
    });
    ++r.trials;
  }
  r.details = {{"volume", kernel.volume().describe()},
               {"window", kernel.window().sites()},
               {"drop_boundary", drop_boundary}};
  r.finish();
  return r;
}

CheckResult check_zero_loss_chain(const WindowKernel& kernel, const ProductMeasure& mu, std::size_t trials,
                                  std::uint64_t seed, double tol) {
  CheckResult r;
  r.name = "zero_loss_chain";
  r.seed = seed;
  r.tolerance = tol;
  const double c = kernel.min_rate();
  const int sites = kernel.volume().site_count();
  for (std::size_t t = 0; t < trials; ++t) {
    CounterRng rng(seed, t);
    const Distribution nu(kernel.q(), sites, random_law(rng, static_cast<Eigen::Index>(kernel.states()), t));
    const auto rep = entropy_report(kernel, nu, mu);
    const double lower = 0.5 * c * rep.sum_alpha();
    const double s1 = lower + rep.bulk;
    const double s2 = std::abs(rep.boundary) - 2.0 * rep.sum_gamma_beta();
    r.record(std::max(s1, s2), [&] {
      return nlohmann::json{{"trial", t},
                            {"bulk", rep.bulk},
                            {"boundary", rep.boundary},
                            {"half_c_sum_alpha", lower},
                            {"two_sum_gamma_beta", 2.0 * rep.sum_gamma_beta()}};
    });
    ++r.trials;
  }
  r.details = {{"volume", kernel.volume().describe()}, {"window", kernel.window().sites()}, {"min_rate", c}};
  r.finish();
  return r;
}

namespace {

std::vector<Case> product_stationary_cases() {
  const auto v1 = Volume::torus(1, 5, 2);
  const auto v1q3 = Volume::torus(1, 5, 3);
  const auto v2 = Volume::torus(2, 3, 2);
  const Eigen::Vector3d p3(0.2, 0.5, 0.3);
  const std::vector<Window> w1{Window({2}), Window({1, 2}), Window({1, 2, 3})};
  const std::vector<Window> w2{Window({4}), Window({0, 1, 3, 4})};
  std::vector<Case> out;
  out.push_back({"flip q=2", std::make_shared<IndependentFlip>(bernoulli(0.3)), v1,
                 ProductMeasure::homogeneous(5, bernoulli(0.3)), w1});
  out.push_back({"flip q=3", std::make_shared<IndependentFlip>(p3), v1q3, ProductMeasure::homogeneous(5, p3), w1});
  out.push_back({"clock q=2", std::make_shared<DrivenClock>(DrivenClock::standard(2, 0.8, 0.5)), v1,
                 ProductMeasure::uniform(2, 5), w1});
  out.push_back({"clock q=3", std::make_shared<DrivenClock>(DrivenClock::standard(3, 1.2, 0.3)), v1q3,
                 ProductMeasure::uniform(3, 5), w1});
  out.push_back({"soft fa", std::make_shared<SoftFA>(0.2, 0.4), v1, ProductMeasure::homogeneous(5, bernoulli(0.4)),
                 w1});
  out.push_back({"soft fa d=2", std::make_shared<SoftFA>(0.1, 0.3), v2,
                 ProductMeasure::homogeneous(9, bernoulli(0.3)), w2});
  out.push_back({"clock q=3 d=2", std::make_shared<DrivenClock>(DrivenClock::standard(3, 1.0, 0.4)),
                 Volume::torus(2, 3, 3), ProductMeasure::uniform(3, 9), w2});
  return out;
}

const char* kSampleTable =
    "q 2\ndimension 1\nradius 1\ndefault 0.4\n000 1 0.9\n001 1 0.6\n100 1 0.6\n111 0 0.2\n011 0 0.7\n";

std::vector<Case> identity_cases() {
  const auto d1q2 = Volume::torus(1, 5, 2);
  const auto d1q3 = Volume::torus(1, 5, 3);
  const auto d2q2 = Volume::torus(2, 4, 2);
  const auto d2q3 = Volume::torus(2, 3, 3);
  const Eigen::Vector3d p3(0.2, 0.5, 0.3);
  const std::vector<Window> w1{Window({2}), Window({1, 2}), Window({1, 2, 3}), Window({0, 1, 2, 3})};
  const std::vector<Window> w2{Window({5}), Window({5, 6}), Window({5, 6, 9, 10})};
  const std::vector<Window> w3{Window({4}), Window({3, 4}), Window({0, 1, 3, 4})};
  std::vector<Case> out;
  out.push_back({"flip q=2", std::make_shared<IndependentFlip>(bernoulli(0.3)), d1q2,
                 ProductMeasure::homogeneous(5, bernoulli(0.3)), w1});
  out.push_back({"glauber d=1", std::make_shared<GlauberIsing>(0.6, 1), d1q2, ProductMeasure::uniform(2, 5), w1});
  out.push_back({"soft fa", std::make_shared<SoftFA>(0.2, 0.4), d1q2, ProductMeasure::homogeneous(5, bernoulli(0.4)),
                 w1});
  out.push_back({"hard fa", std::make_shared<SoftFA>(0.0, 0.4), d1q2, ProductMeasure::homogeneous(5, bernoulli(0.4)),
                 w1});
  out.push_back({"rate table", std::make_shared<RateTable>(RateTable::parse(kSampleTable)), d1q2,
                 ProductMeasure::uniform(2, 5), w1});
  out.push_back({"flip q=3", std::make_shared<IndependentFlip>(p3), d1q3, ProductMeasure::homogeneous(5, p3), w1});
  out.push_back({"clock q=3", std::make_shared<DrivenClock>(DrivenClock::standard(3, 1.2, 0.3)), d1q3,
                 ProductMeasure::uniform(3, 5), w1});
  out.push_back({"glauber d=2", std::make_shared<GlauberIsing>(0.3, 2), d2q2, ProductMeasure::uniform(2, 16), w2});
  out.push_back({"clock q=2 d=2", std::make_shared<DrivenClock>(DrivenClock::standard(2, 0.8, 0.5)), d2q2,
                 ProductMeasure::uniform(2, 16), w2});
  out.push_back({"clock q=3 d=2", std::make_shared<DrivenClock>(DrivenClock::standard(3, 1.0, 0.4)), d2q3,
                 ProductMeasure::uniform(3, 9), w3});
  return out;
}

std::string window_label(const Case& c, const Window& w) {
  std::string s = c.label + " [";
  for (std::size_t i = 0; i < w.sites().size(); ++i) s += (i ? "," : "") + std::to_string(w.sites()[i]);
  return s + "]";
}

}  // namespace

CheckResult run_check(CheckId id, const SuiteOptions& opts) {
  const bool strict = opts.profile == Profile::strict;
  const std::string name(kChecks[static_cast<std::size_t>(id)].name);
  const std::uint64_t seed = derive(opts.seed, static_cast<std::uint64_t>(id));
  std::vector<CheckResult> parts;
  auto part = [&](CheckResult r, std::string label) {
    r.name = std::move(label);
    parts.push_back(std::move(r));
  };
  switch (id) {
    case CheckId::f_bound: {
      auto r = check_F_bound(strict ? 1000000 : 100000);
      r.name = name;
      r.seed = opts.seed;
      return r;
    }
    case CheckId::beta_alpha: {
      const std::size_t n = strict ? 2000 : 200;
      const std::vector<std::pair<int, int>> shapes{{2, 1}, {2, 2}, {2, 3}, {3, 1}, {3, 2}};
      for (std::size_t i = 0; i < shapes.size(); ++i) {
        const auto [q, k] = shapes[i];
        const auto mu = i == 0 ? ProductMeasure::uniform(q, k) : random_product(derive(seed, 100 + i), q, k);
        part(check_beta_alpha(mu, n, derive(seed, i)),
             "q=" + std::to_string(q) + " sites=" + std::to_string(k));
      }
      break;
    }
    case CheckId::alpha_monotone: {
      const std::size_t n = strict ? 5000 : 300;
      const auto v2 = Volume::torus(1, 4, 2);
      const auto v3 = Volume::torus(1, 3, 3);
      part(check_alpha_monotone(v2, random_product(derive(seed, 10), 2, 4), n, derive(seed, 0)), "q=2 side 4");
      part(check_alpha_monotone(v3, random_product(derive(seed, 11), 3, 3), n, derive(seed, 1)), "q=3 side 3");
      break;
    }
    case CheckId::subadditivity: {
      auto r = check_subadditivity(strict ? 1000000 : 100000, seed);
      r.name = name;
      return r;
    }
    case CheckId::quant_diff: {
      const std::size_t laws = strict ? 8 : 2;
      auto cases = identity_cases();
      std::size_t i = 0;
      for (const auto& c : cases) {
        if (c.volume.dimension() != 1) continue;
        for (const auto& w : c.windows) {
          if (w.size() > 3) continue;
          part(check_quant_diff(*c.model, c.volume, w, laws, derive(seed, i++)), window_label(c, w));
        }
      }
      break;
    }
    case CheckId::invariance: {
      const std::size_t n = strict ? 1000 : 100;
      std::size_t i = 0;
      for (const auto& c : product_stationary_cases())
        for (const auto& w : c.windows)
          part(check_invariance(*c.model, c.volume, c.mu, w, n, derive(seed, i++)), window_label(c, w));
      break;
    }
    case CheckId::loss_identity: {
      const std::size_t n = strict ? 16 : 3;
      std::size_t i = 0;
      for (const auto& c : identity_cases())
        for (const auto& w : c.windows) {
          const WindowKernel kernel(*c.model, c.volume, w);
          part(check_loss_identity(kernel, c.mu, n, derive(seed, i++)), window_label(c, w));
        }
      break;
    }
    case CheckId::zero_loss_chain: {
      const std::size_t n = strict ? 40 : 5;
      std::size_t i = 0;
      for (const auto& c : product_stationary_cases())
        for (const auto& w : c.windows) {
          const WindowKernel kernel(*c.model, c.volume, w);
          part(check_zero_loss_chain(kernel, c.mu, n, derive(seed, i++)), window_label(c, w));
        }
      break;
    }
    case CheckId::count_:
      throw InvalidArgument("no such check");
  }
  auto r = merge(name, parts);
  r.seed = opts.seed;
  return r;
}

std::vector<CheckResult> run_suite(const SuiteOptions& opts) {
  std::vector<CheckResult> out(kChecks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < kChecks.size();) out[i] = run_check(kChecks[i].id, opts);
  };
  const int n = std::clamp(opts.threads, 1, static_cast<int>(kChecks.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

namespace {

// Clock rates with the 0 -> 1 move switched off at one site; breaks the
// stationarity of the uniform measure.
class ZeroedRate final : public RateModel {
 public:
  ZeroedRate(std::shared_ptr<const RateModel> inner, int site, Spin from, Spin to)
      : inner_(std::move(inner)), site_(site), from_(from), to_(to) {}
  std::string name() const override { return inner_->name() + "_zeroed"; }
  std::string describe() const override {
    return name() + "(" + inner_->describe() + ",site=" + std::to_string(site_) + ")";
  }
  int q() const override { return inner_->q(); }
  int radius() const override { return inner_->radius(); }
  RateBounds bounds() const override { return {0.0, inner_->bounds().max}; }
  int dimension() const override { return inner_->dimension(); }
  double rate(const LocalView& view, Spin target) const override {
    if (view.site() == site_ && view.self() == from_ && target == to_) return 0.0;
    return inner_->rate(view, target);
  }

 private:
  std::shared_ptr<const RateModel> inner_;
  int site_;
  Spin from_;
  Spin to_;
};

}  // namespace

std::vector<ControlResult> run_negative_controls(const SuiteOptions& opts) {
  const std::uint64_t seed = derive(opts.seed, 0xBAD);
  const auto v = Volume::torus(1, 5, 2);
  const auto v3 = Volume::torus(1, 5, 3);
  const Window w({1, 2, 3});
  std::vector<ControlResult> out;
  auto add = [&](std::string name, CheckResult r) { out.push_back({std::move(name), r, !r.pass}); };

  add("F bound with factor 2", check_F_bound(10000, 1e-6, 1e6, 1e-15, 2.0));
  add("beta/alpha with constant 1", check_beta_alpha(ProductMeasure::uniform(2, 1), 200, seed, 1e-12, 1.0));
  add("subadditivity reversed", check_subadditivity(10000, seed, 1e-14, true));
  add("quantitative difference with zero oscillation budget",
      check_quant_diff(GlauberIsing(0.6, 1), v, Window({2}), 2, seed, 1e-12, 0.0));
  auto clock = std::make_shared<DrivenClock>(DrivenClock::standard(3, 1.2, 0.3));
  add("invariance with one clock rate zeroed",
      check_invariance(ZeroedRate(clock, 2, 0, 1), v3, ProductMeasure::uniform(3, 5), w, 50, seed));
  add("invariance for soft FA against Bernoulli(1/2)",
      check_invariance(SoftFA(0.2, 0.3), v, ProductMeasure::uniform(2, 5), w, 50, seed));
  {
    const GlauberIsing glauber(0.6, 1);
    const WindowKernel kernel(glauber, v, w);
    add("loss identity without the boundary term",
        check_loss_identity(kernel, ProductMeasure::uniform(2, 5), 20, seed, 1e-9, true));
  }
  return out;
}

nlohmann::json to_json(const ControlResult& r) {
  return {{"name", r.name}, {"failed_as_designed", r.failed_as_designed}, {"check", to_json(r.result)}};
}

}  // namespace ips
