#include "ips/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "ips/audit.hpp"
#include "ips/functions.hpp"
#include "ips/io.hpp"

namespace ips {

namespace {

constexpr std::size_t kMaxKernelEntries = std::size_t{1} << 25;

std::size_t sz(auto v) { return static_cast<std::size_t>(v); }

std::vector<std::uint32_t> strides(int q, int k) {
  std::vector<std::uint32_t> s(sz(k));
  std::uint32_t w = 1;
  for (int i = 0; i < k; ++i) {
    s[sz(i)] = w;
    w *= static_cast<std::uint32_t>(q);
  }
  return s;
}

/// rho(eta) / mu(eta) for every window pattern, with mu given on the window.
Eigen::VectorXd density(const Distribution& rho_window, const ProductMeasure& mu_window) {
  if (rho_window.q() != mu_window.q() || rho_window.sites() != mu_window.sites())
    throw InvalidArgument("window distribution and product measure do not match");
  Eigen::VectorXd r(static_cast<Eigen::Index>(rho_window.size()));
  for (StateIndex p = 0; p < rho_window.size(); ++p) {
    const auto eta = decode(p, rho_window.q(), rho_window.sites());
    r[static_cast<Eigen::Index>(p)] = rho_window[p] / mu_window.weight(eta);
  }
  return r;
}

Eigen::VectorXd window_weights(const ProductMeasure& mu_window) {
  const StateIndex n = checked_state_count(mu_window.q(), mu_window.sites());
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  for (StateIndex p = 0; p < n; ++p) w[static_cast<Eigen::Index>(p)] = mu_window.weight(decode(p, mu_window.q(), mu_window.sites()));
  return w;
}

void require_positive(const WindowKernel& kernel, const CylinderIntegrals& cyl) {
  for (std::uint32_t p = 0; p < kernel.patterns(); ++p)
    if (!(cyl.marginal[p] > 0.0))
      throw ZeroCylinder("cylinder " + kernel.pattern_name(p) + " has zero probability");
}

}  // namespace

WindowKernel::WindowKernel(const RateModel& model, const Volume& volume, const Window& window)
    : volume_(volume), window_(window), q_(volume.q()), states_(volume.state_count()), min_rate_(0.0) {
  check_compatible(model, volume);
  validate(window, volume);
  const int k = window.size();
  if (k == 0) throw InvalidArgument("window is empty");
  patterns_ = static_cast<std::uint32_t>(checked_state_count(q_, k));
  if (sz(states_) * sz(k) * sz(q_) > kMaxKernelEntries)
    throw InfeasibleSize("window rate table exceeds 2^25 entries");
  stride_ = strides(q_, k);
  map_ = pattern_map(volume, window);
  rates_.assign(sz(states_) * sz(k) * sz(q_), 0.0);

  double lo = std::numeric_limits<double>::infinity();
  SpinConfig config(sz(volume.site_count()), 0);
  for (StateIndex s = 0; s < states_; ++s) {
    for (int x = 0; x < k; ++x) {
      const int site = window.sites()[sz(x)];
      const LocalView view(volume, config, site);
      for (Spin j = 0; j < q_; ++j) {
        if (j == config[sz(site)]) continue;
        const double r = model.rate(view, j);
        rates_[(sz(s) * sz(k) + sz(x)) * sz(q_) + sz(j)] = r;
        lo = std::min(lo, r);
      }
    }
    for (int i = 0; i < volume.site_count(); ++i) {
      if (++config[sz(i)] < q_) break;
      config[sz(i)] = 0;
    }
  }
  min_rate_ = lo;

  gamma_.resize(sz(k));
  gamma_total_.resize(sz(k));
  for (int x = 0; x < k; ++x) {
    gamma_[sz(x)] = ips::gamma(model, window, window.sites()[sz(x)], volume);
    gamma_total_[sz(x)] = ips::gamma_total(model, window, window.sites()[sz(x)], volume);
  }
}

Spin WindowKernel::spin(std::uint32_t pattern, int x) const {
  return static_cast<Spin>((pattern / stride_[sz(x)]) % static_cast<std::uint32_t>(q_));
}

std::uint32_t WindowKernel::flipped(std::uint32_t pattern, int x, Spin j) const {
  const auto own = static_cast<std::uint32_t>(spin(pattern, x));
  return pattern - own * stride_[sz(x)] + static_cast<std::uint32_t>(j) * stride_[sz(x)];
}

CylinderIntegrals WindowKernel::integrate(const Distribution& nu) const {
  if (nu.size() != states_ || nu.q() != q_) throw InvalidArgument("distribution does not live on the kernel's volume");
  const int k = size();
  CylinderIntegrals c;
  c.q = q_;
  c.k = k;
  c.marginal = Eigen::VectorXd::Zero(patterns_);
  c.integral.assign(sz(patterns_) * sz(k) * sz(q_), 0.0);
  const std::size_t row = sz(k) * sz(q_);
  for (StateIndex s = 0; s < states_; ++s) {
    const double w = nu[s];
    if (w == 0.0) continue;
    const std::uint32_t p = map_[sz(s)];
    c.marginal[p] += w;
    const double* r = rates_.data() + sz(s) * row;
    double* out = c.integral.data() + sz(p) * row;
    for (std::size_t i = 0; i < row; ++i) out[i] += w * r[i];
  }
  return c;
}

Eigen::VectorXd WindowKernel::pattern_weights(const ProductMeasure& mu) const {
  if (mu.sites() != volume_.site_count() || mu.q() != q_)
    throw InvalidArgument("product measure does not live on the kernel's volume");
  return window_weights(mu.restrict(window_));
}

std::string WindowKernel::pattern_name(std::uint32_t pattern) const {
  std::string s = "{";
  for (int x = 0; x < size(); ++x) {
    if (x) s += ',';
    s += std::to_string(window_.sites()[sz(x)]) + ':' + std::to_string(spin(pattern, x));
  }
  return s + '}';
}

double rel_entropy(const Distribution& nu_window, const ProductMeasure& mu_window) {
  if (nu_window.q() != mu_window.q() || nu_window.sites() != mu_window.sites())
    throw InvalidArgument("window distribution and product measure do not match");
  double h = 0.0;
  for (StateIndex p = 0; p < nu_window.size(); ++p) {
    const double a = nu_window[p];
    if (a == 0.0) continue;
    const double b = mu_window.weight(decode(p, nu_window.q(), nu_window.sites()));
    if (b == 0.0) return std::numeric_limits<double>::infinity();
    h += a * std::log(a / b);
  }
  return h;
}

double rel_entropy(const Distribution& nu, const ProductMeasure& mu, const Volume& volume, const Window& window) {
  return rel_entropy(marginalize(nu, volume, window), mu.restrict(window));
}

namespace {

double loss_direct(const WindowKernel& kernel, const CylinderIntegrals& cyl, const Eigen::VectorXd& mu_w) {
  require_positive(kernel, cyl);
  double g = 0.0;
  for (std::uint32_t p = 0; p < kernel.patterns(); ++p) {
    const double log_ratio = std::log(cyl.marginal[p] / mu_w[p]);
    double flow = 0.0;
    for (int x = 0; x < kernel.size(); ++x) {
      const Spin own = kernel.spin(p, x);
      for (Spin i = 0; i < kernel.q(); ++i) {
        if (i == own) continue;
        flow += cyl.at(kernel.flipped(p, x, i), x, own) - cyl.at(p, x, i);
      }
    }
    g += flow * log_ratio;
  }
  return g;
}

LossSplit loss_rewritten(const WindowKernel& kernel, const CylinderIntegrals& cyl, const Eigen::VectorXd& mu_w) {
  require_positive(kernel, cyl);
  LossSplit out;
  for (std::uint32_t p = 0; p < kernel.patterns(); ++p) {
    for (int x = 0; x < kernel.size(); ++x) {
      const Spin own = kernel.spin(p, x);
      for (Spin j = 0; j < kernel.q(); ++j) {
        if (j == own) continue;
        const std::uint32_t f = kernel.flipped(p, x, j);
        const double s = (mu_w[p] / mu_w[f]) * (cyl.marginal[f] / cyl.marginal[p]);
        const double I = cyl.at(p, x, j);
        out.bulk -= F(1.0 / s) * s * I;
        out.boundary -= I - s * I;
      }
    }
  }
  return out;
}

double alpha_from(const Eigen::VectorXd& r, const Eigen::VectorXd& mu_w, int q, int x) {
  const auto st = strides(q, x + 1);
  const std::uint32_t stride = st[sz(x)];
  double a = 0.0;
  for (Eigen::Index p = 0; p < r.size(); ++p) {
    const auto own = static_cast<Spin>((static_cast<std::uint32_t>(p) / stride) % static_cast<std::uint32_t>(q));
    for (Spin j = 0; j < q; ++j) {
      if (j == own) continue;
      const auto f = static_cast<Eigen::Index>(static_cast<std::uint32_t>(p) + static_cast<std::uint32_t>(j) * stride -
                                               static_cast<std::uint32_t>(own) * stride);
      const double d = std::sqrt(r[f]) - std::sqrt(r[p]);
      a += d * d * mu_w[p];
    }
  }
  return a;
}

double beta_from(const Eigen::VectorXd& r, const Eigen::VectorXd& mu_w, int q, int x) {
  const auto st = strides(q, x + 1);
  const std::uint32_t stride = st[sz(x)];
  double b = 0.0;
  for (Eigen::Index p = 0; p < r.size(); ++p) {
    const auto own = static_cast<Spin>((static_cast<std::uint32_t>(p) / stride) % static_cast<std::uint32_t>(q));
    for (Spin j = 0; j < q; ++j) {
      if (j == own) continue;
      const auto f = static_cast<Eigen::Index>(static_cast<std::uint32_t>(p) + static_cast<std::uint32_t>(j) * stride -
                                               static_cast<std::uint32_t>(own) * stride);
      b += std::abs(r[f] - r[p]) * mu_w[p];
    }
  }
  return b;
}

void check_local(int x, int sites) {
  if (x < 0 || x >= sites) throw InvalidArgument("site is not in the window");
}

}  // namespace

double entropy_loss_direct(const WindowKernel& kernel, const Distribution& nu, const ProductMeasure& mu) {
  return loss_direct(kernel, kernel.integrate(nu), kernel.pattern_weights(mu));
}

LossSplit entropy_loss_rewritten(const WindowKernel& kernel, const Distribution& nu, const ProductMeasure& mu) {
  return loss_rewritten(kernel, kernel.integrate(nu), kernel.pattern_weights(mu));
}

double window_rate(const CylinderIntegrals& cyl, std::uint32_t pattern, int x, Spin j) {
  const double m = cyl.marginal[pattern];
  if (!(m > 0.0)) throw ZeroCylinder("window rate on a zero-probability cylinder (pattern " + std::to_string(pattern) + ")");
  return cyl.at(pattern, x, j) / m;
}

double window_rate(const WindowKernel& kernel, const Distribution& rho, int x, std::span<const Spin> eta_window,
                   Spin j) {
  if (static_cast<int>(eta_window.size()) != kernel.size()) throw InvalidArgument("pattern length differs from window size");
  check_local(x, kernel.size());
  if (j < 0 || j >= kernel.q()) throw InvalidArgument("target spin out of range");
  for (Spin s : eta_window)
    if (s < 0 || s >= kernel.q()) throw InvalidArgument("pattern spin out of range");
  const auto p = static_cast<std::uint32_t>(encode(eta_window, kernel.q()));
  const auto cyl = kernel.integrate(rho);
  if (!(cyl.marginal[p] > 0.0))
    throw ZeroCylinder("cylinder " + kernel.pattern_name(p) + " has zero probability");
  return window_rate(cyl, p, x, j);
}

double alpha(const Distribution& rho_window, const ProductMeasure& mu_window, int x) {
  check_local(x, mu_window.sites());
  return alpha_from(density(rho_window, mu_window), window_weights(mu_window), mu_window.q(), x);
}

double beta(const Distribution& rho_window, const ProductMeasure& mu_window, int x) {
  check_local(x, mu_window.sites());
  return beta_from(density(rho_window, mu_window), window_weights(mu_window), mu_window.q(), x);
}

double alpha(const Distribution& rho, const ProductMeasure& mu, const Volume& volume, const Window& window, int site) {
  return alpha(marginalize(rho, volume, window), mu.restrict(window), window.local_index(site));
}

double beta(const Distribution& rho, const ProductMeasure& mu, const Volume& volume, const Window& window, int site) {
  return beta(marginalize(rho, volume, window), mu.restrict(window), window.local_index(site));
}

double invariance_sum(const WindowKernel& kernel, const CylinderIntegrals& mu_integrals, const ProductMeasure& mu,
                      const Distribution& rho_window) {
  const auto mu_w = kernel.pattern_weights(mu);
  if (rho_window.size() != kernel.patterns()) throw InvalidArgument("distribution does not live on the window");
  double total = 0.0;
  for (std::uint32_t p = 0; p < kernel.patterns(); ++p) {
    const double rp = rho_window[p] / mu_w[p];
    for (int x = 0; x < kernel.size(); ++x) {
      const Spin own = kernel.spin(p, x);
      for (Spin j = 0; j < kernel.q(); ++j) {
        if (j == own) continue;
        const std::uint32_t f = kernel.flipped(p, x, j);
        total += mu_integrals.at(p, x, j) * (rho_window[f] / mu_w[f] - rp);
      }
    }
  }
  return total;
}

double EntropyReport::sum_alpha() const {
  double s = 0.0;
  for (double a : alpha) s += a;
  return s;
}

double EntropyReport::sum_beta() const {
  double s = 0.0;
  for (double b : beta) s += b;
  return s;
}

double EntropyReport::sum_gamma_beta() const {
  double s = 0.0;
  for (std::size_t i = 0; i < beta.size(); ++i) s += gamma[i] * beta[i];
  return s;
}

EntropyReport entropy_report(const WindowKernel& kernel, const Distribution& nu, const ProductMeasure& mu) {
  const auto cyl = kernel.integrate(nu);
  const auto mu_w = kernel.pattern_weights(mu);
  EntropyReport rep;
  rep.window = kernel.window();
  const Distribution nu_w(kernel.q(), kernel.size(), cyl.marginal);
  rep.h = rel_entropy(nu_w, mu.restrict(kernel.window()));
  rep.g_direct = loss_direct(kernel, cyl, mu_w);
  const auto split = loss_rewritten(kernel, cyl, mu_w);
  rep.bulk = split.bulk;
  rep.boundary = split.boundary;
  rep.g_rewritten = split.total();
  Eigen::VectorXd r = cyl.marginal.cwiseQuotient(mu_w);
  rep.gamma = kernel.gamma();
  for (int x = 0; x < kernel.size(); ++x) {
    rep.alpha.push_back(alpha_from(r, mu_w, kernel.q(), x));
    rep.beta.push_back(beta_from(r, mu_w, kernel.q(), x));
  }
  return rep;
}

namespace {

TraceRow row_of(double t, const EntropyReport& r) {
  return {t, r.h, r.g_direct, r.bulk, r.boundary, r.sum_alpha(), r.sum_beta(), r.sum_gamma_beta()};
}

}  // namespace

std::vector<TraceRow> entropy_trace(const WindowKernel& kernel, const GeneratorMatrix& gen, const Distribution& nu0,
                                    const ProductMeasure& mu, std::span<const double> times, int threads,
                                    double tol) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0) || !std::isfinite(times[i])) throw InvalidArgument("trace times must be finite and >= 0");
    if (i && times[i] < times[i - 1]) throw InvalidArgument("trace times must be non-decreasing");
  }
  const std::size_t batch = sz(std::max(1, threads));
  std::vector<TraceRow> rows(times.size());
  Distribution current = nu0;
  double t_now = 0.0;
  for (std::size_t start = 0; start < times.size(); start += batch) {
    const std::size_t end = std::min(times.size(), start + batch);
    std::vector<Distribution> states;
    for (std::size_t i = start; i < end; ++i) {
      current = evolve(current, gen, times[i] - t_now, tol);
      t_now = times[i];
      states.push_back(current);
    }
    std::vector<std::exception_ptr> errors(end - start);
    auto work = [&](std::size_t i) {
      try {
        rows[start + i] = row_of(times[start + i], entropy_report(kernel, states[i], mu));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    };
    if (end - start == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t i = 0; i < end - start; ++i) pool.emplace_back(work, i);
      for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return rows;
}

std::string trace_csv(const std::vector<TraceRow>& rows) {
  std::string out = std::string(kTraceSchema) + "\n";
  out += "t,h,g_direct,bulk,boundary,sum_alpha,sum_beta,sum_gamma_beta\n";
  for (const auto& r : rows) {
    for (double v : {r.t, r.h, r.g_direct, r.bulk, r.boundary, r.sum_alpha, r.sum_beta}) out += format_real(v) + ",";
    out += format_real(r.sum_gamma_beta) + "\n";
  }
  return out;
}

nlohmann::json trace_json(const std::vector<TraceRow>& rows) {
  auto j = nlohmann::json::array();
  for (const auto& r : rows)
    j.push_back({{"t", r.t},
                 {"h", r.h},
                 {"g_direct", r.g_direct},
                 {"bulk", r.bulk},
                 {"boundary", r.boundary},
                 {"sum_alpha", r.sum_alpha},
                 {"sum_beta", r.sum_beta},
                 {"sum_gamma_beta", r.sum_gamma_beta}});
  return j;
}

LossIntegral integrate_loss(const WindowKernel& kernel, const GeneratorMatrix& gen, const Distribution& nu0,
                            const ProductMeasure& mu, double T, double tol, int max_intervals) {
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("integration horizon must be positive");
  if (!(tol > 0.0)) throw InvalidArgument("quadrature tolerance must be positive");

  struct Sums {
    double g = 0, bulk = 0, boundary = 0, alpha = 0, gamma_beta = 0;
  };
  LossIntegral out;
  double h0 = 0.0, hT = 0.0;
  auto trapezoid = [&](int n) {
    const double dt = T / n;
    Sums s;
    Distribution nu = nu0;
    for (int i = 0; i <= n; ++i) {
      if (i) nu = evolve(nu, gen, dt, 1e-15);
      const auto r = entropy_report(kernel, nu, mu);
      const double w = (i == 0 || i == n) ? 0.5 * dt : dt;
      s.g += w * r.g_direct;
      s.bulk += w * r.bulk;
      s.boundary += w * r.boundary;
      s.alpha += w * r.sum_alpha();
      s.gamma_beta += w * r.sum_gamma_beta();
      if (i == 0) h0 = r.h;
      if (i == n) hT = r.h;
    }
    return s;
  };
  auto extrapolate = [](double fine, double coarse) { return fine + (fine - coarse) / 3.0; };

  int n = 8;
  Sums coarse = trapezoid(n);
  bool have_previous = false;
  Sums previous;
  while (true) {
    n *= 2;
    const Sums fine = trapezoid(n);
    Sums r;
    r.g = extrapolate(fine.g, coarse.g);
    r.bulk = extrapolate(fine.bulk, coarse.bulk);
    r.boundary = extrapolate(fine.boundary, coarse.boundary);
    r.alpha = extrapolate(fine.alpha, coarse.alpha);
    r.gamma_beta = extrapolate(fine.gamma_beta, coarse.gamma_beta);
    out.g = r.g;
    out.bulk = r.bulk;
    out.boundary = r.boundary;
    out.sum_alpha = r.alpha;
    out.sum_gamma_beta = r.gamma_beta;
    out.intervals = n;
    if (have_previous) {
      out.error_estimate = std::max({std::abs(r.g - previous.g), std::abs(r.bulk - previous.bulk),
                                     std::abs(r.boundary - previous.boundary)});
      out.converged = out.error_estimate < tol;
    } else {
      out.error_estimate = std::abs(fine.g - coarse.g) / 3.0;
    }
    if (out.converged || n >= max_intervals) break;
    previous = r;
    have_previous = true;
    coarse = fine;
  }
  out.entropy_change = hT - h0;
  return out;
}

}  // namespace ips
