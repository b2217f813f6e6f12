#include "ips/audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ips/random.hpp"

namespace ips {

namespace {

/// Rates of site x for every configuration of its dependency ball, other
/// sites held at spin 0.
struct BallRates {
  std::vector<int> sites;  // dependency ball, sorted
  int q = 0;
  std::size_t configs = 0;
  std::vector<double> rates;  // [config * q + j]; NaN when j == eta_x
  std::vector<Spin> self;     // eta_x per config

  double at(std::size_t config, Spin j) const { return rates[config * static_cast<std::size_t>(q) + static_cast<std::size_t>(j)]; }
};

BallRates ball_rates(const RateModel& model, const Volume& volume, int x) {
  if (model.radius() < 0)
    throw InfeasibleSize("model " + model.name() + " declares unbounded range; exact oscillations are unavailable");
  BallRates br;
  br.q = volume.q();
  br.sites = volume.ball(x, model.radius());
  br.configs = 1;
  for (std::size_t k = 0; k < br.sites.size(); ++k) {
    br.configs *= static_cast<std::size_t>(br.q);
    if (br.configs > kMaxOscillationStates)
      throw InfeasibleSize("dependency ball of site " + std::to_string(x) + " has more than 2^22 configurations");
  }
  br.rates.assign(br.configs * static_cast<std::size_t>(br.q), std::numeric_limits<double>::quiet_NaN());
  br.self.resize(br.configs);
  SpinConfig config(static_cast<std::size_t>(volume.site_count()), 0);
  for (std::size_t c = 0; c < br.configs; ++c) {
    std::size_t rest = c;
    for (int s : br.sites) {
      config[static_cast<std::size_t>(s)] = static_cast<Spin>(rest % static_cast<std::size_t>(br.q));
      rest /= static_cast<std::size_t>(br.q);
    }
    const LocalView view(volume, config, x);
    br.self[c] = view.self();
    for (Spin j = 0; j < br.q; ++j)
      if (j != view.self()) br.rates[c * static_cast<std::size_t>(br.q) + static_cast<std::size_t>(j)] = model.rate(view, j);
  }
  return br;
}

std::string ball_pattern(const BallRates& br, std::size_t config) {
  std::string s;
  for (std::size_t k = 0; k < br.sites.size(); ++k) {
    s += static_cast<char>('0' + config % static_cast<std::size_t>(br.q));
    config /= static_cast<std::size_t>(br.q);
  }
  return s;
}

OscillationEntry entry_for(const BallRates& br, int x, std::size_t pos) {
  OscillationEntry e;
  e.x = x;
  e.y = br.sites[pos];
  e.per_target.assign(static_cast<std::size_t>(br.q), 0.0);
  std::size_t stride = 1;
  for (std::size_t k = 0; k < pos; ++k) stride *= static_cast<std::size_t>(br.q);
  for (std::size_t c = 0; c < br.configs; ++c) {
    if ((c / stride) % static_cast<std::size_t>(br.q) != 0) continue;
    // c ranges over configurations with eta_y = 0; vary eta_y.
    std::vector<double> lo(static_cast<std::size_t>(br.q), std::numeric_limits<double>::infinity());
    std::vector<double> hi(static_cast<std::size_t>(br.q), -std::numeric_limits<double>::infinity());
    double tlo = std::numeric_limits<double>::infinity();
    double thi = -tlo;
    for (int v = 0; v < br.q; ++v) {
      const std::size_t cv = c + static_cast<std::size_t>(v) * stride;
      double total = 0.0;
      for (Spin j = 0; j < br.q; ++j) {
        const double r = br.at(cv, j);
        if (std::isnan(r)) continue;
        total += r;
        lo[static_cast<std::size_t>(j)] = std::min(lo[static_cast<std::size_t>(j)], r);
        hi[static_cast<std::size_t>(j)] = std::max(hi[static_cast<std::size_t>(j)], r);
      }
      tlo = std::min(tlo, total);
      thi = std::max(thi, total);
    }
    for (Spin j = 0; j < br.q; ++j)
      if (hi[static_cast<std::size_t>(j)] >= lo[static_cast<std::size_t>(j)])
        e.per_target[static_cast<std::size_t>(j)] =
            std::max(e.per_target[static_cast<std::size_t>(j)], hi[static_cast<std::size_t>(j)] - lo[static_cast<std::size_t>(j)]);
    e.total = std::max(e.total, thi - tlo);
  }
  return e;
}

}  // namespace

double OscillationEntry::per_target_sum() const { return std::accumulate(per_target.begin(), per_target.end(), 0.0); }

std::vector<OscillationEntry> oscillations(const RateModel& model, const Volume& volume, int x) {
  check_compatible(model, volume);
  const auto br = ball_rates(model, volume, x);
  std::vector<OscillationEntry> out;
  for (std::size_t pos = 0; pos < br.sites.size(); ++pos)
    if (br.sites[pos] != x) out.push_back(entry_for(br, x, pos));
  return out;
}

double oscillation(const RateModel& model, const Volume& volume, int x, int y, std::optional<Spin> target) {
  if (y < 0 || y >= volume.site_count()) throw InvalidArgument("site out of range");
  if (target && (*target < 0 || *target >= volume.q())) throw InvalidArgument("target out of range");
  for (const auto& e : oscillations(model, volume, x))
    if (e.y == y) return target ? e.per_target[static_cast<std::size_t>(*target)] : e.total;
  return 0.0;
}

double gamma(const RateModel& model, const Window& window, int x, const Volume& volume) {
  validate(window, volume);
  double g = 0.0;
  for (const auto& e : oscillations(model, volume, x))
    if (!window.contains(e.y)) g += e.per_target_sum();
  return g;
}

double gamma_total(const RateModel& model, const Window& window, int x, const Volume& volume) {
  validate(window, volume);
  double g = 0.0;
  for (const auto& e : oscillations(model, volume, x))
    if (!window.contains(e.y)) g += e.total;
  return g;
}

std::vector<Window> window_ladder(const Volume& volume, int n) {
  std::vector<Window> out;
  for (int k = 1; k <= n; ++k) out.push_back(Window::box(volume, k));
  return out;
}

RateAudit audit(const RateModel& model, const Volume& volume, const std::vector<Window>& ladder, std::uint64_t seed,
                int radius_samples) {
  check_compatible(model, volume);
  for (const auto& w : ladder) validate(w, volume);
  RateAudit a;
  const int n = volume.site_count();
  const int q = volume.q();
  const auto declared = model.bounds();
  constexpr double kBoundSlack = 1e-12;

  a.min_rate = std::numeric_limits<double>::infinity();
  bool r3_reported = false;
  bool bounds_reported = false;
  std::vector<std::vector<double>> per_target_by_site(static_cast<std::size_t>(n));

  for (int x = 0; x < n; ++x) {
    const auto br = ball_rates(model, volume, x);
    std::vector<double> sup_j(static_cast<std::size_t>(q), 0.0);
    for (std::size_t c = 0; c < br.configs; ++c) {
      for (Spin j = 0; j < q; ++j) {
        const double r = br.at(c, j);
        if (std::isnan(r)) continue;
        sup_j[static_cast<std::size_t>(j)] = std::max(sup_j[static_cast<std::size_t>(j)], r);
        a.max_rate = std::max(a.max_rate, r);
        if (r < a.min_rate) a.min_rate = r;
        if (!(r > 0.0) && !r3_reported) {
          a.failures.push_back({"R3", x, ball_pattern(br, c), j, r,
                                "rate vanishes at site " + std::to_string(x) + " towards spin " + std::to_string(j)});
          r3_reported = true;
        }
        const double slack = kBoundSlack * std::max(1.0, std::abs(declared.max));
        if ((r < declared.min - slack || r > declared.max + slack) && !bounds_reported) {
          a.failures.push_back({"bounds", x, ball_pattern(br, c), j, r, "rate outside the declared bounds"});
          bounds_reported = true;
        }
      }
    }
    a.sup_rate = std::max(a.sup_rate, std::accumulate(sup_j.begin(), sup_j.end(), 0.0));
    for (std::size_t pos = 0; pos < br.sites.size(); ++pos)
      if (br.sites[pos] != x) a.oscillations.push_back(entry_for(br, x, pos));
  }
  a.r1 = std::isfinite(a.sup_rate);
  if (!a.r1) a.failures.push_back({"R1", -1, "", -1, a.sup_rate, "rates are unbounded"});
  a.r3 = a.min_rate > 0.0;
  a.bounds_ok = !bounds_reported;

  // Short-range sum over offsets v of |v| sup_x delta_{x+v} c_x(.)
  if (model.radius() < 0) {
    a.r4 = false;
    a.r4_sum = std::numeric_limits<double>::infinity();
    a.failures.push_back({"R4", -1, "", -1, a.r4_sum, "declared radius is unbounded; no finite-range certificate"});
  } else {
    const int d = volume.dimension();
    const int r = model.radius();
    const int width = 2 * r + 1;
    int count = 1;
    for (int k = 0; k < d; ++k) count *= width;
    for (int m = 0; m < count; ++m) {
      std::vector<int> delta(static_cast<std::size_t>(d));
      int rest = m;
      double norm2 = 0.0;
      for (int k = d - 1; k >= 0; --k) {
        delta[static_cast<std::size_t>(k)] = rest % width - r;
        norm2 += static_cast<double>(delta[static_cast<std::size_t>(k)] * delta[static_cast<std::size_t>(k)]);
        rest /= width;
      }
      if (norm2 == 0.0) continue;
      double sup = 0.0;
      for (int x = 0; x < n; ++x) {
        const auto y = volume.offset(x, delta);
        if (!y.is_site() || y.site == x) continue;
        for (const auto& e : a.oscillations)
          if (e.x == x && e.y == y.site) sup = std::max(sup, e.total);
      }
      a.r4_sum += std::sqrt(norm2) * sup;
    }
    a.r4 = std::isfinite(a.r4_sum);
    if (!a.r4) a.failures.push_back({"R4", -1, "", -1, a.r4_sum, "short-range sum diverges"});
  }

  // Declared radius: spins beyond it must not change c_x.
  {
    const int r = model.radius();
    std::size_t states = 1;
    bool small = true;
    for (int k = 0; k < n && small; ++k) {
      states *= static_cast<std::size_t>(q);
      small = states <= 4096;
    }
    a.radius_exhaustive = small;
    CounterRng rng(seed, 0x5241444955ULL);
    const std::size_t trials = small ? states : static_cast<std::size_t>(radius_samples);
    bool ok = true;
    for (std::size_t t = 0; t < trials && ok; ++t) {
      SpinConfig config = small ? decode(t, q, n) : SpinConfig(static_cast<std::size_t>(n));
      if (!small)
        for (auto& s : config) s = static_cast<Spin>(rng.below(static_cast<std::uint64_t>(q)));
      for (int x = 0; x < n && ok; ++x) {
        for (int y = 0; y < n && ok; ++y) {
          if (volume.distance(x, y) <= r) continue;
          for (Spin v = 0; v < q && ok; ++v) {
            if (v == config[static_cast<std::size_t>(y)]) continue;
            const auto other = flip(config, y, v);
            for (Spin j = 0; j < q; ++j) {
              if (j == config[static_cast<std::size_t>(x)]) continue;
              const double before = model.rate(LocalView(volume, config, x), j);
              const double after = model.rate(LocalView(volume, other, x), j);
              if (before != after) {
                std::string pat;
                for (Spin s : config) pat += static_cast<char>('0' + s);
                a.failures.push_back({"radius", x, pat, j, after - before,
                                      "site " + std::to_string(y) + " beyond the declared radius changes the rate"});
                ok = false;
                break;
              }
            }
          }
        }
      }
    }
    a.radius_ok = ok;
  }

  // gamma ladder and the constants C1, C2
  const int d = volume.dimension();
  std::vector<double> c1_acc(static_cast<std::size_t>(n), 0.0);
  std::vector<double> c1_total_acc(static_cast<std::size_t>(n), 0.0);
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    WindowGamma wg{ladder[k], std::vector<double>(static_cast<std::size_t>(n), 0.0),
                   std::vector<double>(static_cast<std::size_t>(n), 0.0)};
    for (const auto& e : a.oscillations) {
      if (!wg.window.contains(e.x) || wg.window.contains(e.y)) continue;
      wg.gamma[static_cast<std::size_t>(e.x)] += e.per_target_sum();
      wg.gamma_total[static_cast<std::size_t>(e.x)] += e.total;
    }
    double sum = 0.0;
    double sum_total = 0.0;
    for (int x = 0; x < n; ++x) {
      sum += wg.gamma[static_cast<std::size_t>(x)];
      sum_total += wg.gamma_total[static_cast<std::size_t>(x)];
      c1_acc[static_cast<std::size_t>(x)] += wg.gamma[static_cast<std::size_t>(x)];
      c1_total_acc[static_cast<std::size_t>(x)] += wg.gamma_total[static_cast<std::size_t>(x)];
    }
    const double scale = std::pow(static_cast<double>(k + 1), -(d - 1));
    a.c2 = std::max(a.c2, scale * sum);
    a.c2_total = std::max(a.c2_total, scale * sum_total);
    a.ladder.push_back(std::move(wg));
  }
  for (int x = 0; x < n; ++x) {
    a.c1 = std::max(a.c1, c1_acc[static_cast<std::size_t>(x)]);
    a.c1_total = std::max(a.c1_total, c1_total_acc[static_cast<std::size_t>(x)]);
  }
  return a;
}

}  // namespace ips
