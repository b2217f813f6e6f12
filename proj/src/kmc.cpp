#include "ips/kmc.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <thread>

#include "ips/error.hpp"
#include "ips/exact.hpp"
#include "ips/io.hpp"
#include "ips/random.hpp"

namespace ips {

namespace {

constexpr char kMagic[8] = {'I', 'P', 'S', 'T', 'R', 'A', 'J', '1'};

// Sum tree over site rates; internal nodes are re-summed from their
// children, so updates do not accumulate drift.
class SumTree {
 public:
  explicit SumTree(std::size_t n) : leaves_(std::bit_ceil(std::max<std::size_t>(n, 1))), node_(2 * leaves_, 0.0) {}

  void set(std::size_t i, double v) {
    std::size_t k = leaves_ + i;
    node_[k] = v;
    for (k /= 2; k >= 1; k /= 2) node_[k] = node_[2 * k] + node_[2 * k + 1];
  }
  double total() const { return node_[1]; }
  double leaf(std::size_t i) const { return node_[leaves_ + i]; }

  /// Leaf whose cumulative interval contains u in [0, total).
  std::size_t find(double u) const {
    std::size_t k = 1;
    while (k < leaves_) {
      const double left = node_[2 * k];
      if (u < left || node_[2 * k + 1] <= 0.0) {
        k = 2 * k;
      } else {
        u -= left;
        k = 2 * k + 1;
      }
    }
    // rounding can land on an empty leaf; step back to a charged one
    std::size_t i = k - leaves_;
    while (node_[leaves_ + i] <= 0.0 && i > 0) --i;
    return i;
  }

 private:
  std::size_t leaves_;
  std::vector<double> node_;
};

class Gillespie {
 public:
  Gillespie(const RateModel& model, const Volume& volume, SpinConfig init, std::uint64_t seed, std::uint64_t index)
      : model_(model), volume_(volume), q_(volume.q()), eta_(std::move(init)), rng_(seed, index),
        tree_(static_cast<std::size_t>(volume.site_count())),
        rates_(static_cast<std::size_t>(volume.site_count() * volume.q()), 0.0) {
    check_compatible(model, volume);
    validate(eta_, volume);
    const int n = volume.site_count();
    const int r = model.radius();
    affected_.resize(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) {
      auto& a = affected_[static_cast<std::size_t>(x)];
      if (r < 0 || r * 2 + 1 >= volume.side()) {
        a.resize(static_cast<std::size_t>(n));
        for (int y = 0; y < n; ++y) a[static_cast<std::size_t>(y)] = y;
      } else {
        a = volume.ball(x, r);
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
      }
    }
    for (int x = 0; x < n; ++x) refresh(x);
  }

  const SpinConfig& state() const { return eta_; }
  double time() const { return t_; }

  /// Advance to the next event if it happens by t_end; false (and t = t_end) otherwise.
  bool step(double t_end, Event* ev) {
    const double total = tree_.total();
    if (!(total > 0.0)) {
      t_ = t_end;
      return false;
    }
    const double next = t_ + rng_.exponential() / total;
    if (next > t_end) {
      t_ = t_end;
      return false;
    }
    const auto x = tree_.find(rng_.uniform() * total);
    const double site_total = tree_.leaf(x);
    double u = rng_.uniform() * site_total;
    Spin j = -1;
    for (Spin k = 0; k < q_; ++k) {
      const double c = rates_[x * static_cast<std::size_t>(q_) + static_cast<std::size_t>(k)];
      if (c <= 0.0) continue;
      j = k;
      if (u < c) break;
      u -= c;
    }
    t_ = next;
    eta_[x] = j;
    for (int y : affected_[x]) refresh(y);
    if (ev) *ev = {t_, static_cast<std::uint32_t>(x), j};
    return true;
  }

 private:
  void refresh(int x) {
    const LocalView view(volume_, eta_, x);
    const Spin self = eta_[static_cast<std::size_t>(x)];
    double sum = 0.0;
    for (Spin j = 0; j < q_; ++j) {
      const double c = j == self ? 0.0 : model_.rate(view, j);
      rates_[static_cast<std::size_t>(x * q_ + j)] = c;
      sum += c;
    }
    tree_.set(static_cast<std::size_t>(x), sum);
  }

  const RateModel& model_;
  const Volume& volume_;
  int q_;
  SpinConfig eta_;
  CounterRng rng_;
  SumTree tree_;
  std::vector<double> rates_;
  std::vector<std::vector<int>> affected_;
  double t_ = 0.0;
};

std::uint32_t window_pattern(const SpinConfig& eta, const Window& window, int q) {
  std::uint32_t p = 0, stride = 1;
  for (int s : window.sites()) {
    p += static_cast<std::uint32_t>(eta[static_cast<std::size_t>(s)]) * stride;
    stride *= static_cast<std::uint32_t>(q);
  }
  return p;
}

std::string window_pattern_name(std::uint32_t p, const Window& window, int q) {
  std::string s = "{";
  for (std::size_t i = 0; i < window.sites().size(); ++i) {
    s += (i ? "," : "") + std::to_string(window.sites()[i]) + ":" + std::to_string(p % static_cast<std::uint32_t>(q));
    p /= static_cast<std::uint32_t>(q);
  }
  return s + "}";
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw InvalidArgument("truncated trajectory log");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

template <typename F>
void parallel_for(std::uint64_t n, int threads, F&& body) {
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t i; (i = next.fetch_add(1)) < n;) body(i);
  };
  const int t = static_cast<int>(std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::max(threads, 1)), 1, std::max<std::uint64_t>(n, 1)));
  std::vector<std::thread> pool;
  for (int k = 1; k < t; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace

SpinConfig Trajectory::at(double t) const {
  SpinConfig eta = initial;
  for (const auto& e : events) {
    if (e.time > t) break;
    eta[e.site] = e.spin;
  }
  return eta;
}

Trajectory simulate(const RateModel& model, const Volume& volume, const SpinConfig& init, double t_end,
                    std::uint64_t seed, std::uint64_t index) {
  if (!(t_end >= 0.0)) throw InvalidArgument("t_end must be non-negative");
  Trajectory tr;
  tr.seed = seed;
  tr.index = index;
  tr.model_hash = model_hash(model);
  tr.d = static_cast<std::uint32_t>(volume.dimension());
  tr.side = static_cast<std::uint32_t>(volume.side());
  tr.q = static_cast<std::uint32_t>(volume.q());
  tr.boundary = volume.boundary() == BoundaryKind::periodic ? 0u : 1u;
  tr.initial = init;
  tr.t_end = t_end;
  Gillespie g(model, volume, init, seed, index);
  Event ev;
  while (g.step(t_end, &ev)) tr.events.push_back(ev);
  tr.final_config = g.state();
  return tr;
}

std::vector<SpinConfig> sample_path(const RateModel& model, const Volume& volume, const SpinConfig& init,
                                    std::span<const double> times, std::uint64_t seed, std::uint64_t index) {
  std::vector<SpinConfig> out;
  out.reserve(times.size());
  Gillespie g(model, volume, init, seed, index);
  double prev = 0.0;
  for (double t : times) {
    if (!(t >= prev)) throw InvalidArgument("time grid must be non-negative and non-decreasing");
    prev = t;
    while (g.step(t, nullptr)) {
    }
    out.push_back(g.state());
  }
  return out;
}

std::string trajectory_bytes(const Trajectory& tr) {
  std::string out(kMagic, sizeof kMagic);
  put(out, tr.seed);
  put(out, tr.index);
  put(out, tr.model_hash);
  put(out, tr.d);
  put(out, tr.side);
  put(out, tr.q);
  put(out, static_cast<std::uint32_t>(tr.initial.size()));
  put(out, tr.boundary);
  put(out, tr.t_end);
  for (Spin s : tr.initial) put(out, static_cast<std::uint8_t>(s));
  put(out, static_cast<std::uint64_t>(tr.events.size()));
  for (const auto& e : tr.events) {
    put(out, e.time);
    put(out, e.site);
    put(out, static_cast<std::uint32_t>(e.spin));
  }
  return out;
}

Trajectory trajectory_from_bytes(const std::string& in) {
  if (in.size() < 8 || std::memcmp(in.data(), kMagic, 8) != 0) throw InvalidArgument("not a trajectory log");
  std::size_t pos = 8;
  Trajectory tr;
  tr.seed = take<std::uint64_t>(in, pos);
  tr.index = take<std::uint64_t>(in, pos);
  tr.model_hash = take<std::uint64_t>(in, pos);
  tr.d = take<std::uint32_t>(in, pos);
  tr.side = take<std::uint32_t>(in, pos);
  tr.q = take<std::uint32_t>(in, pos);
  const auto sites = take<std::uint32_t>(in, pos);
  tr.boundary = take<std::uint32_t>(in, pos);
  tr.t_end = take<double>(in, pos);
  tr.initial.resize(sites);
  for (auto& s : tr.initial) s = take<std::uint8_t>(in, pos);
  const auto n = take<std::uint64_t>(in, pos);
  if (n > (in.size() - pos) / 16) throw InvalidArgument("truncated trajectory log");
  tr.events.resize(n);
  tr.final_config = tr.initial;
  for (auto& e : tr.events) {
    e.time = take<double>(in, pos);
    e.site = take<std::uint32_t>(in, pos);
    e.spin = static_cast<Spin>(take<std::uint32_t>(in, pos));
    if (e.site >= sites) throw InvalidArgument("trajectory event site out of range");
    tr.final_config[e.site] = e.spin;
  }
  return tr;
}

void write_trajectory(const std::string& path, const Trajectory& traj) { write_file_atomic(path, trajectory_bytes(traj)); }

Trajectory read_trajectory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open trajectory log '" + path + "'");
  return trajectory_from_bytes(std::string(std::istreambuf_iterator<char>(in), {}));
}

std::vector<std::vector<CylinderEstimate>> empirical_cylinders(const RateModel& model, const Volume& volume,
                                                               const SpinConfig& init, std::span<const double> times,
                                                               const Window& window, std::uint64_t n_traj,
                                                               std::uint64_t seed, int threads) {
  if (n_traj < 1) throw InvalidArgument("need at least one trajectory");
  validate(window, volume);
  const int q = volume.q();
  const auto patterns = checked_state_count(q, window.size());
  if (patterns > (StateIndex{1} << 20)) throw InfeasibleSize("window has too many patterns");
  const std::size_t nt = times.size();
  std::vector<std::uint32_t> seen(static_cast<std::size_t>(n_traj) * nt);
  parallel_for(n_traj, threads, [&](std::uint64_t i) {
    const auto path = sample_path(model, volume, init, times, seed, i);
    for (std::size_t k = 0; k < nt; ++k) seen[static_cast<std::size_t>(i) * nt + k] = window_pattern(path[k], window, q);
  });
  std::vector<std::vector<CylinderEstimate>> out(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    std::vector<std::uint64_t> count(static_cast<std::size_t>(patterns), 0);
    for (std::uint64_t i = 0; i < n_traj; ++i) ++count[seen[static_cast<std::size_t>(i) * nt + k]];
    auto& row = out[k];
    row.reserve(static_cast<std::size_t>(patterns));
    const double n = static_cast<double>(n_traj);
    for (std::uint32_t p = 0; p < patterns; ++p) {
      CylinderEstimate e;
      e.pattern = p;
      e.name = window_pattern_name(p, window, q);
      e.count = count[p];
      e.trajectories = n_traj;
      e.p = static_cast<double>(e.count) / n;
      e.se = std::sqrt(e.p * (1.0 - e.p) / n);
      row.push_back(std::move(e));
    }
  }
  return out;
}

std::vector<CylinderEstimate> empirical_cylinder(const RateModel& model, const Volume& volume, const SpinConfig& init,
                                                 double t, const Window& window, std::uint64_t n_traj,
                                                 std::uint64_t seed, int threads) {
  const double ts[] = {t};
  return empirical_cylinders(model, volume, init, ts, window, n_traj, seed, threads).front();
}

std::vector<SpinConfig> scan_inits(const Volume& volume, int random, std::uint64_t seed) {
  std::vector<SpinConfig> out;
  const auto n = static_cast<std::size_t>(volume.site_count());
  for (Spin s = 0; s < volume.q(); ++s) out.emplace_back(n, s);
  for (int r = 0; r < random; ++r) {
    CounterRng rng(seed, static_cast<std::uint64_t>(r));
    SpinConfig eta(n);
    for (auto& s : eta) s = static_cast<Spin>(rng.below(static_cast<std::uint64_t>(volume.q())));
    out.push_back(std::move(eta));
  }
  return out;
}

double MassScan::floor() const {
  double f = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) f = std::min(f, r.floor);
  return rows.empty() ? 0.0 : f;
}

MassScan positive_mass_scan(const RateModel& model, const Volume& volume, const Window& window, double tau,
                            std::span<const double> times, const std::vector<SpinConfig>& inits,
                            std::uint64_t n_traj, std::uint64_t seed, int threads, StateIndex exact_limit) {
  if (inits.empty()) throw InvalidArgument("positive-mass scan needs at least one initial configuration");
  for (double t : times)
    if (t < tau) throw InvalidArgument("scan times must not precede tau");
  MassScan scan;
  scan.window = window;
  scan.tau = tau;
  scan.exact = volume.state_count() <= exact_limit;
  const int q = volume.q();
  scan.rows.resize(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    scan.rows[k].t = times[k];
    scan.rows[k].floor = std::numeric_limits<double>::infinity();
  }
  auto offer = [&](std::size_t k, std::size_t init, std::uint32_t p, double v, double se) {
    auto& r = scan.rows[k];
    if (v < r.floor) {
      r.floor = v;
      r.se = se;
      r.init = init;
      r.pattern = window_pattern_name(p, window, q);
    }
  };
  if (scan.exact) {
    const auto gen = build_generator(model, volume);
    for (std::size_t i = 0; i < inits.size(); ++i) {
      Distribution nu = Distribution::point_mass(q, volume.site_count(), encode(inits[i], volume));
      double prev = 0.0;
      for (std::size_t k = 0; k < times.size(); ++k) {
        nu = evolve(nu, gen, times[k] - prev);
        prev = times[k];
        const auto m = marginalize(nu, volume, window);
        for (StateIndex p = 0; p < m.size(); ++p) offer(k, i, static_cast<std::uint32_t>(p), m[p], 0.0);
      }
    }
  } else {
    for (std::size_t i = 0; i < inits.size(); ++i) {
      const auto est = empirical_cylinders(model, volume, inits[i], times, window, n_traj, seed + i, threads);
      for (std::size_t k = 0; k < times.size(); ++k)
        for (const auto& e : est[k]) offer(k, i, e.pattern, e.p, e.se);
    }
  }
  return scan;
}

std::string cylinder_csv(const std::vector<CylinderEstimate>& est, double t) {
  std::ostringstream out;
  out << kCylinderSchema << "\n";
  out << "t,pattern,name,count,trajectories,p,se\n";
  for (const auto& e : est)
    out << format_real(t) << ',' << e.pattern << ",\"" << e.name << "\"," << e.count << ',' << e.trajectories << ','
        << format_real(e.p) << ',' << format_real(e.se) << '\n';
  return out.str();
}

nlohmann::json cylinder_json(const std::vector<CylinderEstimate>& est, double t) {
  auto rows = nlohmann::json::array();
  for (const auto& e : est)
    rows.push_back({{"pattern", e.pattern}, {"name", e.name}, {"count", e.count}, {"p", e.p}, {"se", e.se}});
  return {{"t", t}, {"trajectories", est.empty() ? 0 : est.front().trajectories}, {"estimates", rows}};
}

std::string mass_csv(const MassScan& scan) {
  std::ostringstream out;
  out << kMassSchema << " tau=" << format_real(scan.tau) << " method=" << (scan.exact ? "exact" : "kmc") << "\n";
  out << "t,floor,se,init,pattern\n";
  for (const auto& r : scan.rows)
    out << format_real(r.t) << ',' << format_real(r.floor) << ',' << format_real(r.se) << ',' << r.init << ",\""
        << r.pattern << "\"\n";
  return out.str();
}

nlohmann::json to_json(const MassScan& scan) {
  auto rows = nlohmann::json::array();
  for (const auto& r : scan.rows)
    rows.push_back({{"t", r.t}, {"floor", r.floor}, {"se", r.se}, {"init", r.init}, {"pattern", r.pattern}});
  return {{"window", scan.window.sites()},
          {"tau", scan.tau},
          {"method", scan.exact ? "exact" : "kmc"},
          {"floor", scan.floor()},
          {"rows", rows}};
}

}  // namespace ips
