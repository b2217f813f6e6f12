// ipslab: command-line front end.
//
// exit codes: 0 pass, 1 check failure, 2 config error, 3 infeasible size

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "ips/audit.hpp"
#include "ips/config.hpp"
#include "ips/entropy.hpp"
#include "ips/exact.hpp"
#include "ips/io.hpp"
#include "ips/kmc.hpp"
#include "ips/random.hpp"
#include "ips/sequence.hpp"
#include "ips/verify.hpp"

#ifndef IPSLAB_VERSION
#define IPSLAB_VERSION "dev"
#endif

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kPass = 0;
constexpr int kCheckFailure = 1;
constexpr int kConfigError = 2;
constexpr int kInfeasible = 3;

struct Options {
  std::string config;
  std::uint64_t seed = 20240611;
  bool seed_given = false;
  std::string out_dir = "out";
  int threads = 1;
  std::string profile = "strict";
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Output directory plus the manifest entries of everything written to it.
class Run {
 public:
  Run(std::string command, const Options& opt, std::vector<std::string> argv)
      : command_(std::move(command)), opt_(opt), argv_(std::move(argv)) {}

  void write(const std::string& name, const std::string& contents) {
    const auto path = (fs::path(opt_.out_dir) / name).string();
    ips::write_file_atomic(path, contents);
    outputs_.push_back({{"file", name}, {"bytes", contents.size()}, {"fnv1a", hex(fnv1a(contents))}});
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  std::uint64_t seed(const ips::RunConfig* cfg) const {
    if (opt_.seed_given) return opt_.seed;
    if (cfg && cfg->seed) return *cfg->seed;
    return opt_.seed;
  }

  void manifest(int status, const ips::RunConfig* cfg, const std::string& error = {}) {
    json m;
    m["tool"] = "ipslab";
    m["version"] = IPSLAB_VERSION;
    m["command"] = command_;
    m["argv"] = argv_;
    m["config_path"] = opt_.config;
    m["config"] = cfg ? cfg->resolved : json();
    m["seed"] = seed(cfg);
    m["threads"] = opt_.threads;
    m["tolerance_profile"] = opt_.profile;
    m["compiler"] = __VERSION__;
    m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    m["enumeration_version"] = ips::kEnumerationVersion;
    m["outputs"] = outputs_;
    m["exit_code"] = status;
    if (!error.empty()) m["error"] = error;
    const auto path = (fs::path(opt_.out_dir) / "manifest.json").string();
    ips::write_file_atomic(path, m.dump(2) + "\n");
  }

  const Options& options() const { return opt_; }

 private:
  std::string command_;
  Options opt_;
  std::vector<std::string> argv_;
  json outputs_ = json::array();
};

ips::Profile profile_of(const Options& o) { return o.profile == "fast" ? ips::Profile::fast : ips::Profile::strict; }

json audit_json(const ips::RateAudit& a) {
  json j;
  j["sup_rate"] = a.sup_rate;
  j["min_rate"] = a.min_rate;
  j["max_rate"] = a.max_rate;
  j["r4_sum"] = ips::format_real(a.r4_sum);
  j["r1"] = a.r1;
  j["r3"] = a.r3;
  j["r4"] = a.r4;
  j["bounds_ok"] = a.bounds_ok;
  j["radius_ok"] = a.radius_ok;
  j["radius_exhaustive"] = a.radius_exhaustive;
  j["C1"] = a.c1;
  j["C2"] = a.c2;
  j["C1_total"] = a.c1_total;
  j["C2_total"] = a.c2_total;
  auto osc = json::array();
  for (const auto& o : a.oscillations)
    osc.push_back({{"x", o.x}, {"y", o.y}, {"per_target", o.per_target}, {"total", o.total}});
  j["oscillations"] = osc;
  auto ladder = json::array();
  for (const auto& w : a.ladder)
    ladder.push_back({{"window", w.window.sites()}, {"gamma", w.gamma}, {"gamma_total", w.gamma_total}});
  j["ladder"] = ladder;
  auto fails = json::array();
  for (const auto& f : a.failures)
    fails.push_back({{"condition", f.condition},
                     {"site", f.site},
                     {"neighbourhood", f.neighbourhood},
                     {"target", f.target},
                     {"value", f.value},
                     {"message", f.message}});
  j["failures"] = fails;
  j["passed"] = a.passed();
  return j;
}

ips::Distribution initial_law(const ips::RunConfig& cfg, std::uint64_t seed) {
  cfg.require("initial");
  const auto& v = *cfg.volume;
  switch (cfg.initial->kind) {
    case ips::InitialKind::config:
    case ips::InitialKind::constant:
      return ips::Distribution::point_mass(v.q(), v.site_count(), ips::encode(cfg.initial->config, v));
    case ips::InitialKind::mu:
      if (!cfg.mu) throw ips::ConfigError("initial.mu", "needs a mu section");
      return cfg.mu->expand();
    case ips::InitialKind::random: {
      ips::CounterRng rng(seed, 0x1417);
      return ips::Distribution(v.q(), v.site_count(), rng.dirichlet(static_cast<Eigen::Index>(v.state_count())));
    }
  }
  throw ips::ConfigError("initial", "unsupported initial law");
}

std::string sites_csv(const std::vector<std::pair<double, ips::EntropyReport>>& reports) {
  std::ostringstream out;
  out << "# ips-sites v1\n";
  out << "t,site,alpha,beta,gamma\n";
  for (const auto& [t, r] : reports)
    for (std::size_t i = 0; i < r.window.sites().size(); ++i)
      out << ips::format_real(t) << ',' << r.window.sites()[i] << ',' << ips::format_real(r.alpha[i]) << ','
          << ips::format_real(r.beta[i]) << ',' << ips::format_real(r.gamma[i]) << '\n';
  return out.str();
}

// Trace rows and per-site tables along the exact orbit.
void write_trace(Run& run, const std::string& stem, const ips::RateModel& model, const ips::Volume& volume,
                 const ips::ProductMeasure& mu, const ips::Window& window, const ips::Distribution& nu0,
                 const std::vector<double>& times, double tol, int threads) {
  const ips::WindowKernel kernel(model, volume, window);
  const auto gen = ips::build_generator(model, volume);
  const auto rows = ips::entropy_trace(kernel, gen, nu0, mu, times, threads, tol);
  run.write(stem + ".csv", ips::trace_csv(rows));
  run.write_json(stem + ".json", ips::trace_json(rows));
  std::vector<std::pair<double, ips::EntropyReport>> reports;
  ips::Distribution nu = nu0;
  double prev = 0.0;
  for (double t : times) {
    nu = ips::evolve(nu, gen, t - prev, tol);
    prev = t;
    reports.emplace_back(t, ips::entropy_report(kernel, nu, mu));
  }
  run.write(stem + "_sites.csv", sites_csv(reports));
}

int cmd_audit(Run& run, const ips::RunConfig& cfg) {
  cfg.require("model");
  cfg.require("volume");
  const auto& v = *cfg.volume;
  const auto a = ips::audit(*cfg.model, v, ips::window_ladder(v, (v.side() - 1) / 2), run.seed(&cfg));
  run.write_json("audit.json", audit_json(a));
  std::cout << "audit " << cfg.model->describe() << " on " << v.describe() << ": "
            << (a.passed() ? "pass" : "FAIL") << "\n";
  for (const auto& f : a.failures) std::cout << "  " << f.condition << ": " << f.message << "\n";
  return a.passed() ? kPass : kCheckFailure;
}

int cmd_evolve(Run& run, const ips::RunConfig& cfg) {
  cfg.require("model");
  cfg.require("volume");
  cfg.require("times");
  const auto& v = *cfg.volume;
  const auto gen = ips::build_generator(*cfg.model, v);
  ips::Distribution nu = initial_law(cfg, run.seed(&cfg));
  ips::StationaryStats st;
  const auto pi = ips::stationary(gen, 1e-12, &st);
  std::ostringstream csv;
  csv << "# ips-evolve v1\n";
  csv << "t,l1_to_stationary,entropy_to_stationary,terms,tail_bound,drift\n";
  double prev = 0.0;
  for (double t : cfg.times) {
    ips::EvolveStats es;
    nu = ips::evolve(nu, gen, t - prev, cfg.evolve_tol, &es);
    prev = t;
    csv << ips::format_real(t) << ',' << ips::format_real(ips::l1_distance(nu, pi)) << ','
        << ips::format_real(ips::relative_entropy(nu, pi)) << ',' << es.terms << ',' << ips::format_real(es.tail_bound)
        << ',' << ips::format_real(es.drift) << '\n';
  }
  run.write("evolve.csv", csv.str());
  const auto bin = (fs::path(run.options().out_dir) / "distribution.bin").string();
  ips::write_distribution(bin, nu, v);
  if (nu.size() <= (ips::StateIndex{1} << 16))
    run.write_json("distribution.json", ips::distribution_to_json(nu, v));
  run.write_json("stationary.json", {{"residual", st.residual}, {"direct", st.direct}, {"iterations", st.iterations}});
  std::cout << "evolved to t = " << cfg.times.back() << ", ||nu_t - pi||_1 = " << ips::l1_distance(nu, pi) << "\n";
  return kPass;
}

int cmd_trace(Run& run, const ips::RunConfig& cfg) {
  for (const char* s : {"model", "volume", "mu", "window", "times", "initial"}) cfg.require(s);
  const auto nu0 = initial_law(cfg, run.seed(&cfg));
  write_trace(run, "trace", *cfg.model, *cfg.volume, *cfg.mu, *cfg.window, nu0, cfg.times, cfg.evolve_tol,
              run.options().threads);
  std::cout << "trace: " << cfg.times.size() << " rows\n";
  return kPass;
}

int cmd_verify(Run& run, const ips::RunConfig* cfg) {
  ips::SuiteOptions o;
  o.seed = run.seed(cfg);
  o.profile = profile_of(run.options());
  o.threads = run.options().threads;
  const auto results = ips::run_suite(o);
  const auto controls = ips::run_negative_controls(o);
  bool ok = true;
  json report;
  report["checks"] = json::array();
  for (const auto& r : results) {
    ok = ok && r.pass;
    report["checks"].push_back(ips::to_json(r));
    std::printf("%-16s %s  trials=%llu  max_slack=%.3e  tol=%.0e\n", r.name.c_str(), r.pass ? "pass" : "FAIL",
                static_cast<unsigned long long>(r.trials), r.max_slack, r.tolerance);
  }
  report["negative_controls"] = json::array();
  for (const auto& c : controls) {
    ok = ok && c.failed_as_designed;
    report["negative_controls"].push_back(ips::to_json(c));
    std::printf("control %-52s %s\n", c.name.c_str(), c.failed_as_designed ? "failed as designed" : "DID NOT FAIL");
  }
  report["pass"] = ok;
  run.write_json("verify.json", report);
  return ok ? kPass : kCheckFailure;
}

int cmd_sequence(Run& run, const ips::RunConfig& cfg) {
  cfg.require("sequence");
  const auto& s = *cfg.sequence;
  json out;
  int status = kPass;
  if (s.d >= 3) {
    const auto e = ips::max_admissible_amplitude(s.C, s.d, 1000, s.tail_tol);
    const double a = s.a.value_or(e.lower);
    std::vector<double> delta(static_cast<std::size_t>(s.N));
    for (std::size_t n = 1; n <= delta.size(); ++n) delta[n - 1] = a * std::pow(static_cast<double>(n), 1 - s.d);
    const auto g = ips::growth_check(s.C, s.d, std::move(delta));
    const auto v = g.first_violation(0.0);
    const auto c = ips::counterexample_alpha(s.d, a, s.shells);
    out["amplitude"] = ips::to_json(e);
    out["a"] = a;
    out["growth"] = {{"N", s.N}, {"first_violation", v ? json(*v) : json()}};
    out["counterexample"] = ips::to_json(c);
    run.write("shells.csv", ips::shell_csv(c));
    std::printf("a*(C=%g, d=%d) in [%.9f, %.9f]; a = %.9f: growth bound %s through N = %llu; shells %s\n", s.C, s.d,
                e.lower, e.upper, a, v ? "FAILS" : "holds", static_cast<unsigned long long>(s.N),
                c.passed() ? "ok" : "FAIL");
    if (v || !c.passed()) status = kCheckFailure;
  } else {
    const auto r = ips::verify_vanishing(s.C, s.d, s.delta, s.N);
    out["vanishing"] = ips::to_json(r);
    std::printf("d = %d: %s\n", s.d, ips::to_string(r.outcome).c_str());
  }
  run.write_json("sequence.json", out);
  return status;
}

int cmd_kmc(Run& run, const ips::RunConfig& cfg) {
  for (const char* s : {"model", "volume", "window", "times", "kmc", "initial"}) cfg.require(s);
  const auto& v = *cfg.volume;
  const auto& k = *cfg.kmc;
  if (cfg.initial->kind != ips::InitialKind::config && cfg.initial->kind != ips::InitialKind::constant)
    throw ips::ConfigError("initial", "kmc needs a deterministic initial configuration (config or constant)");
  const auto seed = run.seed(&cfg);
  const auto& init = cfg.initial->config;
  const auto est = ips::empirical_cylinders(*cfg.model, v, init, cfg.times, *cfg.window, k.trajectories, seed,
                                            run.options().threads);
  std::string csv;
  json j = json::array();
  for (std::size_t i = 0; i < cfg.times.size(); ++i) {
    auto part = ips::cylinder_csv(est[i], cfg.times[i]);
    csv += i == 0 ? part : part.substr(part.find('\n', part.find('\n') + 1) + 1);
    j.push_back(ips::cylinder_json(est[i], cfg.times[i]));
  }
  run.write("cylinders.csv", csv);
  json report = {{"estimates", j}};
  if (v.state_count() <= (ips::StateIndex{1} << 16)) {
    // exact oracle at the same times
    const auto gen = ips::build_generator(*cfg.model, v);
    ips::Distribution nu = ips::Distribution::point_mass(v.q(), v.site_count(), ips::encode(init, v));
    double prev = 0.0, worst_z = 0.0;
    for (std::size_t i = 0; i < cfg.times.size(); ++i) {
      nu = ips::evolve(nu, gen, cfg.times[i] - prev, cfg.evolve_tol);
      prev = cfg.times[i];
      const auto m = ips::marginalize(nu, v, *cfg.window);
      for (const auto& e : est[i]) {
        const double diff = std::abs(e.p - m[e.pattern]);
        worst_z = std::max(worst_z, e.se > 0.0 ? diff / e.se : (diff > 0.0 ? HUGE_VAL : 0.0));
      }
    }
    report["exact_max_z"] = ips::format_real(worst_z);
    std::printf("kmc: %llu trajectories, max |p - exact| / se = %.3f\n",
                static_cast<unsigned long long>(k.trajectories), worst_z);
  }
  for (int i = 0; i < k.log_trajectories; ++i) {
    const auto tr = ips::simulate(*cfg.model, v, init, cfg.times.back(), seed, static_cast<std::uint64_t>(i));
    run.write("traj_" + std::to_string(i) + ".bin", ips::trajectory_bytes(tr));
  }
  if (k.scan) {
    const auto inits = ips::scan_inits(v, k.random_inits, seed ^ 0x5ca9);
    std::vector<double> grid;
    for (double t : cfg.times)
      if (t >= k.tau) grid.push_back(t);
    const auto scan = ips::positive_mass_scan(*cfg.model, v, *cfg.window, k.tau, grid, inits, k.trajectories, seed,
                                              run.options().threads);
    run.write("positive_mass.csv", ips::mass_csv(scan));
    report["positive_mass"] = ips::to_json(scan);
    std::printf("positive-mass floor (%s): %.6g\n", scan.exact ? "exact" : "kmc", scan.floor());
  }
  run.write_json("kmc.json", report);
  return kPass;
}

int cmd_demo(Run& run) {
  const auto seed = run.seed(nullptr);
  const int threads = run.options().threads;
  json summary;
  std::vector<double> times;
  for (int i = 0; i <= 50; ++i) times.push_back(0.1 * i);

  // non-reversible, product-stationary clock model
  {
    const auto v = ips::Volume::torus(1, 5, 3);
    const auto m = ips::DrivenClock::standard(3, 1.2, 0.3);
    const auto mu = ips::ProductMeasure::uniform(3, 5);
    const ips::Window w({1, 2, 3});
    ips::CounterRng rng(seed, 1);
    const ips::Distribution nu0(3, 5, rng.dirichlet(static_cast<Eigen::Index>(v.state_count())));
    write_trace(run, "clock_trace", m, v, mu, w, nu0, times, 1e-14, threads);
    write_trace(run, "clock_trace_mu", m, v, mu, w, mu.expand(), times, 1e-14, threads);
    summary["clock"] = {{"model", m.describe()},
                        {"volume", v.describe()},
                        {"stationarity_residual", ips::stationarity_residual(m, v, mu)}};
  }
  // Glauber dynamics against the uniform product, which it does not preserve
  {
    const auto v = ips::Volume::torus(1, 5, 2);
    const ips::GlauberIsing m(0.5, 1);
    const auto mu = ips::ProductMeasure::uniform(2, 5);
    ips::CounterRng rng(seed, 2);
    const ips::Distribution nu0(2, 5, rng.dirichlet(static_cast<Eigen::Index>(v.state_count())));
    write_trace(run, "glauber_trace", m, v, mu, ips::Window({1, 2, 3}), nu0, times, 1e-14, threads);
    summary["glauber"] = {{"model", m.describe()},
                          {"volume", v.describe()},
                          {"stationarity_residual", ips::stationarity_residual(m, v, mu)}};
  }
  // per-site tables on a 2-d torus for heatmaps
  {
    const auto v = ips::Volume::torus(2, 4, 2);
    const auto m = ips::DrivenClock::standard(2, 0.8, 0.5);
    const auto mu = ips::ProductMeasure::uniform(2, 16);
    ips::CounterRng rng(seed, 3);
    const ips::Distribution nu0(2, 16, rng.dirichlet(static_cast<Eigen::Index>(v.state_count())));
    const std::vector<double> few{0.0, 0.5, 1.0, 2.0};
    write_trace(run, "clock2d", m, v, mu, ips::Window({0, 1, 2, 4, 5, 6, 8, 9, 10}), nu0, few, 1e-14, threads);
  }
  // positive-mass scans: soft FA and the hard-constraint control
  {
    const auto v = ips::Volume::torus(1, 5, 2);
    std::vector<double> grid;
    for (int i = 1; i <= 20; ++i) grid.push_back(0.5 * i);
    const auto inits = ips::scan_inits(v, 4, seed);
    const auto soft = ips::positive_mass_scan(ips::SoftFA(0.2, 0.4), v, ips::Window({1, 2}), 0.5, grid, inits, 0, seed);
    const auto hard = ips::positive_mass_scan(ips::SoftFA(0.0, 0.4), v, ips::Window({1, 2}), 0.5, grid, inits, 0, seed);
    run.write("positive_mass_soft_fa.csv", ips::mass_csv(soft));
    run.write("positive_mass_hard_fa.csv", ips::mass_csv(hard));
    summary["positive_mass"] = {{"soft_fa_floor", soft.floor()}, {"hard_fa_floor", hard.floor()}};
  }
  // shell sequence in d = 3
  {
    const auto e = ips::max_admissible_amplitude(1.0, 3);
    const auto c = ips::counterexample_alpha(3, e.lower, 50);
    run.write("shells.csv", ips::shell_csv(c));
    summary["sequence"] = {{"amplitude", ips::to_json(e)}, {"counterexample", ips::to_json(c)}};
  }
  run.write_json("demo.json", summary);
  std::cout << "demo artifacts written to " << run.options().out_dir << "\n";
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ipslab: interacting particle systems on finite tori"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opt.config, "JSON run configuration");
    if (config_required) c->required();
    sub->add_option("--seed", opt.seed, "master seed (overrides the config)");
    sub->add_option("--out-dir", opt.out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::Range(1, 1024))->capture_default_str();
    sub->add_option("--tolerance-profile", opt.profile, "strict or fast")
        ->check(CLI::IsMember({"strict", "fast"}))
        ->capture_default_str();
  };
  struct Sub {
    const char* name;
    const char* help;
    bool config;
  };
  const Sub subs[] = {{"audit", "certify a model against (R1)-(R4); rate oscillations and C1, C2", true},
                      {"evolve", "exact evolution of a distribution", true},
                      {"trace", "entropy functionals along the exact orbit", true},
                      {"verify", "inequality and identity suite with negative controls", false},
                      {"sequence", "growth-bound tools and the shell sequence", true},
                      {"kmc", "kinetic Monte Carlo ensemble estimates", true},
                      {"demo", "canned scenarios for the figures", false}};
  for (const auto& s : subs) add_common(app.add_subcommand(s.name, s.help), s.config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }
  for (const auto& s : subs)
    if (app.got_subcommand(s.name) && app.get_subcommand(s.name)->count("--seed")) opt.seed_given = true;

  const std::string command = app.get_subcommands().front()->get_name();
  Run run(command, opt, std::vector<std::string>(argv, argv + argc));
  std::optional<ips::RunConfig> cfg;
  const auto started = std::chrono::steady_clock::now();
  int status = kPass;
  std::string error;
  try {
    if (!opt.config.empty()) cfg = ips::load_config(opt.config);
    const ips::RunConfig* c = cfg ? &*cfg : nullptr;
    if (command == "audit") status = cmd_audit(run, *c);
    else if (command == "evolve") status = cmd_evolve(run, *c);
    else if (command == "trace") status = cmd_trace(run, *c);
    else if (command == "verify") status = cmd_verify(run, c);
    else if (command == "sequence") status = cmd_sequence(run, *c);
    else if (command == "kmc") status = cmd_kmc(run, *c);
    else status = cmd_demo(run);
  } catch (const ips::ConfigError& e) {
    status = kConfigError;
    error = std::string("config error: ") + e.what();
  } catch (const ips::InvalidArgument& e) {
    status = kConfigError;
    error = std::string("invalid argument: ") + e.what();
  } catch (const ips::InfeasibleSize& e) {
    status = kInfeasible;
    error = std::string("infeasible size: ") + e.what();
  } catch (const std::exception& e) {
    status = kCheckFailure;
    error = e.what();
  }
  if (!error.empty()) std::cerr << "ipslab " << command << ": " << error << "\n";
  try {
    run.manifest(status, cfg ? &*cfg : nullptr, error);
  } catch (const std::exception& e) {
    std::cerr << "ipslab: cannot write manifest: " << e.what() << "\n";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::cerr << "ipslab " << command << ": exit " << status << " after " << secs << " s\n";
  return status;
}
