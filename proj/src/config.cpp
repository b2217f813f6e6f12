#include "ips/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace ips {

namespace {

using nlohmann::json;

// Typed access to one JSON object that remembers which keys were read, so
// leftovers can be reported as unknown.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(at(key), "required field is missing");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback, json& resolved) {
    const double v = has(key) ? number(key) : fallback;
    resolved[key] = v;
    return v;
  }
  std::int64_t integer(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback, json& resolved) {
    const auto v = has(key) ? integer(key) : fallback;
    resolved[key] = v;
    return v;
  }
  std::string string(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(at(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }
  std::vector<int> integers(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) throw ConfigError(at(key) + "[" + std::to_string(i) + "]", "expected an integer");
      out.push_back(v[i].get<int>());
    }
    return out;
  }

  /// Exactly one of `keys` must be present; returns it.
  std::string one_of(std::initializer_list<const char*> keys) {
    std::string found;
    std::string list;
    for (const char* k : keys) {
      list += (list.empty() ? "" : ", ") + std::string(k);
      if (!has(k)) continue;
      if (!found.empty()) throw ConfigError(path_, "give only one of " + list);
      found = k;
    }
    if (found.empty()) throw ConfigError(path_, std::string("expected one of ") + list);
    return found;
  }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Wrap library argument errors with the field they came from.
template <typename F>
auto guarded(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(field, e.what());
  }
}

Volume parse_volume(const json& j, json& resolved) {
  Fields f(j, "volume");
  const auto d = f.integer("d");
  const auto side = f.integer("side");
  const auto q = f.integer("q");
  if (d < 1 || d > 8) throw ConfigError("volume.d", "must lie in 1..8");
  if (side < 1) throw ConfigError("volume.side", "must be positive");
  if (q < 2 || q > 255) throw ConfigError("volume.q", "must lie in 2..255");
  resolved = {{"d", d}, {"side", side}, {"q", q}};
  const std::string boundary = f.has("boundary") ? f.string("boundary") : "periodic";
  resolved["boundary"] = boundary;
  Volume v = Volume::torus(1, 1, 2);
  if (boundary == "periodic") {
    v = guarded("volume", [&] { return Volume::torus(int(d), int(side), int(q)); });
  } else if (boundary == "frozen") {
    const auto spin = f.integer("frozen_spin");
    const auto width = f.integer("shell_width", 1, resolved);
    resolved["frozen_spin"] = spin;
    if (spin < 0 || spin >= q) throw ConfigError("volume.frozen_spin", "must lie in 0..q-1");
    v = guarded("volume", [&] { return Volume::frozen_box(int(d), int(side), int(q), Spin(spin), int(width)); });
  } else {
    throw ConfigError("volume.boundary", "expected \"periodic\" or \"frozen\"");
  }
  f.done();
  return v;
}

ProductMeasure parse_mu(const json& j, const Volume& volume, json& resolved) {
  Fields f(j, "mu");
  const auto kind = f.one_of({"uniform", "homogeneous", "marginals"});
  const int n = volume.site_count();
  const int q = volume.q();
  auto check = [&](const std::vector<double>& p, const std::string& field) {
    if (static_cast<int>(p.size()) != q) throw ConfigError(field, "needs q = " + std::to_string(q) + " entries");
    double s = 0.0;
    for (double x : p) {
      if (!(x > 0.0)) throw ConfigError(field, "entries must be positive");
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ConfigError(field, "entries must sum to 1");
  };
  ProductMeasure mu = ProductMeasure::uniform(q, n);
  if (kind == "uniform") {
    if (!f.raw("uniform").is_boolean() || !f.raw("uniform").get<bool>())
      throw ConfigError("mu.uniform", "expected true");
    resolved = {{"uniform", true}};
  } else if (kind == "homogeneous") {
    const auto p = f.numbers("homogeneous");
    check(p, "mu.homogeneous");
    mu = ProductMeasure::homogeneous(n, to_vector(p));
    resolved = {{"homogeneous", p}};
  } else {
    const auto& arr = f.raw("marginals");
    if (!arr.is_array() || static_cast<int>(arr.size()) != n)
      throw ConfigError("mu.marginals", "needs one marginal per site (" + std::to_string(n) + ")");
    std::vector<Eigen::VectorXd> m;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string field = "mu.marginals[" + std::to_string(i) + "]";
      if (!arr[i].is_array()) throw ConfigError(field, "expected an array of numbers");
      std::vector<double> p;
      for (const auto& x : arr[i]) {
        if (!x.is_number()) throw ConfigError(field, "expected numbers");
        p.push_back(x.get<double>());
      }
      check(p, field);
      m.push_back(to_vector(p));
    }
    mu = ProductMeasure(std::move(m));
    resolved = {{"marginals", arr}};
  }
  f.done();
  return mu;
}

Window parse_window(const json& j, const Volume& volume, json& resolved) {
  Fields f(j, "window");
  const auto kind = f.one_of({"sites", "box", "all"});
  Window w;
  if (kind == "sites") {
    w = guarded("window.sites", [&] { return Window(f.integers("sites")); });
  } else if (kind == "box") {
    const auto r = f.integer("box");
    w = guarded("window.box", [&] { return Window::box(volume, int(r)); });
  } else {
    if (!f.raw("all").is_boolean() || !f.raw("all").get<bool>()) throw ConfigError("window.all", "expected true");
    w = Window::all(volume);
  }
  guarded("window." + kind, [&] {
    validate(w, volume);
    return 0;
  });
  f.done();
  resolved = {{"sites", w.sites()}};
  return w;
}

std::vector<double> parse_times(const json& j, json& resolved) {
  std::vector<double> t;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) throw ConfigError("times[" + std::to_string(i) + "]", "expected a number");
      t.push_back(j[i].get<double>());
    }
  } else {
    Fields f(j, "times");
    const double end = f.number("t_end");
    const auto points = f.integer("points");
    if (!(end >= 0.0)) throw ConfigError("times.t_end", "must be non-negative");
    if (points < 1) throw ConfigError("times.points", "must be positive");
    const double start = f.number("t_start", 0.0, resolved);
    f.done();
    for (std::int64_t i = 0; i < points; ++i)
      t.push_back(points == 1 ? end : start + (end - start) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] >= 0.0) || (i > 0 && t[i] < t[i - 1]))
      throw ConfigError("times", "grid must be non-negative and non-decreasing");
  }
  if (t.empty()) throw ConfigError("times", "grid is empty");
  resolved = t;
  return t;
}

InitialSpec parse_initial(const json& j, const Volume& volume, json& resolved) {
  Fields f(j, "initial");
  const auto kind = f.one_of({"config", "constant", "mu", "random"});
  InitialSpec s;
  if (kind == "config") {
    s.kind = InitialKind::config;
    const auto c = f.integers("config");
    s.config.assign(c.begin(), c.end());
    guarded("initial.config", [&] {
      validate(s.config, volume);
      return 0;
    });
    resolved = {{"config", c}};
  } else if (kind == "constant") {
    s.kind = InitialKind::constant;
    const auto spin = f.integer("constant");
    if (spin < 0 || spin >= volume.q()) throw ConfigError("initial.constant", "must lie in 0..q-1");
    s.config.assign(static_cast<std::size_t>(volume.site_count()), Spin(spin));
    resolved = {{"constant", spin}};
  } else {
    const auto& v = f.raw(kind);
    if (!v.is_boolean() || !v.get<bool>()) throw ConfigError("initial." + kind, "expected true");
    s.kind = kind == "mu" ? InitialKind::mu : InitialKind::random;
    resolved = {{kind, true}};
  }
  f.done();
  return s;
}

KmcSpec parse_kmc(const json& j, json& resolved) {
  Fields f(j, "kmc");
  KmcSpec k;
  resolved = json::object();
  const auto n = f.integer("trajectories");
  if (n < 1) throw ConfigError("kmc.trajectories", "must be positive");
  k.trajectories = static_cast<std::uint64_t>(n);
  resolved["trajectories"] = n;
  k.log_trajectories = static_cast<int>(f.integer("log_trajectories", 0, resolved));
  if (k.log_trajectories < 0) throw ConfigError("kmc.log_trajectories", "must be non-negative");
  if (f.has("scan")) {
    Fields s(f.raw("scan"), "kmc.scan");
    json sr = json::object();
    k.scan = true;
    k.tau = s.number("tau");
    if (!(k.tau >= 0.0)) throw ConfigError("kmc.scan.tau", "must be non-negative");
    sr["tau"] = k.tau;
    k.random_inits = static_cast<int>(s.integer("random_inits", 4, sr));
    if (k.random_inits < 0) throw ConfigError("kmc.scan.random_inits", "must be non-negative");
    s.done();
    resolved["scan"] = sr;
  }
  f.done();
  return k;
}

SequenceSpec parse_sequence(const json& j, json& resolved) {
  Fields f(j, "sequence");
  SequenceSpec s;
  resolved = json::object();
  s.C = f.number("C");
  s.d = static_cast<int>(f.integer("d"));
  if (!(s.C > 0.0)) throw ConfigError("sequence.C", "must be positive");
  if (s.d < 1) throw ConfigError("sequence.d", "must be positive");
  resolved["C"] = s.C;
  resolved["d"] = s.d;
  s.N = static_cast<std::uint64_t>(f.integer("N", 100000, resolved));
  s.tail_tol = f.number("tail_tol", 1e-9, resolved);
  s.shells = f.integer("shells", 50, resolved);
  if (s.N < 1) throw ConfigError("sequence.N", "must be positive");
  if (s.shells < 1) throw ConfigError("sequence.shells", "must be positive");
  if (f.has("a")) {
    s.a = f.number("a");
    if (!(*s.a >= 0.0)) throw ConfigError("sequence.a", "must be non-negative");
    resolved["a"] = *s.a;
  }
  if (f.has("delta")) {
    s.delta = f.numbers("delta");
    for (std::size_t i = 0; i < s.delta.size(); ++i)
      if (!(s.delta[i] >= 0.0)) throw ConfigError("sequence.delta[" + std::to_string(i) + "]", "must be non-negative");
    resolved["delta"] = s.delta;
  }
  if (s.d <= 2 && s.delta.empty()) throw ConfigError("sequence.delta", "d = 1, 2 needs a sequence to refute");
  f.done();
  return s;
}

}  // namespace

void RunConfig::require(const char* section) const {
  const std::string s = section;
  const bool ok = (s == "model" && model) || (s == "volume" && volume) || (s == "mu" && mu) ||
                  (s == "window" && window) || (s == "times" && !times.empty()) || (s == "initial" && initial) ||
                  (s == "kmc" && kmc) || (s == "sequence" && sequence);
  if (!ok) throw ConfigError(s, "required section is missing");
}

std::shared_ptr<const RateModel> model_from_json(const nlohmann::json& j, const std::string& base_dir) {
  Fields f(j, "model");
  const auto name = f.string("name");
  std::shared_ptr<const RateModel> m;
  auto field = [&](const char* k) { return f.at(k); };
  if (name == "independent_flip") {
    const auto target = f.numbers("target");
    const double lambda = f.number("lambda");
    m = guarded("model", [&] { return std::make_shared<IndependentFlip>(to_vector(target), lambda); });
  } else if (name == "glauber_ising") {
    const double beta = f.number("beta");
    const auto d = f.integer("dimension");
    m = guarded("model", [&] { return std::make_shared<GlauberIsing>(beta, int(d)); });
  } else if (name == "driven_clock") {
    const auto q = f.integer("q");
    const double baseline = f.number("baseline");
    const auto kind = f.one_of({"epsilon", "phi"});
    if (kind == "epsilon") {
      const double eps = f.number("epsilon");
      m = guarded("model", [&] { return std::make_shared<DrivenClock>(DrivenClock::standard(int(q), eps, baseline)); });
    } else {
      const auto phi = f.numbers("phi");
      m = guarded("model", [&] { return std::make_shared<DrivenClock>(int(q), phi, baseline); });
    }
  } else if (name == "soft_fa" || name == "hard_fa") {
    const double eps = name == "soft_fa" ? f.number("epsilon") : 0.0;
    if (name == "soft_fa" && !(eps > 0.0)) throw ConfigError(field("epsilon"), "soft FA needs epsilon > 0");
    const double density = f.number("density");
    const auto fac = f.has("facilitating") ? f.integer("facilitating") : 0;
    const auto thr = f.has("threshold") ? f.integer("threshold") : 1;
    m = guarded("model", [&] { return std::make_shared<SoftFA>(eps, density, Spin(fac), int(thr)); });
  } else if (name == "rate_table") {
    const auto kind = f.one_of({"path", "text"});
    if (kind == "path") {
      std::filesystem::path p = f.string("path");
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      m = guarded(field("path"), [&] { return std::make_shared<RateTable>(RateTable::load(p.string())); });
    } else {
      const auto text = f.string("text");
      m = guarded(field("text"), [&] { return std::make_shared<RateTable>(RateTable::parse(text)); });
    }
  } else {
    throw ConfigError(field("name"), "unknown model '" + name +
                                         "' (independent_flip, glauber_ising, driven_clock, soft_fa, hard_fa, rate_table)");
  }
  f.done();
  return m;
}

RunConfig parse_config(const nlohmann::json& j, const std::string& base_dir) {
  Fields f(j, "");
  RunConfig c;
  auto& r = c.resolved;
  if (f.has("seed")) {
    const auto s = f.integer("seed");
    if (s < 0) throw ConfigError("seed", "must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
    r["seed"] = s;
  }
  if (f.has("volume")) c.volume = parse_volume(f.raw("volume"), r["volume"]);
  if (f.has("model")) {
    c.model = model_from_json(f.raw("model"), base_dir);
    r["model"] = f.raw("model");
    r["model_description"] = c.model->describe();
    if (c.volume) guarded("model", [&] {
        check_compatible(*c.model, *c.volume);
        return 0;
      });
  }
  auto need_volume = [&](const char* s) {
    if (!c.volume) throw ConfigError(s, "needs a volume section");
    return *c.volume;
  };
  if (f.has("mu")) c.mu = parse_mu(f.raw("mu"), need_volume("mu"), r["mu"]);
  if (f.has("window")) c.window = parse_window(f.raw("window"), need_volume("window"), r["window"]);
  if (f.has("times")) c.times = parse_times(f.raw("times"), r["times"]);
  if (f.has("initial")) c.initial = parse_initial(f.raw("initial"), need_volume("initial"), r["initial"]);
  if (f.has("kmc")) c.kmc = parse_kmc(f.raw("kmc"), r["kmc"]);
  if (f.has("sequence")) c.sequence = parse_sequence(f.raw("sequence"), r["sequence"]);
  if (f.has("tolerances")) {
    Fields t(f.raw("tolerances"), "tolerances");
    c.evolve_tol = t.number("evolve");
    if (!(c.evolve_tol > 0.0)) throw ConfigError("tolerances.evolve", "must be positive");
    t.done();
  }
  r["tolerances"] = {{"evolve", c.evolve_tol}};
  f.done();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", path + ": " + e.what());
  }
  return parse_config(j, std::filesystem::path(path).parent_path().string());
}

}  // namespace ips
