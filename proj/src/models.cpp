#include "ips/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace ips {

namespace {

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

constexpr char kDigits[] = "0123456789abcdefghijklmnopqrstuvwxyz";

int digit_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'z') return c - 'a' + 10;
  return -1;
}

}  // namespace

double RateModel::total_rate(const LocalView& view) const {
  double sum = 0.0;
  const Spin own = view.self();
  for (Spin j = 0; j < q(); ++j)
    if (j != own) sum += rate(view, j);
  return sum;
}

double rate(const RateModel& model, const Volume& volume, std::span<const Spin> config, int site, Spin target) {
  if (site < 0 || site >= volume.site_count()) throw InvalidArgument("site out of range");
  if (target < 0 || target >= model.q()) throw InvalidArgument("target spin out of range");
  return model.rate(LocalView(volume, config, site), target);
}

double total_rate(const RateModel& model, const Volume& volume, std::span<const Spin> config, int site) {
  if (site < 0 || site >= volume.site_count()) throw InvalidArgument("site out of range");
  return model.total_rate(LocalView(volume, config, site));
}

void check_compatible(const RateModel& model, const Volume& volume) {
  if (model.q() != volume.q())
    throw InvalidArgument("model " + model.name() + " has q=" + std::to_string(model.q()) + " but the volume has q=" +
                          std::to_string(volume.q()));
  if (model.dimension() != 0 && model.dimension() != volume.dimension())
    throw InvalidArgument("model " + model.name() + " is written for d=" + std::to_string(model.dimension()));
  if (volume.boundary() == BoundaryKind::frozen && model.radius() > volume.shell_width())
    throw InvalidArgument("frozen shell is narrower than the interaction radius");
}

std::uint64_t model_hash(const RateModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : model.describe()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// --- independent flip -------------------------------------------------------

IndependentFlip::IndependentFlip(Eigen::VectorXd target, double lambda) : target_(std::move(target)), lambda_(lambda) {
  if (target_.size() < 2) throw InvalidArgument("independent flip needs q >= 2");
  if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) throw InvalidArgument("independent flip rate must be positive");
  if (!(target_.array() > 0.0).all() || std::abs(target_.sum() - 1.0) > 1e-12)
    throw InvalidArgument("independent flip target must be a positive probability vector");
}

IndependentFlip IndependentFlip::uniform(int q, double lambda) {
  return IndependentFlip(Eigen::VectorXd::Constant(q, 1.0 / q), lambda);
}

std::string IndependentFlip::describe() const {
  std::string s = "independent_flip(lambda=" + num(lambda_) + ",target=[";
  for (Eigen::Index i = 0; i < target_.size(); ++i) s += (i ? "," : "") + num(target_[i]);
  return s + "])";
}

RateBounds IndependentFlip::bounds() const { return {lambda_ * target_.minCoeff(), lambda_ * target_.maxCoeff()}; }

double IndependentFlip::rate(const LocalView&, Spin target) const { return lambda_ * target_[target]; }

// --- Glauber Ising ----------------------------------------------------------

GlauberIsing::GlauberIsing(double beta, int dimension) : beta_(beta), dimension_(dimension) {
  if (!std::isfinite(beta) || beta < 0.0) throw InvalidArgument("Glauber beta must be finite and non-negative");
  if (dimension < 1) throw InvalidArgument("Glauber dimension must be positive");
}

std::string GlauberIsing::describe() const {
  return "glauber_ising(beta=" + num(beta_) + ",d=" + std::to_string(dimension_) + ")";
}

RateBounds GlauberIsing::bounds() const {
  const double hmax = 2.0 * dimension_;
  return {1.0 / (1.0 + std::exp(2.0 * beta_ * hmax)), 1.0 / (1.0 + std::exp(-2.0 * beta_ * hmax))};
}

double GlauberIsing::rate(const LocalView& view, Spin target) const {
  int h = 0;
  for (const auto& n : view.nearest()) h += 2 * view.read(n) - 1;
  const double s = 2.0 * target - 1.0;
  // exp(b s h) / (exp(b h) + exp(-b h)) == 1 / (1 + exp(-2 b s h))
  return 1.0 / (1.0 + std::exp(-2.0 * beta_ * s * h));
}

// --- driven clock -----------------------------------------------------------

DrivenClock::DrivenClock(int q, std::vector<double> phi, double baseline)
    : q_(q), phi_(std::move(phi)), baseline_(baseline) {
  if (q < 2) throw InvalidArgument("driven clock needs q >= 2");
  if (static_cast<int>(phi_.size()) != q) throw InvalidArgument("driven clock phi table must have q entries");
  for (double v : phi_)
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("driven clock phi must be finite and non-negative");
  if (!(baseline_ >= 0.0) || !std::isfinite(baseline_))
    throw InvalidArgument("driven clock baseline must be finite and non-negative");
}

DrivenClock DrivenClock::standard(int q, double epsilon, double baseline) {
  std::vector<double> phi(static_cast<std::size_t>(q), 1.0);
  phi[0] = 1.0 + epsilon;
  return DrivenClock(q, std::move(phi), baseline);
}

std::string DrivenClock::describe() const {
  std::string s = "driven_clock(q=" + std::to_string(q_) + ",baseline=" + num(baseline_) + ",phi=[";
  for (std::size_t i = 0; i < phi_.size(); ++i) s += (i ? "," : "") + num(phi_[i]);
  return s + "])";
}

RateBounds DrivenClock::bounds() const {
  double lo = *std::min_element(phi_.begin(), phi_.end());
  double hi = *std::max_element(phi_.begin(), phi_.end());
  if (q_ > 2) {
    lo = std::min(lo, baseline_);
    hi = std::max(hi, baseline_);
  }
  return {lo, hi};
}

double DrivenClock::rate(const LocalView& view, Spin target) const {
  if (target == (view.self() + 1) % q_) return phi_[static_cast<std::size_t>(view.neighbor(0, -1))];
  return baseline_;
}

// --- soft FA ----------------------------------------------------------------

SoftFA::SoftFA(double epsilon, double density, Spin facilitating, int threshold)
    : epsilon_(epsilon), density_(density), facilitating_(facilitating), threshold_(threshold) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("FA epsilon must be finite and non-negative");
  if (!(density > 0.0 && density < 1.0)) throw InvalidArgument("FA density must lie in (0,1)");
  if (facilitating != 0 && facilitating != 1) throw InvalidArgument("FA facilitating spin must be 0 or 1");
  if (threshold < 1) throw InvalidArgument("FA threshold must be positive");
}

std::string SoftFA::describe() const {
  return name() + "(epsilon=" + num(epsilon_) + ",density=" + num(density_) +
         ",facilitating=" + std::to_string(facilitating_) + ",threshold=" + std::to_string(threshold_) + ")";
}

RateBounds SoftFA::bounds() const {
  const double pmin = std::min(density_, 1.0 - density_);
  const double pmax = std::max(density_, 1.0 - density_);
  return {epsilon_ * pmin, (epsilon_ + 1.0) * pmax};
}

double SoftFA::rate(const LocalView& view, Spin target) const {
  int facilitating = 0;
  for (const auto& n : view.nearest())
    if (view.read(n) == facilitating_) ++facilitating;
  const double constraint = facilitating >= threshold_ ? 1.0 : 0.0;
  return (epsilon_ + constraint) * (target == 1 ? density_ : 1.0 - density_);
}

// --- rate table -------------------------------------------------------------

namespace {

std::vector<std::vector<int>> box_offsets(int d, int radius) {
  const int width = 2 * radius + 1;
  int count = 1;
  for (int k = 0; k < d; ++k) count *= width;
  std::vector<std::vector<int>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int n = 0; n < count; ++n) {
    std::vector<int> delta(static_cast<std::size_t>(d));
    int rest = n;
    for (int k = d - 1; k >= 0; --k) {
      delta[static_cast<std::size_t>(k)] = rest % width - radius;
      rest /= width;
    }
    out.push_back(std::move(delta));
  }
  return out;
}

}  // namespace

RateTable::RateTable(int q, int dimension, int radius, std::map<std::pair<std::string, Spin>, double> table,
                     std::optional<double> fallback)
    : q_(q), dimension_(dimension), radius_(radius), fallback_(fallback) {
  if (q < 2 || q > 36) throw InvalidArgument("rate table q must lie in [2, 36]");
  if (dimension < 1) throw InvalidArgument("rate table dimension must be positive");
  if (radius < 0) throw InvalidArgument("rate table radius must be non-negative");
  int length = 1;
  for (int k = 0; k < dimension; ++k) length *= 2 * radius + 1;
  const int center = (length - 1) / 2;
  std::size_t patterns = 1;
  for (int k = 0; k < length; ++k) {
    patterns *= static_cast<std::size_t>(q);
    if (patterns > (std::size_t{1} << 22)) throw InfeasibleSize("rate table neighbourhood space too large");
  }
  if (fallback_ && (!(*fallback_ >= 0.0) || !std::isfinite(*fallback_)))
    throw InvalidArgument("rate table default must be finite and non-negative");

  dense_.assign(patterns * static_cast<std::size_t>(q), std::numeric_limits<double>::quiet_NaN());
  for (const auto& [key, value] : table) {
    const auto& [pat, target] = key;
    if (static_cast<int>(pat.size()) != length)
      throw InvalidArgument("pattern '" + pat + "' must have " + std::to_string(length) + " spins");
    std::size_t idx = 0;
    for (char c : pat) {
      const int v = digit_value(c);
      if (v < 0 || v >= q) throw InvalidArgument("pattern '" + pat + "' has a spin out of range");
      idx = idx * static_cast<std::size_t>(q) + static_cast<std::size_t>(v);
    }
    if (target < 0 || target >= q) throw InvalidArgument("target out of range for pattern '" + pat + "'");
    if (digit_value(pat[static_cast<std::size_t>(center)]) == target)
      throw InvalidArgument("pattern '" + pat + "' lists its own centre spin as target");
    if (!(value >= 0.0) || !std::isfinite(value)) throw InvalidArgument("rate for '" + pat + "' must be non-negative");
    dense_[idx * static_cast<std::size_t>(q) + static_cast<std::size_t>(target)] = value;
  }

  bounds_ = {std::numeric_limits<double>::infinity(), 0.0};
  std::ostringstream canon;
  canon << "rate_table(q=" << q << ",d=" << dimension << ",radius=" << radius << ",default="
        << (fallback_ ? num(*fallback_) : "none") << ",entries=";
  for (std::size_t p = 0; p < patterns; ++p) {
    int center_spin = 0;
    {
      std::size_t rest = p;
      for (int k = length - 1; k >= 0; --k) {
        if (k == center) center_spin = static_cast<int>(rest % static_cast<std::size_t>(q));
        rest /= static_cast<std::size_t>(q);
      }
    }
    for (int j = 0; j < q; ++j) {
      if (j == center_spin) continue;
      double v = dense_[p * static_cast<std::size_t>(q) + static_cast<std::size_t>(j)];
      if (std::isnan(v)) {
        if (!fallback_) {
          std::string pat(static_cast<std::size_t>(length), '0');
          std::size_t rest = p;
          for (int k = length - 1; k >= 0; --k) {
            pat[static_cast<std::size_t>(k)] = kDigits[rest % static_cast<std::size_t>(q)];
            rest /= static_cast<std::size_t>(q);
          }
          throw InvalidArgument("rate table has no entry for pattern '" + pat + "' target " + std::to_string(j) +
                                " and no default");
        }
        v = *fallback_;
      } else {
        canon << p << ':' << j << '=' << num(v) << ';';
      }
      bounds_.min = std::min(bounds_.min, v);
      bounds_.max = std::max(bounds_.max, v);
    }
  }
  canon << ")";
  canonical_ = canon.str();
  offsets_ = box_offsets(dimension, radius);
}

RateTable RateTable::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::optional<int> q, dimension, radius;
  std::optional<double> fallback;
  std::map<std::pair<std::string, Spin>, double> table;

  auto fail = [&](const std::string& msg) { throw InvalidArgument("rate table line " + std::to_string(line_no) + ": " + msg); };
  auto parse_int = [&](const std::string& tok) {
    int v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) fail("expected an integer, got '" + tok + "'");
    return v;
  };
  auto parse_real = [&](const std::string& tok) {
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) fail("expected a decimal rate, got '" + tok + "'");
    return v;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok[0] == "q" || tok[0] == "dimension" || tok[0] == "radius") {
      if (tok.size() != 2) fail("'" + tok[0] + "' takes one value");
      auto& slot = tok[0] == "q" ? q : tok[0] == "dimension" ? dimension : radius;
      if (slot) fail("duplicate '" + tok[0] + "'");
      slot = parse_int(tok[1]);
    } else if (tok[0] == "default") {
      if (tok.size() != 2) fail("'default' takes one value");
      if (fallback) fail("duplicate 'default'");
      fallback = parse_real(tok[1]);
    } else {
      if (tok.size() != 3) fail("expected '<pattern> <target> <rate>'");
      const auto key = std::make_pair(tok[0], parse_int(tok[1]));
      if (table.count(key)) fail("duplicate entry for pattern '" + tok[0] + "' target " + tok[1]);
      table[key] = parse_real(tok[2]);
    }
  }
  if (!q || !dimension || !radius) throw InvalidArgument("rate table must declare q, dimension and radius");
  return RateTable(*q, *dimension, *radius, std::move(table), fallback);
}

RateTable RateTable::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot open rate table '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string RateTable::describe() const { return canonical_; }

std::string RateTable::pattern(const LocalView& view) const {
  std::string out;
  for (const auto& delta : offsets_) out += kDigits[view.at(delta)];
  return out;
}

double RateTable::rate(const LocalView& view, Spin target) const {
  std::size_t idx = 0;
  for (const auto& delta : offsets_) idx = idx * static_cast<std::size_t>(q_) + static_cast<std::size_t>(view.at(delta));
  const double v = dense_[idx * static_cast<std::size_t>(q_) + static_cast<std::size_t>(target)];
  return std::isnan(v) ? fallback_.value_or(0.0) : v;
}

}  // namespace ips
