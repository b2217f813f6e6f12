#include "ips/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ips {

namespace {

int ipow(int base, int exp) {
  long long r = 1;
  for (int i = 0; i < exp; ++i) {
    r *= base;
    if (r > (1LL << 30)) throw InfeasibleSize("volume too large: " + std::to_string(base) + "^" + std::to_string(exp));
  }
  return static_cast<int>(r);
}

}  // namespace

Volume::Volume(int d, int side, int q, BoundaryKind kind, std::vector<Spin> padded, int shell_width)
    : d_(d), side_(side), q_(q), sites_(0), boundary_(kind), shell_width_(shell_width), padded_shell_(std::move(padded)) {
  if (d < 1) throw InvalidArgument("dimension must be positive");
  if (side < 1) throw InvalidArgument("side must be positive");
  if (q < 2) throw InvalidArgument("local state count q must be at least 2");
  sites_ = ipow(side, d);
  if (kind == BoundaryKind::frozen) {
    if (shell_width < 1) throw InvalidArgument("frozen shell width must be positive");
    const auto padded_sites = static_cast<std::size_t>(ipow(side + 2 * shell_width, d));
    if (padded_shell_.size() != padded_sites)
      throw InvalidArgument("frozen shell must list " + std::to_string(padded_sites) + " padded spins");
    for (Spin s : padded_shell_)
      if (s < 0 || s >= q) throw InvalidArgument("frozen shell spin out of range");
  }

  nearest_.resize(static_cast<std::size_t>(sites_) * 2 * d_);
  std::vector<int> delta(static_cast<std::size_t>(d_), 0);
  for (int s = 0; s < sites_; ++s) {
    for (int axis = 0; axis < d_; ++axis) {
      for (int dir = 0; dir < 2; ++dir) {
        std::fill(delta.begin(), delta.end(), 0);
        delta[static_cast<std::size_t>(axis)] = dir == 0 ? -1 : 1;
        nearest_[static_cast<std::size_t>(s) * 2 * d_ + 2 * axis + dir] = offset(s, delta);
      }
    }
  }
}

Volume Volume::torus(int d, int side, int q) { return Volume(d, side, q, BoundaryKind::periodic, {}, 0); }

Volume Volume::frozen_box(int d, int side, int q, Spin shell_spin, int shell_width) {
  if (side < 1 || d < 1 || shell_width < 1) throw InvalidArgument("invalid frozen box");
  std::vector<Spin> padded(static_cast<std::size_t>(ipow(side + 2 * shell_width, d)), shell_spin);
  return Volume(d, side, q, BoundaryKind::frozen, std::move(padded), shell_width);
}

Volume Volume::frozen_box(int d, int side, int q, std::vector<Spin> padded, int shell_width) {
  return Volume(d, side, q, BoundaryKind::frozen, std::move(padded), shell_width);
}

StateIndex Volume::state_count() const { return checked_state_count(q_, sites_); }

std::vector<int> Volume::coords(int site) const {
  if (site < 0 || site >= sites_) throw InvalidArgument("site out of range");
  std::vector<int> c(static_cast<std::size_t>(d_));
  for (int k = d_ - 1; k >= 0; --k) {
    c[static_cast<std::size_t>(k)] = site % side_;
    site /= side_;
  }
  return c;
}

int Volume::site_at(std::span<const int> coords) const {
  if (static_cast<int>(coords.size()) != d_) throw InvalidArgument("coordinate dimension mismatch");
  int site = 0;
  for (int c : coords) {
    if (c < 0 || c >= side_) throw InvalidArgument("coordinate outside the box");
    site = site * side_ + c;
  }
  return site;
}

Neighbor Volume::offset(int site, std::span<const int> delta) const {
  if (static_cast<int>(delta.size()) != d_) throw InvalidArgument("offset dimension mismatch");
  auto c = coords(site);
  bool outside = false;
  for (int k = 0; k < d_; ++k) {
    int v = c[static_cast<std::size_t>(k)] + delta[static_cast<std::size_t>(k)];
    if (boundary_ == BoundaryKind::periodic) {
      v %= side_;
      if (v < 0) v += side_;
    } else if (v < 0 || v >= side_) {
      outside = true;
    }
    c[static_cast<std::size_t>(k)] = v;
  }
  if (!outside) return Neighbor{site_at(c), 0};

  const int padded_side = side_ + 2 * shell_width_;
  int padded = 0;
  for (int v : c) {
    const int p = v + shell_width_;
    if (p < 0 || p >= padded_side) throw InvalidArgument("offset reaches beyond the frozen shell");
    padded = padded * padded_side + p;
  }
  return Neighbor{-1, padded_shell_[static_cast<std::size_t>(padded)]};
}

int Volume::distance(int a, int b) const {
  const auto ca = coords(a);
  const auto cb = coords(b);
  int dist = 0;
  for (int k = 0; k < d_; ++k) {
    int diff = std::abs(ca[static_cast<std::size_t>(k)] - cb[static_cast<std::size_t>(k)]);
    if (boundary_ == BoundaryKind::periodic) diff = std::min(diff, side_ - diff);
    dist = std::max(dist, diff);
  }
  return dist;
}

std::vector<int> Volume::ball(int site, int radius) const {
  if (radius < 0) throw InvalidArgument("negative radius");
  std::vector<int> out;
  std::vector<int> delta(static_cast<std::size_t>(d_), -radius);
  const int width = 2 * radius + 1;
  const int count = ipow(width, d_);
  for (int n = 0; n < count; ++n) {
    int rest = n;
    for (int k = d_ - 1; k >= 0; --k) {
      delta[static_cast<std::size_t>(k)] = rest % width - radius;
      rest /= width;
    }
    // Sites beyond a frozen shell are irrelevant to the ball, so bypass offset().
    auto c = coords(site);
    bool inside = true;
    for (int k = 0; k < d_; ++k) {
      int v = c[static_cast<std::size_t>(k)] + delta[static_cast<std::size_t>(k)];
      if (boundary_ == BoundaryKind::periodic) {
        v %= side_;
        if (v < 0) v += side_;
      } else if (v < 0 || v >= side_) {
        inside = false;
      }
      c[static_cast<std::size_t>(k)] = v;
    }
    if (inside) out.push_back(site_at(c));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int Volume::center() const {
  std::vector<int> c(static_cast<std::size_t>(d_), side_ / 2);
  return site_at(c);
}

std::string Volume::describe() const {
  std::ostringstream os;
  os << "d=" << d_ << " side=" << side_ << " q=" << q_ << " boundary=";
  if (boundary_ == BoundaryKind::periodic) {
    os << "periodic";
  } else {
    os << "frozen(width=" << shell_width_ << ",shell=";
    for (Spin s : padded_shell_) os << s;
    os << ")";
  }
  return os.str();
}

void validate(const SpinConfig& config, const Volume& volume) {
  if (static_cast<int>(config.size()) != volume.site_count())
    throw InvalidArgument("configuration length " + std::to_string(config.size()) + " does not match site count " +
                          std::to_string(volume.site_count()));
  for (Spin s : config)
    if (s < 0 || s >= volume.q()) throw InvalidArgument("spin " + std::to_string(s) + " out of range");
}

StateIndex checked_state_count(int q, int sites) {
  StateIndex n = 1;
  for (int i = 0; i < sites; ++i) {
    n *= static_cast<StateIndex>(q);
    if (n > kMaxExactStates)
      throw InfeasibleSize("state space " + std::to_string(q) + "^" + std::to_string(sites) +
                           " exceeds the exact cap of 2^24 states; use the kMC engine instead");
  }
  return n;
}

StateIndex encode(std::span<const Spin> config, int q) {
  StateIndex idx = 0;
  for (std::size_t i = config.size(); i-- > 0;) idx = idx * static_cast<StateIndex>(q) + static_cast<StateIndex>(config[i]);
  return idx;
}

StateIndex encode(const SpinConfig& config, const Volume& volume) {
  validate(config, volume);
  return encode(std::span<const Spin>(config), volume.q());
}

SpinConfig decode(StateIndex index, int q, int sites) {
  SpinConfig c(static_cast<std::size_t>(sites));
  for (auto& s : c) {
    s = static_cast<Spin>(index % static_cast<StateIndex>(q));
    index /= static_cast<StateIndex>(q);
  }
  if (index != 0) throw InvalidArgument("state index out of range");
  return c;
}

SpinConfig decode(StateIndex index, const Volume& volume) { return decode(index, volume.q(), volume.site_count()); }

SpinConfig flip(SpinConfig config, int site, Spin j) {
  if (site < 0 || site >= static_cast<int>(config.size())) throw InvalidArgument("flip site out of range");
  config[static_cast<std::size_t>(site)] = j;
  return config;
}

StateIndex site_stride(int site, int q) {
  StateIndex s = 1;
  for (int i = 0; i < site; ++i) s *= static_cast<StateIndex>(q);
  return s;
}

Window::Window(std::vector<int> sites) : sites_(std::move(sites)) {
  std::sort(sites_.begin(), sites_.end());
  if (std::adjacent_find(sites_.begin(), sites_.end()) != sites_.end())
    throw InvalidArgument("window lists a site twice");
}

Window Window::box(const Volume& volume, int radius) {
  const int c = volume.side() / 2;
  if (radius < 0 || c - radius < 0 || c + radius > volume.side() - 1)
    throw InvalidArgument("window box of radius " + std::to_string(radius) + " does not fit in side " +
                          std::to_string(volume.side()));
  std::vector<int> sites;
  for (int s = 0; s < volume.site_count(); ++s) {
    const auto co = volume.coords(s);
    if (std::all_of(co.begin(), co.end(), [&](int v) { return std::abs(v - c) <= radius; })) sites.push_back(s);
  }
  return Window(std::move(sites));
}

Window Window::all(const Volume& volume) {
  std::vector<int> sites(static_cast<std::size_t>(volume.site_count()));
  std::iota(sites.begin(), sites.end(), 0);
  return Window(std::move(sites));
}

bool Window::contains(int site) const { return std::binary_search(sites_.begin(), sites_.end(), site); }

int Window::local_index(int site) const {
  auto it = std::lower_bound(sites_.begin(), sites_.end(), site);
  if (it == sites_.end() || *it != site) return -1;
  return static_cast<int>(it - sites_.begin());
}

bool Window::subset_of(const Window& other) const {
  return std::includes(other.sites_.begin(), other.sites_.end(), sites_.begin(), sites_.end());
}

void validate(const Window& window, const Volume& volume) {
  for (int s : window.sites())
    if (s < 0 || s >= volume.site_count())
      throw InvalidArgument("window site " + std::to_string(s) + " is not contained in the volume");
}

Distribution::Distribution(int q, int sites, Eigen::VectorXd weights) : q_(q), sites_(sites), weights_(std::move(weights)) {
  if (static_cast<StateIndex>(weights_.size()) != checked_state_count(q, sites))
    throw InvalidArgument("distribution length does not match q^sites");
}

Distribution Distribution::uniform(int q, int sites) {
  const auto n = static_cast<Eigen::Index>(checked_state_count(q, sites));
  return Distribution(q, sites, Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

Distribution Distribution::point_mass(int q, int sites, StateIndex state) {
  const auto n = static_cast<Eigen::Index>(checked_state_count(q, sites));
  if (state >= static_cast<StateIndex>(n)) throw InvalidArgument("point mass state out of range");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  w[static_cast<Eigen::Index>(state)] = 1.0;
  return Distribution(q, sites, std::move(w));
}

void Distribution::validate(double tol) const {
  if ((weights_.array() < 0.0).any()) throw InvalidArgument("distribution has a negative weight");
  if (!weights_.allFinite()) throw InvalidArgument("distribution has a non-finite weight");
  const double s = weights_.sum();
  if (std::abs(s - 1.0) > tol) throw InvalidArgument("distribution weights sum to " + std::to_string(s));
}

std::vector<std::uint32_t> pattern_map(const Volume& volume, const Window& window) {
  validate(window, volume);
  const int q = volume.q();
  const int n = volume.site_count();
  const StateIndex states = volume.state_count();
  std::vector<std::uint32_t> weight(static_cast<std::size_t>(n), 0);
  std::uint32_t w = 1;
  for (int s : window.sites()) {
    weight[static_cast<std::size_t>(s)] = w;
    w *= static_cast<std::uint32_t>(q);
  }

  std::vector<std::uint32_t> out(states);
  std::vector<Spin> odo(static_cast<std::size_t>(n), 0);
  std::uint32_t pattern = 0;
  for (StateIndex i = 0; i < states; ++i) {
    out[i] = pattern;
    for (int s = 0; s < n; ++s) {
      auto& v = odo[static_cast<std::size_t>(s)];
      if (++v < q) {
        pattern += weight[static_cast<std::size_t>(s)];
        break;
      }
      v = 0;
      pattern -= static_cast<std::uint32_t>(q - 1) * weight[static_cast<std::size_t>(s)];
    }
  }
  return out;
}

Distribution marginalize(const Distribution& dist, const Volume& volume, const Window& window) {
  if (dist.q() != volume.q() || dist.sites() != volume.site_count())
    throw InvalidArgument("distribution does not live on this volume");
  const auto map = pattern_map(volume, window);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(checked_state_count(volume.q(), window.size())));
  for (StateIndex i = 0; i < dist.size(); ++i) out[map[i]] += dist[i];
  const double total = out.sum();
  if (total > 0.0) out /= total;
  return Distribution(volume.q(), window.size(), std::move(out));
}

ProductMeasure::ProductMeasure(std::vector<Eigen::VectorXd> marginals) : marginals_(std::move(marginals)), delta_(1.0) {
  if (marginals_.empty()) throw InvalidArgument("product measure needs at least one site");
  const auto q = marginals_.front().size();
  if (q < 2) throw InvalidArgument("marginals need at least two states");
  for (const auto& m : marginals_) {
    if (m.size() != q) throw InvalidArgument("marginals disagree on q");
    if (std::abs(m.sum() - 1.0) > 1e-12) throw InvalidArgument("marginal does not sum to 1");
    if (!(m.array() > 0.0).all()) throw InvalidArgument("marginal entries must be strictly positive");
    delta_ = std::min(delta_, m.minCoeff());
  }
}

ProductMeasure ProductMeasure::homogeneous(int sites, const Eigen::VectorXd& marginal) {
  return ProductMeasure(std::vector<Eigen::VectorXd>(static_cast<std::size_t>(sites), marginal));
}

ProductMeasure ProductMeasure::uniform(int q, int sites) {
  return homogeneous(sites, Eigen::VectorXd::Constant(q, 1.0 / q));
}

double ProductMeasure::cylinder(std::span<const int> sites, std::span<const Spin> pattern) const {
  double w = 1.0;
  for (std::size_t k = 0; k < sites.size(); ++k) w *= marginal(sites[k])[pattern[k]];
  return w;
}

double ProductMeasure::weight(std::span<const Spin> config) const {
  double w = 1.0;
  for (std::size_t k = 0; k < config.size(); ++k) w *= marginals_[k][config[k]];
  return w;
}

ProductMeasure ProductMeasure::restrict(const Window& window) const {
  std::vector<Eigen::VectorXd> m;
  m.reserve(window.sites().size());
  for (int s : window.sites()) {
    if (s < 0 || s >= sites()) throw InvalidArgument("window outside product measure support");
    m.push_back(marginals_[static_cast<std::size_t>(s)]);
  }
  return ProductMeasure(std::move(m));
}

Distribution ProductMeasure::expand() const {
  const int n = sites();
  const StateIndex states = checked_state_count(q(), n);
  Eigen::VectorXd w(static_cast<Eigen::Index>(states));
  for (StateIndex i = 0; i < states; ++i) {
    const auto c = decode(i, q(), n);
    w[static_cast<Eigen::Index>(i)] = weight(c);
  }
  return Distribution(q(), n, std::move(w));
}

}  // namespace ips
