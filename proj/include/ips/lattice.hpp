#ifndef IPS_LATTICE_HPP
#define IPS_LATTICE_HPP

// Finite-volume configuration space: boxes and tori in Z^d, spin
// configurations, mixed-radix state indices, windows and distributions.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ips/error.hpp"

namespace ips {

using Spin = int;
using StateIndex = std::uint64_t;

/// Largest state count an exact (dense) distribution may have.
inline constexpr StateIndex kMaxExactStates = StateIndex{1} << 24;

enum class BoundaryKind { periodic, frozen };

/// A site seen from another site: either an interior site index, or a clamped
/// spin from the frozen outer shell (site == -1).
struct Neighbor {
  int site = -1;
  Spin frozen = 0;
  bool is_site() const { return site >= 0; }
};

/// The box {0..side-1}^d, either wrapped into a torus or surrounded by a
/// frozen outer shell of width `shell_width`.
///
/// Sites are enumerated lexicographically over their coordinates, first axis
/// most significant. Every other module relies on this enumeration.
class Volume {
 public:
  static Volume torus(int d, int side, int q);
  /// Box with every shell site clamped to `shell_spin`.
  static Volume frozen_box(int d, int side, int q, Spin shell_spin, int shell_width = 1);
  /// Box with an explicit shell: `padded` holds spins of the (side+2w)^d box
  /// in canonical order; interior entries are ignored.
  static Volume frozen_box(int d, int side, int q, std::vector<Spin> padded, int shell_width);

  int dimension() const { return d_; }
  int side() const { return side_; }
  int q() const { return q_; }
  int site_count() const { return sites_; }
  BoundaryKind boundary() const { return boundary_; }
  int shell_width() const { return shell_width_; }

  /// q^|sites|, or throws InfeasibleSize past kMaxExactStates.
  StateIndex state_count() const;

  std::vector<int> coords(int site) const;
  int site_at(std::span<const int> coords) const;

  /// Site reached from `site` by `delta`, wrapping on a torus and reading the
  /// shell of a frozen box.
  Neighbor offset(int site, std::span<const int> delta) const;
  /// The 2d nearest neighbours, ordered (axis 0 -, axis 0 +, axis 1 -, ...).
  std::span<const Neighbor> nearest(int site) const {
    return {nearest_.data() + static_cast<std::size_t>(site) * 2 * d_, static_cast<std::size_t>(2 * d_)};
  }

  /// L-infinity distance, with wrap-around on a torus.
  int distance(int a, int b) const;
  /// Distinct interior sites within L-infinity distance `radius` of `site`.
  std::vector<int> ball(int site, int radius) const;
  /// Site with coordinates side/2 on every axis.
  int center() const;

  std::string describe() const;

 private:
  Volume(int d, int side, int q, BoundaryKind kind, std::vector<Spin> padded, int shell_width);

  int d_;
  int side_;
  int q_;
  int sites_;
  BoundaryKind boundary_;
  int shell_width_;
  std::vector<Spin> padded_shell_;
  std::vector<Neighbor> nearest_;
};

/// Spins of a configuration, one per site of a volume.
using SpinConfig = std::vector<Spin>;

void validate(const SpinConfig& config, const Volume& volume);

/// Mixed-radix index, least significant site first.
StateIndex encode(std::span<const Spin> config, int q);
StateIndex encode(const SpinConfig& config, const Volume& volume);
SpinConfig decode(StateIndex index, int q, int sites);
SpinConfig decode(StateIndex index, const Volume& volume);

/// eta^{x,j}: eta with site x set to j.
SpinConfig flip(SpinConfig config, int site, Spin j);

/// Mixed-radix weight q^site; the index of eta^{x,j} is index + (j - eta_x) * stride.
StateIndex site_stride(int site, int q);

/// A set of sites of a volume, sorted ascending.
class Window {
 public:
  Window() = default;
  explicit Window(std::vector<int> sites);
  /// Centered box [c-r, c+r]^d around the volume's center site; must fit
  /// without wrapping.
  static Window box(const Volume& volume, int radius);
  static Window all(const Volume& volume);

  const std::vector<int>& sites() const { return sites_; }
  int size() const { return static_cast<int>(sites_.size()); }
  bool contains(int site) const;
  /// Position of `site` inside the window, or -1.
  int local_index(int site) const;
  bool subset_of(const Window& other) const;

 private:
  std::vector<int> sites_;
};

void validate(const Window& window, const Volume& volume);

/// Probability vector over q^sites configurations, canonical mixed-radix
/// indexing.
class Distribution {
 public:
  Distribution(int q, int sites, Eigen::VectorXd weights);

  static Distribution uniform(int q, int sites);
  static Distribution point_mass(int q, int sites, StateIndex state);

  int q() const { return q_; }
  int sites() const { return sites_; }
  StateIndex size() const { return static_cast<StateIndex>(weights_.size()); }
  const Eigen::VectorXd& weights() const { return weights_; }
  double operator[](StateIndex i) const { return weights_[static_cast<Eigen::Index>(i)]; }

  /// Throws unless all weights >= 0 and they sum to 1 within `tol`.
  void validate(double tol = 1e-12) const;

 private:
  int q_;
  int sites_;
  Eigen::VectorXd weights_;
};

StateIndex checked_state_count(int q, int sites);

/// Maps every ambient state to the index of its window pattern.
std::vector<std::uint32_t> pattern_map(const Volume& volume, const Window& window);

/// Cylinder probabilities nu(eta_Delta) as a distribution over the window.
Distribution marginalize(const Distribution& dist, const Volume& volume, const Window& window);

/// Per-site marginals, all strictly positive.
class ProductMeasure {
 public:
  explicit ProductMeasure(std::vector<Eigen::VectorXd> marginals);
  static ProductMeasure homogeneous(int sites, const Eigen::VectorXd& marginal);
  static ProductMeasure uniform(int q, int sites);

  int q() const { return static_cast<int>(marginals_.front().size()); }
  int sites() const { return static_cast<int>(marginals_.size()); }
  const Eigen::VectorXd& marginal(int site) const { return marginals_[static_cast<std::size_t>(site)]; }
  /// Minimal marginal weight over all sites and spins.
  double delta() const { return delta_; }

  /// Weight of a pattern on the given sites (window-local spin order).
  double cylinder(std::span<const int> sites, std::span<const Spin> pattern) const;
  double weight(std::span<const Spin> config) const;

  ProductMeasure restrict(const Window& window) const;
  Distribution expand() const;

 private:
  std::vector<Eigen::VectorXd> marginals_;
  double delta_;
};

}  // namespace ips

#endif  // IPS_LATTICE_HPP
