#ifndef IPS_MODELS_HPP
#define IPS_MODELS_HPP

// Single-site transition rates c_x(eta, j) and the model zoo.

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ips/lattice.hpp"

namespace ips {

/// What a rate function may look at: the spins of a configuration as seen
/// from one site.
class LocalView {
 public:
  LocalView(const Volume& volume, std::span<const Spin> spins, int site)
      : volume_(&volume), spins_(spins), site_(site) {}

  int site() const { return site_; }
  const Volume& volume() const { return *volume_; }
  Spin self() const { return spins_[static_cast<std::size_t>(site_)]; }
  /// Nearest neighbour along `axis`, `dir` = -1 or +1.
  Spin neighbor(int axis, int dir) const {
    return read(volume_->nearest(site_)[static_cast<std::size_t>(2 * axis + (dir > 0 ? 1 : 0))]);
  }
  std::span<const Neighbor> nearest() const { return volume_->nearest(site_); }
  Spin read(const Neighbor& n) const { return n.is_site() ? spins_[static_cast<std::size_t>(n.site)] : n.frozen; }
  Spin at(std::span<const int> delta) const { return read(volume_->offset(site_, delta)); }

 private:
  const Volume* volume_;
  std::span<const Spin> spins_;
  int site_;
};

struct RateBounds {
  double min = 0.0;
  double max = 0.0;
};

/// Rates c_x(eta, j) for j != eta_x. Implementations are pure functions of
/// the spins within `radius()` (L-infinity) of x.
class RateModel {
 public:
  virtual ~RateModel() = default;

  virtual std::string name() const = 0;
  /// Canonical parameter string; stable across runs (feeds the model hash).
  virtual std::string describe() const = 0;
  virtual int q() const = 0;
  /// Declared interaction radius; negative means unbounded.
  virtual int radius() const = 0;
  /// Declared range of the off-diagonal rates.
  virtual RateBounds bounds() const = 0;
  /// Lattice dimension the model is written for; 0 means any.
  virtual int dimension() const { return 0; }
  virtual double rate(const LocalView& view, Spin target) const = 0;

  double total_rate(const LocalView& view) const;
};

using ModelPtr = std::shared_ptr<const RateModel>;

double rate(const RateModel& model, const Volume& volume, std::span<const Spin> config, int site, Spin target);
double total_rate(const RateModel& model, const Volume& volume, std::span<const Spin> config, int site);

/// Throws unless the model can run on the volume: matching q and dimension,
/// a frozen shell at least as wide as the interaction radius.
void check_compatible(const RateModel& model, const Volume& volume);

/// FNV-1a of describe(); recorded in trajectory logs.
std::uint64_t model_hash(const RateModel& model);

/// Every site forgets its state at rate `lambda` and redraws it from `target`:
/// c_x(eta, j) = lambda * target(j). The product of `target` is stationary.
class IndependentFlip final : public RateModel {
 public:
  IndependentFlip(Eigen::VectorXd target, double lambda = 1.0);
  static IndependentFlip uniform(int q, double lambda = 1.0);

  std::string name() const override { return "independent_flip"; }
  std::string describe() const override;
  int q() const override { return static_cast<int>(target_.size()); }
  int radius() const override { return 0; }
  RateBounds bounds() const override;
  double rate(const LocalView& view, Spin target) const override;

  const Eigen::VectorXd& target() const { return target_; }

 private:
  Eigen::VectorXd target_;
  double lambda_;
};

/// Heat-bath Glauber dynamics of the nearest-neighbour Ising model, spins
/// {0,1} read as {-1,+1}: c_x(eta, s) = exp(beta*s*h) / (2 cosh(beta*h)),
/// h the sum of the neighbouring spins.
class GlauberIsing final : public RateModel {
 public:
  GlauberIsing(double beta, int dimension);

  std::string name() const override { return "glauber_ising"; }
  std::string describe() const override;
  int q() const override { return 2; }
  int radius() const override { return 1; }
  RateBounds bounds() const override;
  int dimension() const override { return dimension_; }
  double rate(const LocalView& view, Spin target) const override;

  double beta() const { return beta_; }

 private:
  double beta_;
  int dimension_;
};

/// Clock model driven along one direction: the clockwise move eta_x -> eta_x+1
/// (mod q) happens at rate phi(spin of the left neighbour x - e_1), every
/// other target at rate `baseline`. Leaves the uniform product measure
/// stationary for any phi; for q >= 3 and phi != baseline it is not
/// reversible.
class DrivenClock final : public RateModel {
 public:
  DrivenClock(int q, std::vector<double> phi, double baseline);
  /// phi(s) = 1 + epsilon * [s == 0].
  static DrivenClock standard(int q, double epsilon, double baseline);

  std::string name() const override { return "driven_clock"; }
  std::string describe() const override;
  int q() const override { return q_; }
  int radius() const override { return 1; }
  RateBounds bounds() const override;
  double rate(const LocalView& view, Spin target) const override;

  const std::vector<double>& phi() const { return phi_; }
  double baseline() const { return baseline_; }

 private:
  int q_;
  std::vector<double> phi_;
  double baseline_;
};

/// Soft Fredrickson-Andersen model, q = 2:
/// c_x(eta, j) = (epsilon + [at least `threshold` neighbours hold the
/// facilitating spin]) * p(j), p(1) = density, p(0) = 1 - density.
/// Bernoulli(density) is stationary. epsilon = 0 is the hard constrained
/// model, which violates positivity of the rates.
class SoftFA final : public RateModel {
 public:
  SoftFA(double epsilon, double density, Spin facilitating = 0, int threshold = 1);

  std::string name() const override { return epsilon_ > 0.0 ? "soft_fa" : "hard_fa"; }
  std::string describe() const override;
  int q() const override { return 2; }
  int radius() const override { return 1; }
  RateBounds bounds() const override;
  double rate(const LocalView& view, Spin target) const override;

  double density() const { return density_; }
  double epsilon() const { return epsilon_; }

 private:
  double epsilon_;
  double density_;
  Spin facilitating_;
  int threshold_;
};

/// Rates read from an explicit table keyed by (neighbourhood pattern,
/// target). The pattern lists the spins of the (2R+1)^d box around x in
/// lexicographic offset order, e.g. "010" for R = 1, d = 1 (left, self,
/// right).
class RateTable final : public RateModel {
 public:
  RateTable(int q, int dimension, int radius, std::map<std::pair<std::string, Spin>, double> table,
            std::optional<double> fallback);

  /// Parse the text format:
  ///
  ///     # comment
  ///     q 2
  ///     dimension 1
  ///     radius 1
  ///     default 0.5          (optional)
  ///     010 1 0.25
  ///
  /// Rates are parsed with from_chars (correctly rounded decimal).
  static RateTable parse(const std::string& text);
  static RateTable load(const std::string& path);

  std::string name() const override { return "rate_table"; }
  std::string describe() const override;
  int q() const override { return q_; }
  int radius() const override { return radius_; }
  RateBounds bounds() const override { return bounds_; }
  double rate(const LocalView& view, Spin target) const override;

  int dimension() const override { return dimension_; }
  /// Neighbourhood pattern of `view`, in the table's key format.
  std::string pattern(const LocalView& view) const;

 private:
  int q_;
  int dimension_;
  int radius_;
  std::vector<double> dense_;  // pattern index * q + target; NaN where unset
  std::optional<double> fallback_;
  RateBounds bounds_;
  std::string canonical_;
  std::vector<std::vector<int>> offsets_;
};

}  // namespace ips

#endif  // IPS_MODELS_HPP
