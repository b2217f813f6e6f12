#ifndef IPS_EXACT_HPP
#define IPS_EXACT_HPP

// Exact master-equation dynamics on the full configuration space of a finite
// volume: d/dt nu_t = nu_t Q.

#include <Eigen/Sparse>

#include "ips/lattice.hpp"
#include "ips/models.hpp"

namespace ips {

/// Sparse generator. Entry (a, b), a != b, is the rate of the jump a -> b;
/// the diagonal makes every row sum to zero.
class GeneratorMatrix {
 public:
  using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  GeneratorMatrix(Sparse q, int spins, int sites);

  const Sparse& matrix() const { return q_; }
  /// Q^T, kept so that nu Q is a row-major product.
  const Sparse& transpose() const { return qt_; }
  StateIndex size() const { return static_cast<StateIndex>(q_.rows()); }
  int q() const { return spins_; }
  int sites() const { return sites_; }
  /// max |Q(a, a)|
  double max_exit_rate() const { return max_exit_; }

  /// nu Q as a column vector.
  Eigen::VectorXd apply(const Eigen::VectorXd& nu) const { return qt_ * nu; }

 private:
  Sparse q_;
  Sparse qt_;
  int spins_;
  int sites_;
  double max_exit_;
};

GeneratorMatrix build_generator(const RateModel& model, const Volume& volume);

struct EvolveStats {
  double uniformization_rate = 0.0;
  int terms = 0;             ///< matrix-vector products taken
  double tail_bound = 0.0;   ///< certified Poisson tail mass dropped
  double drift = 0.0;        ///< |1 - total mass| before renormalization
};

/// nu e^{tQ} by uniformization. The dropped Poisson tail is below `tol`, so
/// the result is within `tol` of the exact law in total variation.
Distribution evolve(const Distribution& dist, const GeneratorMatrix& gen, double t, double tol = 1e-14,
                    EvolveStats* stats = nullptr);

struct StationaryStats {
  double residual = 0.0;  ///< ||pi Q||_1
  int iterations = 0;
  bool direct = false;
};

/// Unique pi with pi Q = 0. Direct sparse solve up to 2^16 states, power
/// iteration on the uniformized chain (Aitken-accelerated) beyond that or
/// when the direct residual misses `tol`.
Distribution stationary(const GeneratorMatrix& gen, double tol = 1e-12, StationaryStats* stats = nullptr,
                        int max_iterations = 2000000);

/// ||mu Q||_1 for the expansion of the product measure.
double stationarity_residual(const RateModel& model, const Volume& volume, const ProductMeasure& mu);
double stationarity_residual(const GeneratorMatrix& gen, const Distribution& dist);

/// Full-space relative entropy sum nu log(nu / pi), with 0 log 0 = 0;
/// +inf if nu charges a state pi does not.
double relative_entropy(const Distribution& nu, const Distribution& pi);

double l1_distance(const Distribution& a, const Distribution& b);

}  // namespace ips

#endif  // IPS_EXACT_HPP
