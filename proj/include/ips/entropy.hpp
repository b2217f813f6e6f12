#ifndef IPS_ENTROPY_HPP
#define IPS_ENTROPY_HPP

// Window entropy functionals: h_Lambda, the entropy loss g_Lambda in its
// inflow/outflow form and in the bulk/boundary split, window-averaged rates
// and the alpha/beta tables.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ips/exact.hpp"
#include "ips/lattice.hpp"
#include "ips/models.hpp"

namespace ips {

/// Cylinder integrals of one distribution over one window.
struct CylinderIntegrals {
  int q = 0;
  int k = 0;                    ///< window size
  Eigen::VectorXd marginal;     ///< nu(eta_Lambda)
  std::vector<double> integral; ///< int_[eta_Lambda] c_x(w, j) nu(dw), index (pattern * k + x) * q + j

  double at(std::uint32_t pattern, int x, Spin j) const {
    return integral[(static_cast<std::size_t>(pattern) * static_cast<std::size_t>(k) + static_cast<std::size_t>(x)) *
                        static_cast<std::size_t>(q) +
                    static_cast<std::size_t>(j)];
  }
};

/// Rates of the window sites tabulated on every ambient state, plus the
/// ambient-state -> window-pattern partition. Built once per
/// (model, volume, window); every functional below is a pass over it.
///
/// Window-local site indices (`x` below) are positions in window().sites().
class WindowKernel {
 public:
  WindowKernel(const RateModel& model, const Volume& volume, const Window& window);

  const Volume& volume() const { return volume_; }
  const Window& window() const { return window_; }
  int q() const { return q_; }
  int size() const { return window_.size(); }
  std::uint32_t patterns() const { return patterns_; }
  StateIndex states() const { return states_; }

  Spin spin(std::uint32_t pattern, int x) const;
  /// Index of eta_Lambda^{x,j}.
  std::uint32_t flipped(std::uint32_t pattern, int x, Spin j) const;
  std::uint32_t pattern_of(StateIndex state) const { return map_[static_cast<std::size_t>(state)]; }
  double rate(StateIndex state, int x, Spin j) const {
    return rates_[(static_cast<std::size_t>(state) * static_cast<std::size_t>(size()) + static_cast<std::size_t>(x)) *
                      static_cast<std::size_t>(q_) +
                  static_cast<std::size_t>(j)];
  }

  /// gamma_Lambda(x) (per-target sum) for each window site.
  const std::vector<double>& gamma() const { return gamma_; }
  const std::vector<double>& gamma_total() const { return gamma_total_; }
  /// Smallest off-diagonal rate of a window site over all ambient states.
  double min_rate() const { return min_rate_; }

  CylinderIntegrals integrate(const Distribution& nu) const;
  /// mu(eta_Lambda) for every pattern.
  Eigen::VectorXd pattern_weights(const ProductMeasure& mu) const;
  /// Pattern as "site:spin" pairs in window order, e.g. "{3:0,4:1}".
  std::string pattern_name(std::uint32_t pattern) const;

 private:
  Volume volume_;
  Window window_;
  int q_;
  StateIndex states_;
  std::uint32_t patterns_;
  std::vector<std::uint32_t> map_;
  std::vector<std::uint32_t> stride_;
  std::vector<double> rates_;
  std::vector<double> gamma_;
  std::vector<double> gamma_total_;
  double min_rate_;
};

/// h_Lambda(nu | mu) = sum nu(eta_Lambda) log(nu(eta_Lambda) / mu(eta_Lambda)),
/// 0 log 0 = 0, +inf if nu charges a pattern mu does not.
double rel_entropy(const Distribution& nu, const ProductMeasure& mu, const Volume& volume, const Window& window);
/// Same, for a distribution already living on the window (`mu` over the window sites).
double rel_entropy(const Distribution& nu_window, const ProductMeasure& mu_window);

/// Inflow/outflow form: sum over eta_Lambda, x, i != eta_x of
/// [int_[eta^{x,i}] c_x(., eta_x) dnu - int_[eta] c_x(., i) dnu] log(nu / mu)(eta_Lambda).
/// Throws ZeroCylinder if some nu(eta_Lambda) = 0.
double entropy_loss_direct(const WindowKernel& kernel, const Distribution& nu, const ProductMeasure& mu);

struct LossSplit {
  double bulk = 0.0;      ///< -sum F(1/s) s I
  double boundary = 0.0;  ///< -sum (I - s I)
  double total() const { return bulk + boundary; }
};

/// The two displayed sums of the bulk/boundary representation, with
/// s = mu(eta) nu(eta^{x,j}) / (mu(eta^{x,j}) nu(eta)) and I = int_[eta] c_x(., j) dnu.
LossSplit entropy_loss_rewritten(const WindowKernel& kernel, const Distribution& nu, const ProductMeasure& mu);

/// c^{Lambda,rho}_x(eta_Lambda, j) = I / rho(eta_Lambda); ZeroCylinder if rho(eta_Lambda) = 0.
double window_rate(const CylinderIntegrals& cyl, std::uint32_t pattern, int x, Spin j);
double window_rate(const WindowKernel& kernel, const Distribution& rho, int x, std::span<const Spin> eta_window,
                   Spin j);

/// alpha_Lambda(x, rho) and beta_Lambda(x, rho) from window marginals.
/// `rho_window` lives on the window, `mu_window` is mu restricted to it, `x`
/// is window-local.
double alpha(const Distribution& rho_window, const ProductMeasure& mu_window, int x);
double beta(const Distribution& rho_window, const ProductMeasure& mu_window, int x);
/// Ambient versions; `site` is a volume site inside the window.
double alpha(const Distribution& rho, const ProductMeasure& mu, const Volume& volume, const Window& window, int site);
double beta(const Distribution& rho, const ProductMeasure& mu, const Volume& volume, const Window& window, int site);

/// sum over eta_Lambda, x, j != eta_x of int_[eta] c_x(., j) dmu
/// (rho(eta^{x,j}) / mu(eta^{x,j}) - rho(eta) / mu(eta)); zero when mu is
/// stationary. `mu_integrals` = kernel.integrate(mu.expand()).
double invariance_sum(const WindowKernel& kernel, const CylinderIntegrals& mu_integrals, const ProductMeasure& mu,
                      const Distribution& rho_window);

struct EntropyReport {
  Window window;
  double h = 0.0;
  double g_direct = 0.0;
  double g_rewritten = 0.0;
  double bulk = 0.0;
  double boundary = 0.0;
  std::vector<double> alpha;  ///< per window site
  std::vector<double> beta;
  std::vector<double> gamma;

  double sum_alpha() const;
  double sum_beta() const;
  double sum_gamma_beta() const;
};

/// Every functional at one distribution. Throws ZeroCylinder as the loss functions do.
EntropyReport entropy_report(const WindowKernel& kernel, const Distribution& nu, const ProductMeasure& mu);

struct TraceRow {
  double t = 0.0;
  double h = 0.0;
  double g_direct = 0.0;
  double bulk = 0.0;
  double boundary = 0.0;
  double sum_alpha = 0.0;
  double sum_beta = 0.0;
  double sum_gamma_beta = 0.0;
};

/// Rows at each time of a non-decreasing grid, nu_t evolved exactly from nu0.
/// Rows are computed on up to `threads` threads; output order follows `times`.
std::vector<TraceRow> entropy_trace(const WindowKernel& kernel, const GeneratorMatrix& gen, const Distribution& nu0,
                                    const ProductMeasure& mu, std::span<const double> times, int threads = 1,
                                    double tol = 1e-14);

inline constexpr const char* kTraceSchema = "# ips-trace v1";
std::string trace_csv(const std::vector<TraceRow>& rows);
nlohmann::json trace_json(const std::vector<TraceRow>& rows);

/// Time integrals over [0, T] along the exact orbit: trapezoid sums on
/// doubling grids, Richardson-extrapolated; converged when two successive
/// extrapolations agree within `tol`.
struct LossIntegral {
  double g = 0.0;            ///< int g_direct
  double bulk = 0.0;
  double boundary = 0.0;
  double sum_alpha = 0.0;
  double sum_gamma_beta = 0.0;
  double entropy_change = 0.0;  ///< h(nu_T) - h(nu_0)
  double error_estimate = 0.0;  ///< change between the last two extrapolations
  int intervals = 0;
  bool converged = false;
};

LossIntegral integrate_loss(const WindowKernel& kernel, const GeneratorMatrix& gen, const Distribution& nu0,
                            const ProductMeasure& mu, double T, double tol = 1e-8, int max_intervals = 1 << 12);

}  // namespace ips

#endif  // IPS_ENTROPY_HPP
