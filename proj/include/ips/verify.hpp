#ifndef IPS_VERIFY_HPP
#define IPS_VERIFY_HPP

// Certification of the inequalities and identities behind the entropy-loss
// argument: each check evaluates LHS - RHS of an asserted LHS <= RHS over an
// exhaustive grid or seeded random instances and keeps the worst case.

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ips/entropy.hpp"
#include "ips/lattice.hpp"
#include "ips/models.hpp"
#include "ips/random.hpp"

namespace ips {

struct CheckResult {
  std::string name;
  std::uint64_t trials = 0;
  double max_slack = -std::numeric_limits<double>::infinity();  ///< max of LHS - RHS
  nlohmann::json witness;                                        ///< inputs of the worst case
  bool pass = false;                                             ///< max_slack <= tolerance
  std::uint64_t seed = 0;
  double tolerance = 0.0;
  nlohmann::json details = nlohmann::json::object();

  /// Fold in one evaluation; `make_witness` runs only when it is the new worst case.
  template <typename W>
  void record(double slack, W&& make_witness) {
    if (slack > max_slack) {
      max_slack = slack;
      witness = make_witness();
    }
  }
  void finish() { pass = max_slack <= tolerance; }
};

nlohmann::json to_json(const CheckResult& r);

/// Worst case over several runs of the same check.
CheckResult merge(std::string name, const std::vector<CheckResult>& parts);

/// Dirichlet(1..1) law on n points; every tenth trial pushes a few weights
/// down to 1e-8 to stress near-empty cylinders.
Eigen::VectorXd random_law(CounterRng& rng, Eigen::Index n, std::uint64_t trial);

/// F(x) >= factor * (1 - sqrt x)^2 on a log grid of [lo, hi]. The lemma uses factor 1/2.
CheckResult check_F_bound(std::size_t points = 1000000, double lo = 1e-6, double hi = 1e6, double tol = 1e-15,
                          double factor = 0.5);

/// beta_Lambda(x, rho)^2 <= C alpha_Lambda(x, rho) for every window site, with
/// C = 2 (1/delta + q) unless `constant` overrides it; random rho on the
/// window plus a coordinate-ascent search on the slack.
CheckResult check_beta_alpha(const ProductMeasure& mu_window, std::size_t trials, std::uint64_t seed,
                             double tol = 1e-12, std::optional<double> constant = {}, bool adversarial = true);

/// 0 <= alpha_Delta(x, rho) <= alpha_Lambda(x, rho) for every pair of nested
/// windows Delta in Lambda of the (small) volume and every x in Delta.
CheckResult check_alpha_monotone(const Volume& volume, const ProductMeasure& mu, std::size_t trials,
                                 std::uint64_t seed, double tol = 1e-12);

/// sqrt(u1 v1) + sqrt(u2 v2) <= sqrt((u1+u2)(v1+v2)) and
/// Phi(u1+u2, v1+v2) <= Phi(u1, v1) + Phi(u2, v2), u, v in (0, 1], c, d in [1/4, 1].
/// `reversed` asserts the opposite inequalities (negative control).
CheckResult check_subadditivity(std::size_t trials, std::uint64_t seed, double tol = 1e-14, bool reversed = false);

/// |c^{Lambda,nu}_x(eta_Lambda, j) - c_x(eta, j)| <= scale * sum_{y not in Lambda} delta_y(c_x(., j))
/// for every ambient eta, window site x and target j, over `laws` random nu.
CheckResult check_quant_diff(const RateModel& model, const Volume& volume, const Window& window, std::size_t laws,
                             std::uint64_t seed, double tol = 1e-12, double scale = 1.0);

/// |invariance_sum| <= tol for random rho on the window. A model for which mu
/// is not stationary (residual > 1e-10) fails, with the residual in the witness.
CheckResult check_invariance(const RateModel& model, const Volume& volume, const ProductMeasure& mu,
                             const Window& window, std::size_t trials, std::uint64_t seed, double tol = 1e-10);

/// |g_direct - (bulk + boundary)| on random strictly positive nu.
/// `drop_boundary` compares against the bulk term alone (negative control).
CheckResult check_loss_identity(const WindowKernel& kernel, const ProductMeasure& mu, std::size_t trials,
                                std::uint64_t seed, double tol = 1e-9, bool drop_boundary = false);

/// Pointwise form of the zero-loss chain on random nu:
/// (c/2) sum_x alpha <= -bulk and |boundary| <= 2 sum_x gamma beta.
/// The second needs mu stationary.
CheckResult check_zero_loss_chain(const WindowKernel& kernel, const ProductMeasure& mu, std::size_t trials,
                                  std::uint64_t seed, double tol = 1e-10);

enum class Profile { strict, fast };

struct SuiteOptions {
  std::uint64_t seed = 20240611;
  Profile profile = Profile::strict;
  int threads = 1;
};

enum class CheckId {
  f_bound,
  beta_alpha,
  alpha_monotone,
  subadditivity,
  quant_diff,
  invariance,
  loss_identity,
  zero_loss_chain,
  count_
};

struct CheckEntry {
  CheckId id;
  std::string_view name;
};

inline constexpr std::array<CheckEntry, static_cast<std::size_t>(CheckId::count_)> kChecks{{
    {CheckId::f_bound, "F_bound"},
    {CheckId::beta_alpha, "beta_alpha"},
    {CheckId::alpha_monotone, "alpha_monotone"},
    {CheckId::subadditivity, "subadditivity"},
    {CheckId::quant_diff, "quant_diff"},
    {CheckId::invariance, "invariance"},
    {CheckId::loss_identity, "loss_identity"},
    {CheckId::zero_loss_chain, "zero_loss_chain"},
}};

constexpr bool registry_complete() {
  for (std::size_t i = 0; i < kChecks.size(); ++i)
    if (static_cast<std::size_t>(kChecks[i].id) != i || kChecks[i].name.empty()) return false;
  return true;
}
static_assert(registry_complete(), "every CheckId needs exactly one registry entry, in order");

/// One registered check with the shipped configurations for `opts.profile`.
CheckResult run_check(CheckId id, const SuiteOptions& opts);
/// Every registered check, on up to opts.threads threads, in registry order.
std::vector<CheckResult> run_suite(const SuiteOptions& opts);

struct ControlResult {
  std::string name;
  CheckResult result;
  bool failed_as_designed = false;
};

/// Deliberately broken inputs: each must make its check fail.
std::vector<ControlResult> run_negative_controls(const SuiteOptions& opts);
nlohmann::json to_json(const ControlResult& r);

}  // namespace ips

#endif  // IPS_VERIFY_HPP
