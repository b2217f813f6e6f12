#ifndef IPS_AUDIT_HPP
#define IPS_AUDIT_HPP

// Exact oscillations of the rates and the certification of a model against
// the boundedness, positivity and short-range conditions.

#include <optional>
#include <string>
#include <vector>

#include "ips/lattice.hpp"
#include "ips/models.hpp"

namespace ips {

/// Neighbourhood enumerations larger than this are refused.
inline constexpr std::size_t kMaxOscillationStates = std::size_t{1} << 22;

/// Oscillations of the rates at site x under changes of one other site y.
struct OscillationEntry {
  int x = 0;
  int y = 0;
  std::vector<double> per_target;  ///< delta_y(c_x(., j)) for j = 0..q-1
  double total = 0.0;              ///< delta_y(c_x(.)), c_x the total rate

  double per_target_sum() const;
};

/// Every nonzero-range entry y != x of the dependency ball of x, computed by
/// exhaustive enumeration of the ball.
std::vector<OscillationEntry> oscillations(const RateModel& model, const Volume& volume, int x);

/// delta_y(c_x(., j)) for `target` = j, or of the total rate for nullopt.
/// Sites outside the declared radius give 0.
double oscillation(const RateModel& model, const Volume& volume, int x, int y, std::optional<Spin> target = {});

/// gamma_Lambda(x) = sum over y outside the window and over j of
/// delta_y(c_x(., j)), y restricted to the ambient volume.
double gamma(const RateModel& model, const Window& window, int x, const Volume& volume);
/// Same, with the oscillation of the total rate instead of the per-target sum.
double gamma_total(const RateModel& model, const Window& window, int x, const Volume& volume);

struct AuditFailure {
  std::string condition;  ///< "R1", "R3", "R4", "bounds", "radius"
  int site = -1;
  std::string neighbourhood;  ///< spins of the witnessing configuration on the dependency ball
  Spin target = -1;
  double value = 0.0;
  std::string message;
};

struct WindowGamma {
  Window window;
  std::vector<double> gamma;        ///< per volume site; zero outside the window
  std::vector<double> gamma_total;  ///< total-rate variant
};

struct RateAudit {
  double sup_rate = 0.0;     ///< sup_x sum_j sup_eta c_x(eta, j)
  double min_rate = 0.0;     ///< inf over x, eta, j != eta_x of c_x(eta, j)
  double max_rate = 0.0;
  double r4_sum = 0.0;       ///< sum_v |v| sup_x delta_{x+v} c_x on the torus
  bool r1 = false;
  bool r3 = false;
  bool r4 = false;
  bool bounds_ok = false;
  bool radius_ok = false;
  bool radius_exhaustive = false;
  std::vector<OscillationEntry> oscillations;
  std::vector<WindowGamma> ladder;
  double c1 = 0.0;  ///< sup_x sum_k gamma_k(x)
  double c2 = 0.0;  ///< sup_k k^{-(d-1)} sum_{x in Lambda_k} gamma_k(x)
  double c1_total = 0.0;
  double c2_total = 0.0;
  std::vector<AuditFailure> failures;

  bool passed() const { return failures.empty(); }
};

/// Enumerates every site's dependency ball exactly; the declared radius is
/// checked exhaustively when q^|volume| <= 4096 and on `radius_samples`
/// random configurations otherwise.
RateAudit audit(const RateModel& model, const Volume& volume, const std::vector<Window>& ladder,
                std::uint64_t seed = 1, int radius_samples = 200);

/// Centered boxes of radius 1..n.
std::vector<Window> window_ladder(const Volume& volume, int n);

}  // namespace ips

#endif  // IPS_AUDIT_HPP
