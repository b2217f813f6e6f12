#ifndef IPS_KMC_HPP
#define IPS_KMC_HPP

// Event-driven (Gillespie) simulation of the spin dynamics, ensemble
// estimates of cylinder probabilities and empirical positive-mass scans.
//
// Trajectory log layout (little endian):
//   char[8]  "IPSTRAJ1"
//   u64      master seed, trajectory index, model hash
//   u32      d, side, q, sites, boundary (0 periodic, 1 frozen)
//   f64      t_end
//   u8[n]    initial spins
//   u64      event count
//   events   f64 time, u32 site, u32 new spin

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ips/lattice.hpp"
#include "ips/models.hpp"

namespace ips {

struct Event {
  double time = 0.0;
  std::uint32_t site = 0;
  Spin spin = 0;
};

struct Trajectory {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  std::uint64_t model_hash = 0;
  std::uint32_t d = 0;
  std::uint32_t side = 0;
  std::uint32_t q = 0;
  std::uint32_t boundary = 0;
  SpinConfig initial;
  SpinConfig final_config;
  double t_end = 0.0;
  std::vector<Event> events;

  /// Configuration at time t in [0, t_end] (right-continuous).
  SpinConfig at(double t) const;
};

/// Exact continuous-time simulation; trajectory `index` uses the stream
/// (seed, index) so ensembles are reproducible in any order.
Trajectory simulate(const RateModel& model, const Volume& volume, const SpinConfig& init, double t_end,
                    std::uint64_t seed, std::uint64_t index = 0);

/// Configurations at each time of a non-decreasing grid, without recording events.
std::vector<SpinConfig> sample_path(const RateModel& model, const Volume& volume, const SpinConfig& init,
                                    std::span<const double> times, std::uint64_t seed, std::uint64_t index = 0);

std::string trajectory_bytes(const Trajectory& traj);
Trajectory trajectory_from_bytes(const std::string& bytes);
void write_trajectory(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory(const std::string& path);

struct CylinderEstimate {
  std::uint32_t pattern = 0;
  std::string name;  ///< "{site:spin,...}"
  double p = 0.0;
  double se = 0.0;  ///< sqrt(p (1 - p) / n)
  std::uint64_t count = 0;
  std::uint64_t trajectories = 0;
};

/// Window-pattern frequencies at each time of `times` over n_traj
/// trajectories from `init`; result[time][pattern]. Counts are reduced in
/// trajectory order, so the result does not depend on `threads`.
std::vector<std::vector<CylinderEstimate>> empirical_cylinders(const RateModel& model, const Volume& volume,
                                                               const SpinConfig& init, std::span<const double> times,
                                                               const Window& window, std::uint64_t n_traj,
                                                               std::uint64_t seed, int threads = 1);

std::vector<CylinderEstimate> empirical_cylinder(const RateModel& model, const Volume& volume, const SpinConfig& init,
                                                 double t, const Window& window, std::uint64_t n_traj,
                                                 std::uint64_t seed, int threads = 1);

/// All-equal configurations for every spin value, then `random` uniform ones.
std::vector<SpinConfig> scan_inits(const Volume& volume, int random, std::uint64_t seed);

struct MassRow {
  double t = 0.0;
  double floor = 0.0;     ///< min over inits and patterns
  double se = 0.0;        ///< standard error of the minimizing estimate (0 when exact)
  std::size_t init = 0;   ///< index of the minimizing initial config
  std::string pattern;
};

struct MassScan {
  Window window;
  double tau = 0.0;
  bool exact = false;
  std::vector<MassRow> rows;

  double floor() const;  ///< empirical C(tau, Lambda)
};

/// Exact evolution when the volume has at most `exact_limit` states, kMC with n_traj trajectories otherwise.
MassScan positive_mass_scan(const RateModel& model, const Volume& volume, const Window& window, double tau,
                            std::span<const double> times, const std::vector<SpinConfig>& inits,
                            std::uint64_t n_traj, std::uint64_t seed, int threads = 1,
                            StateIndex exact_limit = StateIndex{1} << 12);

inline constexpr const char* kCylinderSchema = "# ips-cylinders v1";
inline constexpr const char* kMassSchema = "# ips-positive-mass v1";
std::string cylinder_csv(const std::vector<CylinderEstimate>& est, double t);
nlohmann::json cylinder_json(const std::vector<CylinderEstimate>& est, double t);
std::string mass_csv(const MassScan& scan);
nlohmann::json to_json(const MassScan& scan);

}  // namespace ips

#endif  // IPS_KMC_HPP
