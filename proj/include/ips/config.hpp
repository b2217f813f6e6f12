#ifndef IPS_CONFIG_HPP
#define IPS_CONFIG_HPP

// Run configuration: a JSON document with a strict schema. Unknown keys are
// errors, physical parameters have no defaults, and every default that is
// applied shows up in `resolved`.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ips/error.hpp"
#include "ips/lattice.hpp"
#include "ips/models.hpp"

namespace ips {

/// Bad configuration; `field` is a dotted path such as "model.beta".
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class InitialKind { config, constant, mu, random };

struct InitialSpec {
  InitialKind kind = InitialKind::mu;
  SpinConfig config;  ///< config; constant fills it from the volume
};

struct KmcSpec {
  std::uint64_t trajectories = 0;
  int log_trajectories = 0;
  double tau = 0.5;
  int random_inits = 4;
  bool scan = false;
};

struct SequenceSpec {
  double C = 1.0;
  int d = 3;
  std::uint64_t N = 100000;
  double tail_tol = 1e-9;
  std::int64_t shells = 50;
  std::optional<double> a;
  std::vector<double> delta;
};

struct RunConfig {
  nlohmann::json resolved = nlohmann::json::object();
  std::shared_ptr<const RateModel> model;
  std::optional<Volume> volume;
  std::optional<ProductMeasure> mu;
  std::optional<Window> window;
  std::vector<double> times;
  std::optional<InitialSpec> initial;
  std::optional<std::uint64_t> seed;
  std::optional<KmcSpec> kmc;
  std::optional<SequenceSpec> sequence;
  double evolve_tol = 1e-14;

  /// Throws ConfigError naming the missing section.
  void require(const char* section) const;
};

/// Parse and fully validate. `base_dir` resolves relative rate-table paths.
RunConfig parse_config(const nlohmann::json& j, const std::string& base_dir = ".");
/// Reads the file; JSON syntax errors carry line and column.
RunConfig load_config(const std::string& path);

std::shared_ptr<const RateModel> model_from_json(const nlohmann::json& j, const std::string& base_dir = ".");

}  // namespace ips

#endif  // IPS_CONFIG_HPP
