#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace evcc {

/// Scenario parameters shared by every module.
///
/// Units are seconds and kilometres throughout. Speeds in km/h are only
/// accepted at the CLI boundary and converted there.
struct SystemConfig {
  double lambda = 0.0;       ///< vehicle density, veh/km
  double road_length = 1.0;  ///< S, km
  int task_count = 1;        ///< N
  double deadline = 1.0;     ///< D, seconds (slots for the discrete chain)
  int rsu_count = 1;         ///< B
  double mu = 0.0;           ///< per-vehicle per-RSU meeting rate, 1/s
  std::optional<double> delta;          ///< sampled-time increment, s
  std::optional<double> task_interval;  ///< T, s; only feeds the efficiency metric
  std::uint64_t seed = 0;

  /// Expected vehicle count lambda * S.
  double mean_vehicles() const { return lambda * road_length; }
  /// Poisson mean of vehicles per task, lambda * S / N.
  double vehicles_per_task() const { return lambda * road_length / task_count; }

  bool operator==(const SystemConfig&) const = default;
};

/// Raised when a configuration violates an invariant. `field()` names the
/// offending key using the JSON (snake_case) spelling.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Returns `cfg` unchanged when every invariant holds, throws ConfigError otherwise.
SystemConfig validate_config(const SystemConfig& cfg);

/// Parses a config object. Keys are the snake_case field names; unknown keys
/// are rejected. The result is validated.
SystemConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SystemConfig& cfg);

/// Applies a single `key=value` override (CLI `--set`). Throws ConfigError
/// for unknown keys or unparsable values.
void apply_override(SystemConfig& cfg, const std::string& key, const std::string& value);

}  // namespace evcc
