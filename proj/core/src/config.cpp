#include "evcc/config.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

namespace evcc {

namespace {

void require_finite(const std::string& field, double v) {
  if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
}

// Wraps std::sto* so that failures surface as ConfigError naming `field`.
template <typename Parse>
auto parse_with(const std::string& field, const std::string& text, const char* kind, Parse parse) {
  std::size_t pos = 0;
  decltype(parse(text, &pos)) v{};
  try {
    v = parse(text, &pos);
  } catch (const std::logic_error&) {
    throw ConfigError(field, std::string("not ") + kind + ": '" + text + "'");
  }
  if (pos != text.size()) throw ConfigError(field, "trailing characters in '" + text + "'");
  return v;
}

double parse_double(const std::string& field, const std::string& text) {
  return parse_with(field, text, "a number",
                    [](const std::string& t, std::size_t* p) { return std::stod(t, p); });
}

long long parse_integer(const std::string& field, const std::string& text) {
  return parse_with(field, text, "an integer",
                    [](const std::string& t, std::size_t* p) { return std::stoll(t, p); });
}

int checked_int(const std::string& field, long long v) {
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ConfigError(field, "out of range");
  return static_cast<int>(v);
}

}  // namespace

SystemConfig validate_config(const SystemConfig& cfg) {
  require_finite("lambda", cfg.lambda);
  require_finite("road_length", cfg.road_length);
  require_finite("deadline", cfg.deadline);
  require_finite("mu", cfg.mu);
  if (cfg.lambda < 0) throw ConfigError("lambda", "vehicle density must be >= 0");
  if (cfg.road_length <= 0) throw ConfigError("road_length", "road length must be > 0");
  if (cfg.task_count < 1) throw ConfigError("task_count", "need at least one task");
  if (cfg.deadline <= 0) throw ConfigError("deadline", "deadline must be > 0");
  if (cfg.rsu_count < 1) throw ConfigError("rsu_count", "need at least one RSU");
  if (cfg.mu < 0) throw ConfigError("mu", "meeting rate must be >= 0");
  if (cfg.delta) {
    require_finite("delta", *cfg.delta);
    if (*cfg.delta <= 0) throw ConfigError("delta", "time increment must be > 0");
  }
  if (cfg.task_interval) {
    require_finite("task_interval", *cfg.task_interval);
    if (*cfg.task_interval <= 0) throw ConfigError("task_interval", "task interval must be > 0");
  }
  return cfg;
}

SystemConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  SystemConfig cfg;
  for (const auto& [key, value] : j.items()) {
    auto number = [&, &key = key, &value = value]() {
      if (!value.is_number()) throw ConfigError(key, "expected a number");
      return value.get<double>();
    };
    auto integer = [&, &key = key, &value = value]() {
      if (!value.is_number_integer()) throw ConfigError(key, "expected an integer");
      return checked_int(key, value.get<long long>());
    };
    if (key == "lambda") cfg.lambda = number();
    else if (key == "road_length") cfg.road_length = number();
    else if (key == "task_count") cfg.task_count = integer();
    else if (key == "deadline") cfg.deadline = number();
    else if (key == "rsu_count") cfg.rsu_count = integer();
    else if (key == "mu") cfg.mu = number();
    else if (key == "delta") cfg.delta = number();
    else if (key == "task_interval") cfg.task_interval = number();
    else if (key == "seed") {
      if (!value.is_number_unsigned()) throw ConfigError(key, "expected an unsigned integer");
      cfg.seed = value.get<std::uint64_t>();
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  return validate_config(cfg);
}

nlohmann::json config_to_json(const SystemConfig& cfg) {
  nlohmann::json j = {
      {"lambda", cfg.lambda},     {"road_length", cfg.road_length},
      {"task_count", cfg.task_count}, {"deadline", cfg.deadline},
      {"rsu_count", cfg.rsu_count},   {"mu", cfg.mu},
      {"seed", cfg.seed},
  };
  if (cfg.delta) j["delta"] = *cfg.delta;
  if (cfg.task_interval) j["task_interval"] = *cfg.task_interval;
  return j;
}

void apply_override(SystemConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "lambda") cfg.lambda = parse_double(key, value);
  else if (key == "road_length") cfg.road_length = parse_double(key, value);
  else if (key == "task_count") cfg.task_count = checked_int(key, parse_integer(key, value));
  else if (key == "deadline") cfg.deadline = parse_double(key, value);
  else if (key == "rsu_count") cfg.rsu_count = checked_int(key, parse_integer(key, value));
  else if (key == "mu") cfg.mu = parse_double(key, value);
  else if (key == "delta") cfg.delta = parse_double(key, value);
  else if (key == "task_interval") cfg.task_interval = parse_double(key, value);
  else if (key == "seed") {
    if (value.empty() || value.front() == '-') throw ConfigError(key, "seed must be non-negative");
    cfg.seed = parse_with(key, value, "an unsigned integer",
                          [](const std::string& t, std::size_t* p) { return std::stoull(t, p); });
  } else {
    throw ConfigError(key, "unknown key");
  }
}

}  // namespace evcc
