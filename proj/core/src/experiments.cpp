#include "evcc/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "evcc/analytics.hpp"
#include "evcc/mdp.hpp"
#include "evcc/policy.hpp"
#include "evcc/simulation.hpp"

namespace evcc {

namespace {

using nlohmann::json;

struct Column {
  const char* name;
  const char* type;  // JSON Schema type
  const char* description;
};

const std::vector<Column> kContinuousInputs = {
    {"L", "number", "vehicle density, veh/km"},
    {"S", "number", "road length, km"},
    {"N", "integer", "task count"},
    {"D", "number", "deadline, s"},
    {"B", "integer", "RSU count"},
    {"speed_model", "string", "speed-density model"},
    {"vmax", "number", "free-flow speed V(0), km/h"},
    {"lmax", "number", "jam density, veh/km"},
    {"mu", "number", "per-vehicle per-RSU meeting rate, 1/s"},
    {"alpha", "number", "mean vehicles per task, L*S/N"},
    {"seed", "integer", "root RNG seed"},
    {"iterations", "integer", "Monte Carlo episodes"},
    {"policy", "string", "assignment policy"},
};

const std::vector<Column> kSweepOutputs = {
    {"mc_mean", "number", "mean violation ratio over episodes"},
    {"mc_stderr", "number", "standard error of mc_mean"},
    {"bound_exact", "number", "hypoexponential upper bound"},
    {"bound_rayleigh", "number", "short-deadline Rayleigh approximation"},
};

const std::vector<Column> kEfficiencyExtra = {
    {"T", "number", "task collection interval, s"},
    {"task_gen_rate", "number", "N/T, tasks/h"},
    {"bound_exact", "number", "hypoexponential upper bound"},
    {"eta_ce", "number", "executed tasks per hour from bound_exact"},
    {"eta_te", "number", "traffic flow V*L, veh/h"},
    {"mc_mean", "number", "mean violation ratio over episodes"},
    {"mc_stderr", "number", "standard error of mc_mean"},
    {"eta_ce_mc", "number", "executed tasks per hour from mc_mean"},
};

const std::vector<Column> kChainColumns = {
    {"N", "integer", "task count"},
    {"M", "integer", "vehicle count"},
    {"B", "integer", "RSU count"},
    {"D", "integer", "deadline, slots"},
    {"mu_delta", "number", "mu times the slot length"},
    {"s", "number", "meeting probability per slot"},
    {"u", "number", "completion probability per replica per slot"},
    {"seed", "integer", "root RNG seed"},
    {"iterations", "integer", "Monte Carlo episodes"},
    {"policy", "string", "assignment policy"},
    {"dp_ratio", "number", "1 - J_0 / N from value iteration"},
    {"mc_mean", "number", "mean violation ratio over discrete-chain episodes"},
    {"mc_stderr", "number", "standard error of mc_mean"},
};

std::vector<Column> columns_of(ExperimentId id) {
  std::vector<Column> cols;
  switch (id) {
    case ExperimentId::kPolicyStructure: return {};
    case ExperimentId::kMdpVsBeta: return kChainColumns;
    case ExperimentId::kEfficiencyTradeoff:
      cols = kContinuousInputs;
      cols.insert(cols.end(), kEfficiencyExtra.begin(), kEfficiencyExtra.end());
      return cols;
    default:
      cols = kContinuousInputs;
      cols.insert(cols.end(), kSweepOutputs.begin(), kSweepOutputs.end());
      return cols;
  }
}

std::vector<double> range(double first, double last, double step) {
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double v = first + step * i;
    if (v > last + step * 1e-9) break;
    out.push_back(v);
  }
  return out;
}

double parse_number(const std::string& key, const std::string& text) {
  double v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) throw ConfigError(key, "not a number: '" + text + "'");
  return v;
}

int parse_int(const std::string& key, const std::string& text) {
  int v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw ConfigError(key, "not an integer: '" + text + "'");
  return v;
}

// Override lookup that rejects keys the experiment does not read.
class Overrides {
 public:
  Overrides(const std::vector<std::pair<std::string, std::string>>& pairs, std::set<std::string> allowed) {
    for (const auto& [k, v] : pairs) {
      if (!allowed.contains(k)) throw ConfigError(k, "not a parameter of this experiment");
      values_[k] = v;
    }
  }
  bool has(const std::string& key) const { return values_.contains(key); }
  double number(const std::string& key, double fallback) const {
    return has(key) ? parse_number(key, values_.at(key)) : fallback;
  }
  int integer(const std::string& key, int fallback) const {
    return has(key) ? parse_int(key, values_.at(key)) : fallback;
  }
  template <typename T>
  std::vector<T> axis(const std::string& key, std::vector<T> fallback) const {
    if (!has(key)) return fallback;
    if constexpr (std::is_same_v<T, int>) return {integer(key, 0)};
    else return {number(key, 0.0)};
  }

 private:
  std::map<std::string, std::string> values_;
};

PolicyKind continuous_policy(const std::string& name) {
  PolicyKind p = parse_policy(name);
  if (std::holds_alternative<MdpTablePolicy>(p))
    throw ConfigError("policy", "the mdp policy is only available in mdp-vs-beta");
  return p;
}

// ---------------------------------------------------------------------------
// Continuous-time sweeps

struct ContinuousAxes {
  std::vector<double> L;
  std::vector<double> D;
  std::vector<int> N;
  std::vector<int> B;
};

const std::vector<double> kCurveDensities = {30, 60, 90, 120};

ExperimentResult run_continuous(const ExperimentSpec& spec) {
  const bool efficiency = spec.id == ExperimentId::kEfficiencyTradeoff;
  std::set<std::string> allowed = {"L", "S", "N", "D", "B", "vmax", "lmax"};
  if (efficiency) allowed.insert("T");
  const Overrides ov(spec.overrides, allowed);

  if ((ov.has("vmax") || ov.has("lmax")) &&
      (spec.speed_model || spec.id == ExperimentId::kM27Density))
    throw ConfigError(ov.has("vmax") ? "vmax" : "lmax", "only applies to the default linear speed model");
  const SpeedDensityModel model =
      spec.speed_model ? *spec.speed_model
      : spec.id == ExperimentId::kM27Density
          ? SpeedDensityModel::m27()
          : SpeedDensityModel::linear(ov.number("vmax", 100.0), ov.number("lmax", 140.0));

  ContinuousAxes axes{{60.0}, {80.0}, {50}, {10}};
  switch (spec.id) {
    case ExperimentId::kSweepDeadline:
      axes.L = kCurveDensities;
      axes.D = range(10, 160, 10);
      break;
    case ExperimentId::kSweepRsus: {
      axes.L = kCurveDensities;
      axes.B.clear();
      for (int b = 1; b <= 20; ++b) axes.B.push_back(b);
      break;
    }
    case ExperimentId::kSweepTasks: {
      axes.L = kCurveDensities;
      axes.N.clear();
      for (int n = 10; n <= 100; n += 10) axes.N.push_back(n);
      break;
    }
    case ExperimentId::kSweepDensity:
    case ExperimentId::kEfficiencyTradeoff: axes.L = range(10, 130, 10); break;
    case ExperimentId::kM27Density: axes.L = range(10, 140, 10); break;
    default: break;
  }
  axes.L = ov.axis("L", axes.L);
  axes.D = ov.axis("D", axes.D);
  axes.N = ov.axis("N", axes.N);
  axes.B = ov.axis("B", axes.B);
  const double road = ov.number("S", 10.0);
  const double interval = ov.number("T", 80.0);
  if (efficiency && !(interval > 0)) throw ConfigError("T", "task interval must be > 0");

  const PolicyKind policy = continuous_policy(spec.policy);
  MonteCarloOptions mc;
  mc.threads = spec.threads;

  ExperimentResult result;
  result.id = spec.id;
  for (double L : axes.L)
    for (double D : axes.D)
      for (int N : axes.N)
        for (int B : axes.B) {
          SystemConfig base;
          base.road_length = road;
          base.task_count = N;
          base.deadline = D;
          base.rsu_count = B;
          base.seed = spec.seed;
          if (efficiency) base.task_interval = interval;
          const SystemConfig cfg = validate_config(config_at_density(model, base, L));
          const BoundInputs in = bound_inputs(cfg);
          const SimStats stats = run_monte_carlo(cfg, policy, spec.iterations, mc);

          json row = {
              {"L", L},
              {"S", road},
              {"N", N},
              {"D", D},
              {"B", B},
              {"speed_model", model.name()},
              {"vmax", model.free_speed()},
              {"lmax", model.jam_density()},
              {"mu", cfg.mu},
              {"alpha", in.alpha},
              {"seed", spec.seed},
              {"iterations", spec.iterations},
              {"policy", policy_name(policy)},
          };
          const double exact = violation_bound(in);
          if (efficiency) {
            const double rate = N / interval * 3600.0;
            row["T"] = interval;
            row["task_gen_rate"] = rate;
            row["bound_exact"] = exact;
            row["eta_ce"] = rate * (1 - exact);
            row["eta_te"] = model.speed(L) * L;
            row["mc_mean"] = stats.violation_ratio_mean;
            row["mc_stderr"] = stats.std_error;
            row["eta_ce_mc"] = rate * (1 - stats.violation_ratio_mean);
          } else {
            row["mc_mean"] = stats.violation_ratio_mean;
            row["mc_stderr"] = stats.std_error;
            row["bound_exact"] = exact;
            row["bound_rayleigh"] = rayleigh_bound(in);
          }
          result.rows.push_back(std::move(row));
        }
  return result;
}

// ---------------------------------------------------------------------------
// Discrete chain

struct ChainAxes {
  int N = 2;
  int M = 20;
  int B = 5;
  std::vector<int> D;
  std::vector<double> mu_delta;
};

/// Largest mu*delta that keeps s + N*M*u inside the small-delta regime.
double regime_mu_delta(int N, int M, int B) {
  return kMaxSlotEventProbability / (M + static_cast<double>(N) * M * B);
}

ChainAxes chain_axes(const ExperimentSpec& spec, const Overrides& ov) {
  ChainAxes axes;
  axes.N = ov.integer("N", 2);
  axes.M = ov.integer("M", 20);
  axes.B = ov.integer("B", 5);
  if (axes.N < 1) throw ConfigError("N", "need at least one task");
  if (axes.M < 0) throw ConfigError("M", "vehicle count must be >= 0");
  if (axes.B < 1) throw ConfigError("B", "need at least one RSU");
  const double full = regime_mu_delta(axes.N, axes.M, axes.B);
  if (spec.id == ExperimentId::kPolicyStructure) {
    axes.D = {20};
    axes.mu_delta = {full};
  } else {
    for (int d = 1; d <= 20; ++d) axes.D.push_back(d);
    axes.mu_delta = {full / 2, full};
  }
  axes.D = ov.axis("D", axes.D);
  axes.mu_delta = ov.axis("mu_delta", axes.mu_delta);
  return axes;
}

DiscreteChain chain_for(const ChainAxes& axes, int D, double mu_delta) {
  if (!(mu_delta > 0)) throw ConfigError("mu_delta", "must be > 0");
  DiscreteChain chain;
  chain.task_count = axes.N;
  chain.vehicle_count = axes.M;
  chain.params.meeting_prob = axes.M * mu_delta;
  chain.params.unit_completion_prob = axes.B * mu_delta;
  chain.params.horizon = D;
  validate_chain(chain);
  return chain;
}

ExperimentResult run_mdp_vs_beta(const ExperimentSpec& spec) {
  const Overrides ov(spec.overrides, {"N", "M", "B", "D", "mu_delta"});
  const ChainAxes axes = chain_axes(spec, ov);
  const PolicyKind requested = parse_policy(spec.policy);
  MonteCarloOptions mc;
  mc.threads = spec.threads;

  ExperimentResult result;
  result.id = spec.id;
  for (double mu_delta : axes.mu_delta)
    for (int D : axes.D) {
      const DiscreteChain chain = chain_for(axes, D, mu_delta);
      auto table = std::make_shared<const ValueTable>(value_iteration(chain));
      PolicyKind policy = requested;
      if (std::holds_alternative<MdpTablePolicy>(policy)) policy = MdpTablePolicy{table};
      const SimStats stats = run_monte_carlo_discrete(chain, policy, spec.iterations, spec.seed, mc);
      result.rows.push_back({
          {"N", axes.N},
          {"M", axes.M},
          {"B", axes.B},
          {"D", D},
          {"mu_delta", mu_delta},
          {"s", chain.params.meeting_prob},
          {"u", chain.params.unit_completion_prob},
          {"seed", spec.seed},
          {"iterations", spec.iterations},
          {"policy", policy_name(policy)},
          {"dp_ratio", table->optimal_violation_ratio()},
          {"mc_mean", stats.violation_ratio_mean},
          {"mc_stderr", stats.std_error},
      });
    }
  return result;
}

ExperimentResult run_policy_structure(const ExperimentSpec& spec) {
  const Overrides ov(spec.overrides, {"N", "M", "B", "D", "mu_delta"});
  const ChainAxes axes = chain_axes(spec, ov);
  const DiscreteChain chain = chain_for(axes, axes.D.front(), axes.mu_delta.front());
  const ValueTable table = value_iteration(chain);
  const auto stages = reachable_statuses(chain);

  json entries = json::array();
  for (int stage = 0; stage < chain.params.horizon; ++stage) {
    if (stage_meeting_prob(chain, stage) == 0.0) continue;
    for (const auto& status : stages[static_cast<std::size_t>(stage)]) {
      if (!meeting_usable(status, chain.vehicle_count)) continue;
      json replicas = json::array();
      int fewest = std::numeric_limits<int>::max();
      for (TaskIndex i = 0; i < status.size(); ++i) {
        if (status.finished(i)) {
          replicas.push_back("F");
        } else {
          replicas.push_back(status.replicas(i));
          fewest = std::min(fewest, status.replicas(i));
        }
      }
      json argmin = json::array();
      for (TaskIndex i = 0; i < status.size(); ++i)
        if (!status.finished(i) && status.replicas(i) == fewest) argmin.push_back(i + 1);
      const Action a = table.action(status, stage);
      json optimal = json::array();
      for (TaskIndex t : table.optimal_actions(status, stage)) optimal.push_back(t + 1);
      const bool in_argmin = a && status.replicas(*a) == fewest;
      const auto beta = beta_assign(status);
      const auto opt_set = table.optimal_actions(status, stage);
      const bool beta_optimal = beta && std::find(opt_set.begin(), opt_set.end(), *beta) != opt_set.end();
      entries.push_back({
          {"stage", stage},
          {"replicas", std::move(replicas)},
          {"action", a ? json(*a + 1) : json(nullptr)},
          {"optimal_actions", std::move(optimal)},
          {"argmin", std::move(argmin)},
          {"in_argmin", in_argmin},
          {"beta_optimal", beta_optimal},
      });
    }
  }

  ExperimentResult result;
  result.id = spec.id;
  result.document = json{
      {"N", axes.N},
      {"M", axes.M},
      {"B", axes.B},
      {"D", chain.params.horizon},
      {"mu_delta", axes.mu_delta.front()},
      {"s", chain.params.meeting_prob},
      {"u", chain.params.unit_completion_prob},
      {"initial_value", table.initial_value()},
      {"optimal_violation_ratio", table.optimal_violation_ratio()},
      {"entries", std::move(entries)},
  };
  return result;
}

std::string format_cell(const json& v) {
  switch (v.type()) {
    case json::value_t::null: return "";
    case json::value_t::boolean: return v.get<bool>() ? "true" : "false";
    case json::value_t::number_integer: return fmt::format("{}", v.get<std::int64_t>());
    case json::value_t::number_unsigned: return fmt::format("{}", v.get<std::uint64_t>());
    case json::value_t::number_float: return fmt::format("{}", v.get<double>());
    case json::value_t::string: return v.get<std::string>();
    default: throw std::invalid_argument("cannot write a nested value as a CSV cell");
  }
}

}  // namespace

std::string_view experiment_name(ExperimentId id) {
  switch (id) {
    case ExperimentId::kPolicyStructure: return "policy-structure";
    case ExperimentId::kMdpVsBeta: return "mdp-vs-beta";
    case ExperimentId::kSweepDeadline: return "sweep-deadline";
    case ExperimentId::kSweepRsus: return "sweep-rsus";
    case ExperimentId::kSweepTasks: return "sweep-tasks";
    case ExperimentId::kSweepDensity: return "sweep-density";
    case ExperimentId::kM27Density: return "m27-density";
    case ExperimentId::kEfficiencyTradeoff: return "efficiency-tradeoff";
    case ExperimentId::kCustom: return "custom";
  }
  return "unknown";
}

const std::vector<ExperimentId>& all_experiments() {
  static const std::vector<ExperimentId> ids = {
      ExperimentId::kPolicyStructure, ExperimentId::kMdpVsBeta,    ExperimentId::kSweepDeadline,
      ExperimentId::kSweepRsus,       ExperimentId::kSweepTasks,   ExperimentId::kSweepDensity,
      ExperimentId::kM27Density,      ExperimentId::kEfficiencyTradeoff, ExperimentId::kCustom,
  };
  return ids;
}

ExperimentId parse_experiment(std::string_view name) {
  for (ExperimentId id : all_experiments())
    if (experiment_name(id) == name) return id;
  throw UnknownExperiment("unknown experiment '" + std::string(name) + "'");
}

std::vector<std::string> experiment_columns(ExperimentId id) {
  std::vector<std::string> names;
  for (const auto& c : columns_of(id)) names.emplace_back(c.name);
  return names;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  if (spec.iterations < 1) throw ConfigError("iterations", "need at least one iteration");
  ExperimentResult result;
  switch (spec.id) {
    case ExperimentId::kPolicyStructure: result = run_policy_structure(spec); break;
    case ExperimentId::kMdpVsBeta: result = run_mdp_vs_beta(spec); break;
    default: result = run_continuous(spec); break;
  }
  result.columns = experiment_columns(spec.id);
  result.summary = result.is_table()
                       ? fmt::format("{}: {} rows, seed {}", experiment_name(spec.id), result.rows.size(), spec.seed)
                       : fmt::format("{}: {} entries", experiment_name(spec.id),
                                     result.document->at("entries").size());
  return result;
}

void write_csv(std::ostream& out, const ExperimentResult& result) {
  for (std::size_t i = 0; i < result.columns.size(); ++i) out << (i ? "," : "") << result.columns[i];
  out << '\n';
  for (const auto& row : result.rows) {
    for (std::size_t i = 0; i < result.columns.size(); ++i) {
      const auto it = row.find(result.columns[i]);
      out << (i ? "," : "") << (it == row.end() ? std::string() : format_cell(*it));
    }
    out << '\n';
  }
}

void write_result(std::ostream& out, const ExperimentResult& result) {
  if (result.is_table()) write_csv(out, result);
  else out << result.document->dump(2) << '\n';
}

json emit_schema(ExperimentId id) {
  const std::string name(experiment_name(id));
  if (id == ExperimentId::kPolicyStructure) {
    const json count = {{"type", "integer"}, {"minimum", 1}};
    const json number = {{"type", "number"}};
    json replica = json::object();
    replica["oneOf"] = json::array({json{{"type", "integer"}, {"minimum", 0}}, json{{"const", "F"}}});

    json entry = {{"type", "object"}, {"additionalProperties", false}};
    entry["required"] = json::array({"stage", "replicas", "action", "optimal_actions", "argmin", "in_argmin", "beta_optimal"});
    entry["properties"]["stage"] = {{"type", "integer"}, {"minimum", 0}};
    entry["properties"]["replicas"] = {{"type", "array"}, {"items", replica}};
    entry["properties"]["action"] = {{"type", json::array({"integer", "null"})}, {"minimum", 1}};
    entry["properties"]["optimal_actions"] = {{"type", "array"}, {"items", count}};
    entry["properties"]["argmin"] = {{"type", "array"}, {"items", count}};
    entry["properties"]["in_argmin"] = {{"type", "boolean"}};
    entry["properties"]["beta_optimal"] = {{"type", "boolean"}};

    json doc = {{"$schema", "https://json-schema.org/draft/2020-12/schema"}, {"title", "evcc " + name}};
    doc["type"] = "object";
    doc["required"] = json::array(
        {"N", "M", "B", "D", "mu_delta", "s", "u", "initial_value", "optimal_violation_ratio", "entries"});
    auto& props = doc["properties"];
    props["N"] = count;
    props["M"] = {{"type", "integer"}, {"minimum", 0}};
    props["B"] = count;
    props["D"] = {{"type", "integer"}, {"minimum", 0}};
    for (const char* key : {"mu_delta", "s", "u", "initial_value", "optimal_violation_ratio"}) props[key] = number;
    props["entries"] = {{"type", "array"}, {"items", entry}};
    return doc;
  }
  json properties = json::object();
  json required = json::array();
  for (const auto& c : columns_of(id)) {
    properties[c.name] = {{"type", c.type}, {"description", c.description}};
    required.push_back(c.name);
  }
  return {
      {"$schema", "https://json-schema.org/draft/2020-12/schema"},
      {"title", "evcc " + name + " row"},
      {"type", "object"},
      {"properties", std::move(properties)},
      {"required", std::move(required)},
      {"additionalProperties", false},
  };
}

}  // namespace evcc
