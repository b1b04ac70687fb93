// evcc: experiment runner and formula calculator.

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "evcc/analytics.hpp"
#include "evcc/config.hpp"
#include "evcc/experiments.hpp"
#include "evcc/mdp.hpp"
#include "evcc/policy.hpp"
#include "evcc/simulation.hpp"
#include "evcc/traffic.hpp"

namespace {

using nlohmann::json;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

[[noreturn]] void fail(const std::string& kind, const std::string& message, const std::string& field = {},
                       int code = 1) {
  json err = {{"error", kind}, {"message", message}};
  if (!field.empty()) err["field"] = field;
  std::cerr << err.dump() << '\n';
  std::exit(code);
}

std::pair<std::string, std::string> split_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + text + "'");
  return {text.substr(0, eq), text.substr(eq + 1)};
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + item + "'");
    }
    if (pos != item.size()) throw UsageError("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

evcc::SpeedDensityModel read_speed_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::pair<double, double>> points;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::vector<double> cells;
    try {
      cells = parse_number_list(line);
    } catch (const UsageError&) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw std::runtime_error(path + ": bad row '" + line + "'");
    }
    first = false;
    if (cells.size() != 2) throw std::runtime_error(path + ": expected two columns in '" + line + "'");
    points.emplace_back(cells[0], cells[1]);
  }
  return evcc::SpeedDensityModel::tabulated(std::move(points));
}

struct ModelOptions {
  std::string kind = "linear";
  std::string poly;
  std::string csv;
  double vmax = 100.0;
  std::optional<double> lmax;

  void add(CLI::App* app, bool with_linear_params) {
    app->add_option("--speed-model", kind, "linear | m27 | poly | custom-csv")
        ->check(CLI::IsMember({"linear", "m27", "poly", "custom-csv"}));
    app->add_option("--poly", poly, "G,c1,a1,c2,a2,... for V = G - sum c_k L^a_k");
    app->add_option("--speed-csv", csv, "two-column CSV of L (veh/km), V (km/h)");
    app->add_option("--lmax", lmax, "jam density for linear/poly models, veh/km");
    if (with_linear_params) app->add_option("--vmax", vmax, "free-flow speed of the linear model, km/h");
  }

  // nullopt means "experiment default", which honours --set vmax/lmax.
  std::optional<evcc::SpeedDensityModel> build(bool default_is_none) const {
    if (kind == "linear") {
      if (default_is_none && !lmax) return std::nullopt;
      return evcc::SpeedDensityModel::linear(vmax, lmax.value_or(140.0));
    }
    if (kind == "m27") return evcc::SpeedDensityModel::m27();
    if (kind == "poly") {
      const auto v = parse_number_list(poly);
      if (v.size() < 3 || v.size() % 2 == 0) throw UsageError("--poly expects G followed by (c, a) pairs");
      std::vector<evcc::PolynomialTerm> terms;
      for (std::size_t i = 1; i < v.size(); i += 2) terms.push_back({v[i], v[i + 1]});
      return evcc::SpeedDensityModel::polynomial(v[0], std::move(terms), lmax);
    }
    if (csv.empty()) throw UsageError("--speed-model custom-csv needs --speed-csv");
    return read_speed_csv(csv);
  }
};

void emit(const std::string& out_path, const std::function<void(std::ostream&)>& write) {
  if (out_path.empty() || out_path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  write(out);
}

void print_value(const char* name, double value) { std::cout << json{{name, value}}.dump() << '\n'; }

void bound_args(CLI::App* app, evcc::BoundInputs& in) {
  app->add_option("--alpha", in.alpha, "mean vehicles per task")->required();
  app->add_option("--lambda1", in.params.lambda1, "meeting rate mu, 1/s")->required();
  app->add_option("--lambda2", in.params.lambda2, "collection rate mu*B, 1/s")->required();
  app->add_option("--deadline", in.deadline, "deadline, s")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task replication in encounter-based vehicular clouds"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run an experiment and write CSV (or JSON for policy-structure)");
  std::string experiment;
  std::uint64_t seed = 1;
  long iterations = 1000;
  std::string out_path;
  std::vector<std::string> sets;
  std::string policy = "beta";
  unsigned threads = 0;
  ModelOptions run_model;
  run->add_option("--experiment", experiment, "experiment id")->required();
  run->add_option("--seed", seed, "root RNG seed");
  run->add_option("--iterations", iterations, "Monte Carlo episodes per row");
  run->add_option("--out", out_path, "output path (default stdout)");
  run->add_option("--set", sets, "override key=value (repeatable)");
  run->add_option("--policy", policy, "beta | round-robin | mdp");
  run->add_option("--threads", threads, "worker threads, 0 = all cores");
  run_model.add(run, false);

  auto* list = app.add_subcommand("list", "list experiment ids");

  auto* schema = app.add_subcommand("schema", "print the JSON Schema of an experiment's rows");
  std::string schema_id;
  schema->add_option("experiment", schema_id, "experiment id")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo on one configuration, JSON summary");
  std::string config_path;
  std::string episodes_csv;
  std::string arrivals = "aggregate";
  simulate->add_option("--config", config_path, "config JSON file");
  simulate->add_option("--set", sets, "override key=value (repeatable)");
  simulate->add_option("--iterations", iterations, "episodes");
  simulate->add_option("--policy", policy, "beta | round-robin");
  simulate->add_option("--threads", threads, "worker threads, 0 = all cores");
  simulate->add_option("--episodes-csv", episodes_csv, "write per-episode task outcomes");
  simulate->add_option("--arrivals", arrivals, "aggregate | per-vehicle")
      ->check(CLI::IsMember({"aggregate", "per-vehicle"}));

  // mdp
  auto* mdp = app.add_subcommand("mdp", "solve the sampled-time chain and dump the value table as JSON");
  int tasks = 2, vehicles = 20, rsus = 5, slots = 20;
  double mu_delta = 0.0;
  mdp->add_option("--tasks", tasks, "N");
  mdp->add_option("--vehicles", vehicles, "M");
  mdp->add_option("--rsus", rsus, "B");
  mdp->add_option("--slots", slots, "deadline in slots");
  mdp->add_option("--mu-delta", mu_delta, "mu times the slot length (default: largest in regime)");
  mdp->add_option("--out", out_path, "output path (default stdout)");

  // formulas
  evcc::BoundInputs in;
  double threshold = evcc::kShortDeadlineThreshold;
  auto* bound = app.add_subcommand("bound", "exact and Rayleigh bounds with mean delay, JSON");
  bound_args(bound, in);
  bound->add_option("--threshold", threshold, "short-deadline threshold on max(lambda1, lambda2)*D");
  auto* rayleigh = app.add_subcommand("rayleigh", "Rayleigh approximation of the bound");
  bound_args(rayleigh, in);
  auto* mean = app.add_subcommand("mean-delay", "mean computation delay, s");
  bound_args(mean, in);

  auto* cdf = app.add_subcommand("service-cdf", "CDF of the two-stage service time");
  double x = 0;
  cdf->add_option("--x", x, "time, s")->required();
  cdf->add_option("--lambda1", in.params.lambda1, "1/s")->required();
  cdf->add_option("--lambda2", in.params.lambda2, "1/s")->required();

  double density = 0, road = 10, mu = 0, deadline = 0, vmax = 100, lmax = 140, rsu_density = 1;
  int task_count = 50;
  auto* high = app.add_subcommand("high-rsu", "violation limit as the RSU density grows");
  high->add_option("--L", density, "veh/km")->required();
  high->add_option("--S", road, "km");
  high->add_option("--N", task_count, "tasks");
  high->add_option("--mu", mu, "1/s")->required();
  high->add_option("--D", deadline, "s")->required();

  auto* city = app.add_subcommand("large-city", "violation limit as the road grows (short-deadline form, B/S given)");
  city->add_option("--L", density, "veh/km")->required();
  city->add_option("--vmax", vmax, "km/h");
  city->add_option("--lmax", lmax, "veh/km");
  city->add_option("--rsu-density", rsu_density, "B/S, 1/km")->required();
  city->add_option("--N", task_count, "tasks");
  city->add_option("--D", deadline, "s")->required();

  auto* densities = app.add_subcommand("densities", "critical and eVCC-optimal densities, JSON");
  ModelOptions density_model;
  density_model.add(densities, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what(), {}, 2);
  }

  try {
    if (*run) {
      evcc::ExperimentSpec spec;
      spec.id = evcc::parse_experiment(experiment);
      spec.seed = seed;
      spec.iterations = iterations;
      spec.policy = policy;
      spec.threads = threads;
      for (const auto& s : sets) spec.overrides.push_back(split_override(s));
      spec.speed_model = run_model.build(true);
      const auto result = evcc::run_experiment(spec);
      emit(out_path, [&](std::ostream& os) { evcc::write_result(os, result); });
      (out_path.empty() ? std::cerr : std::cout) << result.summary << '\n';
    } else if (*list) {
      for (auto id : evcc::all_experiments()) std::cout << evcc::experiment_name(id) << '\n';
    } else if (*schema) {
      std::cout << evcc::emit_schema(evcc::parse_experiment(schema_id)).dump(2) << '\n';
    } else if (*simulate) {
      evcc::SystemConfig cfg;
      if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) throw std::runtime_error("cannot open " + config_path);
        cfg = evcc::config_from_json(json::parse(f));
      }
      for (const auto& s : sets) {
        const auto [k, v] = split_override(s);
        evcc::apply_override(cfg, k, v);
      }
      cfg = evcc::validate_config(cfg);
      const evcc::PolicyKind kind = evcc::parse_policy(policy);
      evcc::MonteCarloOptions mc;
      mc.threads = threads;
      mc.arrivals = arrivals == "aggregate" ? evcc::ArrivalModel::kAggregatePoisson
                                            : evcc::ArrivalModel::kPerVehicleFirstMeeting;
      std::ofstream episodes;
      if (!episodes_csv.empty()) {
        episodes.open(episodes_csv, std::ios::binary);
        if (!episodes) throw std::runtime_error("cannot write " + episodes_csv);
        evcc::write_episode_csv_header(episodes);
        mc.on_episode = [&](long i, const evcc::EpisodeOutcome& o) { evcc::write_episode_csv(episodes, i, o); };
      }
      const auto stats = evcc::run_monte_carlo(cfg, kind, iterations, mc);
      json out = {
          {"config", evcc::config_to_json(cfg)},
          {"policy", evcc::policy_name(kind)},
          {"iterations", stats.iterations},
          {"violation_ratio_mean", stats.violation_ratio_mean},
          {"stderr", stats.std_error_defined ? json(stats.std_error) : json(nullptr)},
          {"bound", evcc::bound_report_to_json(evcc::bound_report(evcc::bound_inputs(cfg)))},
      };
      std::cout << out.dump(2) << '\n';
    } else if (*mdp) {
      evcc::DiscreteChain chain;
      chain.task_count = tasks;
      chain.vehicle_count = vehicles;
      if (mu_delta == 0.0)
        mu_delta = evcc::kMaxSlotEventProbability / (vehicles + static_cast<double>(tasks) * vehicles * rsus);
      chain.params.meeting_prob = vehicles * mu_delta;
      chain.params.unit_completion_prob = rsus * mu_delta;
      chain.params.horizon = slots;
      const auto table = evcc::value_iteration(chain);
      emit(out_path, [&](std::ostream& os) { os << evcc::value_table_to_json(table).dump(2) << '\n'; });
    } else if (*bound) {
      std::cout << evcc::bound_report_to_json(evcc::bound_report(in, threshold)).dump(2) << '\n';
    } else if (*rayleigh) {
      print_value("rayleigh_bound", evcc::rayleigh_bound(in));
    } else if (*mean) {
      print_value("mean_delay", evcc::mean_delay(in));
    } else if (*cdf) {
      print_value("service_cdf", evcc::service_cdf(x, in.params));
    } else if (*high) {
      print_value("high_rsu", evcc::asymptotic_high_rsu(density, road, task_count, mu, deadline));
    } else if (*city) {
      print_value("large_city", evcc::asymptotic_large_city(density, vmax, lmax, rsu_density, task_count, deadline));
    } else if (*densities) {
      const auto model = *density_model.build(false);
      const auto cmp = evcc::compare_densities(model);
      json closed = json::array();
      for (const auto& m : cmp.monomial_closed_forms) closed.push_back({{"critical", m.critical}, {"optimal", m.optimal}});
      const auto& c = cmp.conditions;
      std::cout << json{
                       {"speed_model", model.name()},
                       {"lmax", model.jam_density()},
                       {"critical_density", cmp.critical},
                       {"optimal_density", cmp.optimal},
                       {"ordering_holds", cmp.ordering_holds},
                       {"conditions",
                        {{"nonincreasing", c.nonincreasing},
                         {"nonnegative", c.nonnegative},
                         {"concave", c.concave},
                         {"exponents_ok", c.exponents_ok},
                         {"boundary_exponent", c.boundary_exponent},
                         {"verifiable", c.verifiable},
                         {"satisfied", c.satisfied()}}},
                       {"monomial_closed_forms", closed},
                   }
                       .dump(2)
                << '\n';
    }
  } catch (const evcc::ConfigError& e) {
    fail("config", e.what(), e.field());
  } catch (const evcc::StateSpaceError& e) {
    fail("state_space", e.what());
  } catch (const evcc::UnknownExperiment& e) {
    fail("unknown_experiment", e.what());
  } catch (const UsageError& e) {
    fail("usage", e.what(), {}, 2);
  } catch (const json::exception& e) {
    fail("json", e.what());
  } catch (const std::exception& e) {
    fail("runtime", e.what());
  }
  return 0;
}
