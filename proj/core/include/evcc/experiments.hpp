#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "evcc/traffic.hpp"

namespace evcc {

enum class ExperimentId {
  kPolicyStructure,
  kMdpVsBeta,
  kSweepDeadline,
  kSweepRsus,
  kSweepTasks,
  kSweepDensity,
  kM27Density,
  kEfficiencyTradeoff,
  kCustom,
};

class UnknownExperiment : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string_view experiment_name(ExperimentId id);
/// Throws UnknownExperiment.
ExperimentId parse_experiment(std::string_view name);
const std::vector<ExperimentId>& all_experiments();

struct ExperimentSpec {
  ExperimentId id = ExperimentId::kCustom;
  /// `key=value` pairs; keys are the row column names that describe inputs
  /// (L, S, N, D, B, vmax, lmax, T, M, mu_delta). Setting a swept column
  /// pins that axis to the single value.
  std::vector<std::pair<std::string, std::string>> overrides;
  long iterations = 1000;
  std::uint64_t seed = 1;
  std::string policy = "beta";
  /// Replaces the experiment's default speed-density model.
  std::optional<SpeedDensityModel> speed_model;
  unsigned threads = 0;
};

/// Rows for CSV experiments, a document for policy-structure.
struct ExperimentResult {
  ExperimentId id = ExperimentId::kCustom;
  std::vector<std::string> columns;
  std::vector<nlohmann::json> rows;  ///< objects keyed by column
  std::optional<nlohmann::json> document;
  std::string summary;

  bool is_table() const { return !document.has_value(); }
};

/// Throws ConfigError for bad overrides and StateSpaceError when a chain
/// exceeds the state-space cap.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Header line plus one line per row; numbers use the shortest round-trip form.
void write_csv(std::ostream& out, const ExperimentResult& result);
/// CSV for tables, pretty JSON for documents.
void write_result(std::ostream& out, const ExperimentResult& result);

/// JSON Schema of one row (or of the document for policy-structure).
nlohmann::json emit_schema(ExperimentId id);

/// Column names of an experiment's rows, in output order.
std::vector<std::string> experiment_columns(ExperimentId id);

}  // namespace evcc
