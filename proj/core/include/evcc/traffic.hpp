#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evcc/config.hpp"

namespace evcc {

struct PolynomialTerm {
  double coeff = 0.0;     ///< c_k >= 0
  double exponent = 1.0;  ///< alpha_k
};

/// Speed-density relation V(L), km/h against veh/km.
class SpeedDensityModel {
 public:
  enum class Kind { kLinear, kPolynomial, kM27, kTabulated };

  /// V = vmax (1 - L/lmax).
  static SpeedDensityModel linear(double vmax, double lmax);
  /// V = G - sum c_k L^alpha_k. The jam density is the first zero of V
  /// unless `lmax` is given.
  static SpeedDensityModel polynomial(double g, std::vector<PolynomialTerm> terms,
                                      std::optional<double> lmax = std::nullopt);
  /// V = 116.4 [1 - (L/149.797)^1.964].
  static SpeedDensityModel m27();
  /// Piecewise-linear through (L, V) points sorted by L, starting at L = 0.
  /// The last L is the jam density.
  static SpeedDensityModel tabulated(std::vector<std::pair<double, double>> points);

  Kind kind() const { return kind_; }
  std::string name() const;
  double jam_density() const { return lmax_; }
  /// V(0).
  double free_speed() const { return speed(0.0); }

  /// Throws std::domain_error outside [0, jam_density()].
  double speed(double density) const;

  double g() const { return g_; }
  const std::vector<PolynomialTerm>& terms() const { return terms_; }
  const std::vector<std::pair<double, double>>& points() const { return points_; }

 private:
  Kind kind_ = Kind::kLinear;
  double g_ = 0.0;
  std::vector<PolynomialTerm> terms_;
  std::vector<std::pair<double, double>> points_;
  double lmax_ = 0.0;
};

inline constexpr double kM27FreeSpeed = 116.4;
inline constexpr double kM27JamDensity = 149.797;
inline constexpr double kM27Exponent = 1.964;

struct TrafficPoint {
  double density = 0.0;  ///< L, veh/km
  double speed = 0.0;    ///< V, km/h
  double flow = 0.0;     ///< V * L, veh/h
};

TrafficPoint traffic_point(const SpeedDensityModel& model, double density);

/// mu = V(L) / S in 1/h.
double meeting_rate_from_density(const SpeedDensityModel& model, double density, double road_length);
double per_hour_to_per_second(double rate);

/// Argmax of V(L) L; closed form L_max/2 for the linear model.
double critical_density(const SpeedDensityModel& model);
/// Argmax of V(L)^2 L; closed form L_max/3 for the linear model.
double evcc_optimal_density(const SpeedDensityModel& model);
/// Always numeric (grid + golden-section), for checking the closed forms.
double critical_density_numeric(const SpeedDensityModel& model);
double evcc_optimal_density_numeric(const SpeedDensityModel& model);

/// Sampled check of the ordering conditions. `verifiable` is false for
/// tabulated models, where the checks are empirical only.
struct ConditionReport {
  bool nonincreasing = true;
  bool nonnegative = true;
  bool concave = true;
  /// Polynomial only: every exponent in (0, inf) or the open interval (-1, -1/2).
  bool exponents_ok = true;
  /// Polynomial only: some exponent equals 0, -1/2 or -1.
  bool boundary_exponent = false;
  bool verifiable = true;

  bool satisfied() const { return nonincreasing && nonnegative && (concave || exponents_ok); }
};

ConditionReport check_conditions(const SpeedDensityModel& model);

struct MonomialOptima {
  double critical = 0.0;  ///< (g / (c (1 + alpha)))^{1/alpha}
  double optimal = 0.0;   ///< (g / (c (1 + 2 alpha)))^{1/alpha}
};

/// Closed-form optima of V = g - c L^alpha.
MonomialOptima monomial_optima(double g, double c, double alpha);

struct DensityComparison {
  double critical = 0.0;  ///< L*
  double optimal = 0.0;   ///< L dagger
  bool ordering_holds = false;
  ConditionReport conditions;
  /// Polynomial models: closed forms for each term taken alone with G.
  std::vector<MonomialOptima> monomial_closed_forms;
};

/// L dagger <= L* is judged with slack 1e-6 * L_max.
DensityComparison compare_densities(const SpeedDensityModel& model);

struct EfficiencyPoint {
  double density = 0.0;
  double speed = 0.0;
  double violation = 1.0;      ///< p_v used for eta_ce
  double eta_ce = 0.0;         ///< tasks/h
  double eta_te = 0.0;         ///< veh/h
  double task_gen_rate = 0.0;  ///< N/T, tasks/h
};

enum class ViolationEstimator { kExactBound, kRayleighBound, kMonteCarlo };

struct EfficiencyOptions {
  ViolationEstimator estimator = ViolationEstimator::kExactBound;
  long iterations = 1000;  ///< Monte Carlo only
  unsigned threads = 0;
};

/// For each L: mu from V(L)/S, p_v from the chosen estimator with
/// lambda = L, eta_ce = task_gen_rate (1 - p_v), eta_te = V L.
/// `base` supplies S, N, D, B and the seed; task_gen_rate is in tasks/h.
std::vector<EfficiencyPoint> efficiency_curve(const SpeedDensityModel& model, const SystemConfig& base,
                                              double task_gen_rate, const std::vector<double>& densities,
                                              const EfficiencyOptions& options = {});

/// Index of the largest eta_ce (first on ties).
std::size_t efficiency_peak(const std::vector<EfficiencyPoint>& curve);
/// Last index k such that eta_ce and eta_te both strictly increase on [0, k].
std::size_t win_win_end(const std::vector<EfficiencyPoint>& curve);

/// cfg with lambda = L and mu = V(L)/S converted to 1/s.
SystemConfig config_at_density(const SpeedDensityModel& model, const SystemConfig& base, double density);

}  // namespace evcc
