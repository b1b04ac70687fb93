#pragma once

#include <nlohmann/json_fwd.hpp>

#include "evcc/config.hpp"

namespace evcc {

/// Rates of the two exponential stages of the service time: meeting lag
/// (lambda1 = mu) and collection lag (lambda2 = mu * B), both 1/s.
struct HypoexpParams {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

/// Relative gap |lambda2 - lambda1| / lambda1 below which the Erlang-2 form is used.
inline constexpr double kErlangBranchWindow = 1e-9;
/// Default max(lambda1*D, lambda2*D) for the short-deadline flag.
inline constexpr double kShortDeadlineThreshold = 0.2;

struct BoundInputs {
  double alpha = 0.0;  ///< Poisson mean of vehicles per task, lambda*S/N
  HypoexpParams params;
  double deadline = 0.0;  ///< seconds
};

/// alpha = lambda*S/N, lambda1 = mu, lambda2 = mu*B.
BoundInputs bound_inputs(const SystemConfig& cfg);

struct BoundReport {
  double exact_bound = 1.0;
  double rayleigh_bound = 1.0;
  /// NaN when alpha == 0 or either rate is 0.
  double mean_delay = 0.0;
  bool short_deadline_ok = false;
};

/// Throws std::invalid_argument for negative or non-finite rates.
void validate_params(const HypoexpParams& params);

/// CDF of Exp(lambda1) + Exp(lambda2) at x >= 0.
double service_cdf(double x, const HypoexpParams& params);
/// 1 - service_cdf, accurate in the tail.
double service_survival(double x, const HypoexpParams& params);

/// exp(-alpha * F(D)).
double violation_bound(const BoundInputs& in);
/// exp(-alpha * lambda1 * lambda2 * D^2 / 2).
double rayleigh_bound(const BoundInputs& in);
/// alpha * F(D) and alpha * lambda1 * lambda2 * D^2 / 2.
double bound_exponent(const BoundInputs& in);
double rayleigh_exponent(const BoundInputs& in);

bool short_deadline_regime(const BoundInputs& in, double threshold = kShortDeadlineThreshold);

/// sqrt(pi / (2 alpha lambda1 lambda2)). Throws std::domain_error when alpha
/// or a rate is 0.
double mean_delay(const BoundInputs& in);

BoundReport bound_report(const BoundInputs& in, double threshold = kShortDeadlineThreshold);
nlohmann::json bound_report_to_json(const BoundReport& report);

/// exp(-alpha * F).
double poisson_mixture_survival(double alpha, double f_value);
/// sum_{k=0}^{K} alpha^k e^{-alpha} (1-F)^k / k!
double poisson_mixture_series(double alpha, double f_value, int terms);

/// Violation limit as S grows under the linear speed model, in the
/// short-deadline (Rayleigh) form; it approximates the exact bound while
/// B mu D stays small. Speeds in km/h, densities in veh/km,
/// rsu_density = B/S in 1/km, deadline in seconds.
double asymptotic_large_city(double density, double vmax, double lmax, double rsu_density, int task_count,
                             double deadline);

/// exp(-(L*S/N) * (1 - e^{-mu*D})), mu in 1/s.
double asymptotic_high_rsu(double density, double road_length, int task_count, double mu, double deadline);

/// exp(-(L*V_max/N) * (1 - L/L_max) * D) with V_max in km/h, D in seconds.
double asymptotic_high_rsu_short_deadline(double density, double vmax, double lmax, int task_count,
                                          double deadline);

}  // namespace evcc
