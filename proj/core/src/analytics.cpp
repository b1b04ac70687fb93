#include "evcc/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace evcc {

namespace {

constexpr double kSecondsPerHour = 3600.0;

void require_nonnegative(const char* what, double v) {
  if (!(v >= 0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite and >= 0");
}

bool erlang_branch(const HypoexpParams& p) {
  return std::abs(p.lambda2 - p.lambda1) < kErlangBranchWindow * p.lambda1;
}

}  // namespace

BoundInputs bound_inputs(const SystemConfig& cfg) {
  validate_config(cfg);
  return {cfg.vehicles_per_task(), {cfg.mu, cfg.mu * cfg.rsu_count}, cfg.deadline};
}

void validate_params(const HypoexpParams& params) {
  require_nonnegative("lambda1", params.lambda1);
  require_nonnegative("lambda2", params.lambda2);
}

double service_survival(double x, const HypoexpParams& p) {
  validate_params(p);
  if (std::isnan(x) || x < 0) throw std::invalid_argument("service time must be >= 0");
  if (p.lambda1 == 0 || p.lambda2 == 0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (erlang_branch(p)) return std::exp(-p.lambda1 * x) * (1 + p.lambda1 * x);
  const double delta = p.lambda2 - p.lambda1;
  return std::exp(-p.lambda1 * x) * (1 - p.lambda1 * std::expm1(-delta * x) / delta);
}

double service_cdf(double x, const HypoexpParams& p) {
  validate_params(p);
  if (std::isnan(x) || x < 0) throw std::invalid_argument("service time must be >= 0");
  if (p.lambda1 == 0 || p.lambda2 == 0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double decay = std::exp(-p.lambda1 * x);
  if (erlang_branch(p)) return -std::expm1(-p.lambda1 * x) - decay * p.lambda1 * x;
  const double delta = p.lambda2 - p.lambda1;
  return -std::expm1(-p.lambda1 * x) + decay * p.lambda1 * std::expm1(-delta * x) / delta;
}

double bound_exponent(const BoundInputs& in) {
  require_nonnegative("alpha", in.alpha);
  if (in.alpha == 0) return 0.0;
  return in.alpha * service_cdf(in.deadline, in.params);
}

double rayleigh_exponent(const BoundInputs& in) {
  require_nonnegative("alpha", in.alpha);
  validate_params(in.params);
  if (std::isnan(in.deadline) || in.deadline < 0) throw std::invalid_argument("deadline must be >= 0");
  return in.alpha * in.params.lambda1 * in.params.lambda2 * in.deadline * in.deadline / 2;
}

double violation_bound(const BoundInputs& in) { return std::exp(-bound_exponent(in)); }

double rayleigh_bound(const BoundInputs& in) { return std::exp(-rayleigh_exponent(in)); }

bool short_deadline_regime(const BoundInputs& in, double threshold) {
  return std::max(in.params.lambda1, in.params.lambda2) * in.deadline <= threshold;
}

double mean_delay(const BoundInputs& in) {
  require_nonnegative("alpha", in.alpha);
  validate_params(in.params);
  const double k = in.alpha * in.params.lambda1 * in.params.lambda2;
  if (k == 0) throw std::domain_error("mean delay is infinite when alpha or a rate is 0");
  return std::sqrt(std::numbers::pi / (2 * k));
}

BoundReport bound_report(const BoundInputs& in, double threshold) {
  BoundReport r;
  r.exact_bound = violation_bound(in);
  r.rayleigh_bound = rayleigh_bound(in);
  r.mean_delay = in.alpha * in.params.lambda1 * in.params.lambda2 > 0 ? mean_delay(in)
                                                                       : std::numeric_limits<double>::quiet_NaN();
  r.short_deadline_ok = short_deadline_regime(in, threshold);
  return r;
}

nlohmann::json bound_report_to_json(const BoundReport& report) {
  return {
      {"exact_bound", report.exact_bound},
      {"rayleigh_bound", report.rayleigh_bound},
      {"mean_delay", std::isnan(report.mean_delay) ? nlohmann::json(nullptr) : nlohmann::json(report.mean_delay)},
      {"regime_flags", {{"short_deadline_ok", report.short_deadline_ok}}},
  };
}

double poisson_mixture_survival(double alpha, double f_value) {
  require_nonnegative("alpha", alpha);
  if (!(f_value >= 0 && f_value <= 1)) throw std::invalid_argument("F must lie in [0, 1]");
  return std::exp(-alpha * f_value);
}

double poisson_mixture_series(double alpha, double f_value, int terms) {
  require_nonnegative("alpha", alpha);
  if (!(f_value >= 0 && f_value <= 1)) throw std::invalid_argument("F must lie in [0, 1]");
  if (terms < 0) throw std::invalid_argument("term count must be >= 0");
  const double x = alpha * (1 - f_value);
  double term = std::exp(-alpha);
  double total = term;
  for (int k = 1; k <= terms; ++k) {
    term *= x / k;
    total += term;
  }
  return total;
}

double asymptotic_large_city(double density, double vmax, double lmax, double rsu_density, int task_count,
                             double deadline) {
  require_nonnegative("density", density);
  require_nonnegative("vmax", vmax);
  require_nonnegative("rsu_density", rsu_density);
  require_nonnegative("deadline", deadline);
  if (!(lmax > 0)) throw std::invalid_argument("lmax must be > 0");
  if (task_count < 1) throw std::invalid_argument("task_count must be >= 1");
  if (density > lmax) throw std::invalid_argument("density exceeds lmax");
  const double v = vmax * (1 - density / lmax) / kSecondsPerHour;
  return std::exp(-density * v * v * rsu_density * deadline * deadline / (2.0 * task_count));
}

double asymptotic_high_rsu(double density, double road_length, int task_count, double mu, double deadline) {
  require_nonnegative("density", density);
  require_nonnegative("road_length", road_length);
  require_nonnegative("mu", mu);
  require_nonnegative("deadline", deadline);
  if (task_count < 1) throw std::invalid_argument("task_count must be >= 1");
  return std::exp(density * road_length / task_count * std::expm1(-mu * deadline));
}

double asymptotic_high_rsu_short_deadline(double density, double vmax, double lmax, int task_count,
                                          double deadline) {
  require_nonnegative("density", density);
  require_nonnegative("vmax", vmax);
  require_nonnegative("deadline", deadline);
  if (!(lmax > 0)) throw std::invalid_argument("lmax must be > 0");
  if (task_count < 1) throw std::invalid_argument("task_count must be >= 1");
  if (density > lmax) throw std::invalid_argument("density exceeds lmax");
  const double v = vmax * (1 - density / lmax) / kSecondsPerHour;
  return std::exp(-density * v * deadline / task_count);
}

}  // namespace evcc
