#include "evcc/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "evcc/analytics.hpp"
#include "evcc/golden_section.hpp"
#include "evcc/simulation.hpp"

namespace evcc {

namespace {

constexpr double kSecondsPerHour = 3600.0;
constexpr std::size_t kConditionSamples = 2000;

double polynomial_speed(double g, const std::vector<PolynomialTerm>& terms, double density) {
  double v = g;
  for (const auto& t : terms) {
    if (t.coeff == 0) continue;
    v -= t.coeff * std::pow(density, t.exponent);
  }
  return v;
}

// First zero of a decreasing polynomial speed, by doubling then bisection.
double polynomial_jam_density(double g, const std::vector<PolynomialTerm>& terms) {
  double hi = 1.0;
  for (int i = 0; polynomial_speed(g, terms, hi) > 0; ++i) {
    if (i > 200) throw std::invalid_argument("polynomial speed never reaches zero; pass lmax");
    hi *= 2;
  }
  double lo = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = (lo + hi) / 2;
    (polynomial_speed(g, terms, mid) > 0 ? lo : hi) = mid;
  }
  return hi;
}

// Objectives are evaluated as 0 at L = 0, where V may diverge for negative exponents.
template <int Power>
double flow_objective(const SpeedDensityModel& model, double density) {
  if (density <= 0) return 0.0;
  const double v = model.speed(density);
  return Power == 1 ? v * density : v * v * density;
}

template <int Power>
double numeric_argmax(const SpeedDensityModel& model) {
  return golden_section_maximize([&](double L) { return flow_objective<Power>(model, L); }, 0.0,
                                 model.jam_density())
      .x;
}

bool boundary_value(double e) { return e == 0.0 || e == -0.5 || e == -1.0; }

bool exponent_allowed(double e) { return e > 0 || (e > -1 && e < -0.5); }

}  // namespace

SpeedDensityModel SpeedDensityModel::linear(double vmax, double lmax) {
  if (!(vmax >= 0) || !std::isfinite(vmax)) throw std::invalid_argument("vmax must be finite and >= 0");
  if (!(lmax > 0) || !std::isfinite(lmax)) throw std::invalid_argument("lmax must be finite and > 0");
  SpeedDensityModel m;
  m.kind_ = Kind::kLinear;
  m.g_ = vmax;
  m.terms_ = {{vmax / lmax, 1.0}};
  m.lmax_ = lmax;
  return m;
}

SpeedDensityModel SpeedDensityModel::polynomial(double g, std::vector<PolynomialTerm> terms,
                                                std::optional<double> lmax) {
  if (!(g >= 0) || !std::isfinite(g)) throw std::invalid_argument("G must be finite and >= 0");
  if (terms.empty()) throw std::invalid_argument("polynomial model needs at least one term");
  for (const auto& t : terms) {
    if (!(t.coeff >= 0) || !std::isfinite(t.coeff)) throw std::invalid_argument("coefficients must be >= 0");
    if (!std::isfinite(t.exponent)) throw std::invalid_argument("exponents must be finite");
  }
  SpeedDensityModel m;
  m.kind_ = Kind::kPolynomial;
  m.g_ = g;
  m.terms_ = std::move(terms);
  if (lmax) {
    if (!(*lmax > 0) || !std::isfinite(*lmax)) throw std::invalid_argument("lmax must be finite and > 0");
    m.lmax_ = *lmax;
  } else {
    const bool decreasing = std::all_of(m.terms_.begin(), m.terms_.end(),
                                        [](const PolynomialTerm& t) { return t.exponent > 0; }) &&
                            std::any_of(m.terms_.begin(), m.terms_.end(),
                                        [](const PolynomialTerm& t) { return t.coeff > 0; });
    if (!decreasing) throw std::invalid_argument("cannot locate the jam density; pass lmax");
    if (g == 0) throw std::invalid_argument("jam density is 0 when G = 0; pass lmax");
    m.lmax_ = polynomial_jam_density(m.g_, m.terms_);
  }
  return m;
}

SpeedDensityModel SpeedDensityModel::m27() {
  SpeedDensityModel m;
  m.kind_ = Kind::kM27;
  m.g_ = kM27FreeSpeed;
  m.terms_ = {{kM27FreeSpeed / std::pow(kM27JamDensity, kM27Exponent), kM27Exponent}};
  m.lmax_ = kM27JamDensity;
  return m;
}

SpeedDensityModel SpeedDensityModel::tabulated(std::vector<std::pair<double, double>> points) {
  if (points.size() < 2) throw std::invalid_argument("tabulated model needs at least two points");
  if (points.front().first != 0.0) throw std::invalid_argument("tabulated model must start at L = 0");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [L, V] = points[i];
    if (!std::isfinite(L) || !std::isfinite(V)) throw std::invalid_argument("tabulated values must be finite");
    if (V < 0) throw std::invalid_argument(fmt::format("negative speed at L = {}", L));
    if (i > 0 && !(L > points[i - 1].first))
      throw std::invalid_argument("tabulated densities must be strictly increasing");
  }
  SpeedDensityModel m;
  m.kind_ = Kind::kTabulated;
  m.lmax_ = points.back().first;
  m.points_ = std::move(points);
  return m;
}

std::string SpeedDensityModel::name() const {
  switch (kind_) {
    case Kind::kLinear: return "linear";
    case Kind::kPolynomial: return "poly";
    case Kind::kM27: return "m27";
    case Kind::kTabulated: return "custom-csv";
  }
  return "unknown";
}

double SpeedDensityModel::speed(double density) const {
  if (std::isnan(density) || density < 0 || density > lmax_ * (1 + 1e-12))
    throw std::domain_error(fmt::format("density {} outside [0, {}]", density, lmax_));
  density = std::min(density, lmax_);
  switch (kind_) {
    case Kind::kLinear: return g_ * (1 - density / lmax_);
    case Kind::kM27: return kM27FreeSpeed * (1 - std::pow(density / kM27JamDensity, kM27Exponent));
    case Kind::kPolynomial: return polynomial_speed(g_, terms_, density);
    case Kind::kTabulated: {
      const auto it = std::lower_bound(points_.begin(), points_.end(), density,
                                       [](const auto& p, double L) { return p.first < L; });
      if (it == points_.begin()) return it->second;
      const auto& [L1, V1] = *it;
      const auto& [L0, V0] = *std::prev(it);
      return V0 + (V1 - V0) * (density - L0) / (L1 - L0);
    }
  }
  return 0.0;
}

TrafficPoint traffic_point(const SpeedDensityModel& model, double density) {
  const double v = model.speed(density);
  return {density, v, v * density};
}

double meeting_rate_from_density(const SpeedDensityModel& model, double density, double road_length) {
  if (!(road_length > 0)) throw std::invalid_argument("road length must be > 0");
  return model.speed(density) / road_length;
}

double per_hour_to_per_second(double rate) { return rate / kSecondsPerHour; }

double critical_density(const SpeedDensityModel& model) {
  if (model.kind() == SpeedDensityModel::Kind::kLinear) return model.jam_density() / 2;
  return critical_density_numeric(model);
}

double evcc_optimal_density(const SpeedDensityModel& model) {
  if (model.kind() == SpeedDensityModel::Kind::kLinear) return model.jam_density() / 3;
  return evcc_optimal_density_numeric(model);
}

double critical_density_numeric(const SpeedDensityModel& model) { return numeric_argmax<1>(model); }

double evcc_optimal_density_numeric(const SpeedDensityModel& model) { return numeric_argmax<2>(model); }

ConditionReport check_conditions(const SpeedDensityModel& model) {
  ConditionReport r;
  const bool has_terms = model.kind() == SpeedDensityModel::Kind::kPolynomial ||
                         model.kind() == SpeedDensityModel::Kind::kM27 ||
                         model.kind() == SpeedDensityModel::Kind::kLinear;
  bool negative_exponent = false;
  if (has_terms) {
    for (const auto& t : model.terms()) {
      if (!exponent_allowed(t.exponent)) r.exponents_ok = false;
      if (boundary_value(t.exponent)) r.boundary_exponent = true;
      if (t.exponent <= 0) negative_exponent = true;
    }
  } else {
    r.exponents_ok = false;
    r.verifiable = false;
  }

  const double lmax = model.jam_density();
  const double start = negative_exponent ? lmax / kConditionSamples : 0.0;
  std::vector<double> v(kConditionSamples + 1);
  double scale = 0.0;
  for (std::size_t i = 0; i <= kConditionSamples; ++i) {
    const double L = start + (lmax - start) * static_cast<double>(i) / kConditionSamples;
    v[i] = model.speed(L);
    scale = std::max(scale, std::abs(v[i]));
  }
  const double tol = 1e-9 * std::max(scale, 1.0);
  for (std::size_t i = 0; i <= kConditionSamples; ++i) {
    if (v[i] < -tol) r.nonnegative = false;
    if (i > 0 && v[i] > v[i - 1] + tol) r.nonincreasing = false;
    if (i > 0 && i < kConditionSamples && v[i - 1] + v[i + 1] - 2 * v[i] > tol) r.concave = false;
  }
  return r;
}

MonomialOptima monomial_optima(double g, double c, double alpha) {
  if (!(c > 0) || alpha == 0 || 1 + 2 * alpha == 0 || 1 + alpha == 0)
    throw std::invalid_argument("monomial closed form needs c > 0 and alpha not in {0, -1/2, -1}");
  return {std::pow(g / (c * (1 + alpha)), 1 / alpha), std::pow(g / (c * (1 + 2 * alpha)), 1 / alpha)};
}

DensityComparison compare_densities(const SpeedDensityModel& model) {
  DensityComparison out;
  out.conditions = check_conditions(model);
  out.critical = critical_density(model);
  out.optimal = evcc_optimal_density(model);
  out.ordering_holds = out.optimal <= out.critical + 1e-6 * model.jam_density();
  if (model.kind() == SpeedDensityModel::Kind::kPolynomial || model.kind() == SpeedDensityModel::Kind::kM27) {
    for (const auto& t : model.terms()) {
      if (t.coeff > 0 && t.exponent != 0 && t.exponent != -0.5 && t.exponent != -1)
        out.monomial_closed_forms.push_back(monomial_optima(model.g(), t.coeff, t.exponent));
    }
  }
  return out;
}

SystemConfig config_at_density(const SpeedDensityModel& model, const SystemConfig& base, double density) {
  SystemConfig cfg = base;
  cfg.lambda = density;
  cfg.mu = per_hour_to_per_second(meeting_rate_from_density(model, density, base.road_length));
  return cfg;
}

std::vector<EfficiencyPoint> efficiency_curve(const SpeedDensityModel& model, const SystemConfig& base,
                                              double task_gen_rate, const std::vector<double>& densities,
                                              const EfficiencyOptions& options) {
  if (!(task_gen_rate >= 0)) throw std::invalid_argument("task generation rate must be >= 0");
  std::vector<EfficiencyPoint> curve;
  curve.reserve(densities.size());
  for (double L : densities) {
    const SystemConfig cfg = config_at_density(model, base, L);
    EfficiencyPoint p;
    p.density = L;
    p.speed = model.speed(L);
    p.task_gen_rate = task_gen_rate;
    switch (options.estimator) {
      case ViolationEstimator::kExactBound: p.violation = violation_bound(bound_inputs(cfg)); break;
      case ViolationEstimator::kRayleighBound: p.violation = rayleigh_bound(bound_inputs(cfg)); break;
      case ViolationEstimator::kMonteCarlo: {
        MonteCarloOptions mc;
        mc.threads = options.threads;
        p.violation = run_monte_carlo(cfg, BetaPolicy{}, options.iterations, mc).violation_ratio_mean;
        break;
      }
    }
    p.eta_ce = task_gen_rate * (1 - p.violation);
    p.eta_te = p.speed * L;
    curve.push_back(p);
  }
  return curve;
}

std::size_t efficiency_peak(const std::vector<EfficiencyPoint>& curve) {
  if (curve.empty()) throw std::invalid_argument("empty efficiency curve");
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (curve[i].eta_ce > curve[best].eta_ce) best = i;
  return best;
}

std::size_t win_win_end(const std::vector<EfficiencyPoint>& curve) {
  if (curve.empty()) throw std::invalid_argument("empty efficiency curve");
  std::size_t k = 0;
  while (k + 1 < curve.size() && curve[k + 1].eta_ce > curve[k].eta_ce && curve[k + 1].eta_te > curve[k].eta_te)
    ++k;
  return k;
}

}  // namespace evcc
