#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/multiprecision/cpp_dec_float.hpp>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "evcc/analytics.hpp"
#include "evcc/simulation.hpp"

namespace {

// L = 60 veh/km on the linear model with V_max = 100, L_max = 140, S = 10 km.
constexpr double kMu = 100.0 * (1 - 60.0 / 140.0) / 10.0 / 3600.0;

evcc::BoundInputs standard_inputs() { return {12.0, {kMu, 10 * kMu}, 80.0}; }

// F(x) = int_0^x l1 e^{-l1 t} (1 - e^{-l2 (x - t)}) dt.
double convolution_cdf(double x, double l1, double l2) {
  boost::math::quadrature::tanh_sinh<double> q;
  return q.integrate([&](double t) { return l1 * std::exp(-l1 * t) * -std::expm1(-l2 * (x - t)); }, 0.0, x);
}

TEST(ServiceCdf, Limits) {
  const evcc::HypoexpParams p{0.3, 1.7};
  EXPECT_EQ(evcc::service_cdf(0.0, p), 0.0);
  EXPECT_EQ(evcc::service_cdf(std::numeric_limits<double>::infinity(), p), 1.0);
  EXPECT_NEAR(evcc::service_cdf(200.0, p), 1.0, 1e-15);
  EXPECT_EQ(evcc::service_cdf(5.0, {0.0, 1.0}), 0.0);
  EXPECT_THROW(evcc::service_cdf(-1.0, p), std::invalid_argument);
  EXPECT_THROW(evcc::service_cdf(1.0, {-0.1, 1.0}), std::invalid_argument);
}

TEST(ServiceCdf, MatchesConvolutionQuadrature) {
  const std::vector<evcc::HypoexpParams> cases = {{0.3, 1.7}, {1.7, 0.3}, {kMu, 10 * kMu}, {1.0, 1.0}, {2.0, 2.0 + 1e-7}};
  for (const auto& p : cases)
    for (double x : {1e-3, 0.1, 1.0, 5.0, 80.0}) {
      const double oracle = convolution_cdf(x, p.lambda1, p.lambda2);
      EXPECT_NEAR(evcc::service_cdf(x, p), oracle, 1e-12 * std::max(1.0, oracle) + 1e-15) << p.lambda1 << " " << x;
      EXPECT_NEAR(evcc::service_survival(x, p), 1 - oracle, 1e-12);
    }
}

TEST(ServiceCdf, SurvivalIsAccurateInTheTail) {
  const evcc::HypoexpParams p{1.0, 3.0};
  // 1 - F = (3 e^{-x} - e^{-3x}) / 2
  const double x = 60.0;
  EXPECT_NEAR(evcc::service_survival(x, p) / (1.5 * std::exp(-x)), 1.0, 1e-12);
}

TEST(ServiceCdf, ContinuousAcrossTheErlangBranch) {
  const double l = 0.5;
  for (double x : {0.1, 2.0, 10.0}) {
    const double erlang = evcc::service_cdf(x, {l, l});
    const double near = evcc::service_cdf(x, {l, l * (1 + 1e-8)});
    const double inside = evcc::service_cdf(x, {l, l * (1 + 1e-10)});
    EXPECT_NEAR(near, erlang, 1e-7 * erlang);
    EXPECT_NEAR(inside, erlang, 1e-9 * erlang);
  }
}

TEST(ServiceCdf, KolmogorovSmirnovAgainstSamples) {
  const evcc::HypoexpParams p{0.4, 2.5};
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> a(p.lambda1), b(p.lambda2);
  std::vector<double> xs(1'000'000);
  for (double& x : xs) x = a(rng) + b(rng);
  std::sort(xs.begin(), xs.end());
  double ks = 0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = evcc::service_cdf(xs[i], p);
    ks = std::max({ks, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  EXPECT_LE(ks, 0.005);
}

TEST(ViolationBound, MonotoneInEveryInput) {
  auto base = standard_inputs();
  double prev = 2;
  for (double d = 0; d <= 200; d += 10) {
    base.deadline = d;
    const double v = evcc::violation_bound(base);
    EXPECT_LE(v, prev);
    prev = v;
  }
  base = standard_inputs();
  prev = 2;
  for (int b = 1; b <= 30; ++b) {
    base.params.lambda2 = b * kMu;
    const double v = evcc::violation_bound(base);
    EXPECT_LT(v, prev);
    prev = v;
  }
  base = standard_inputs();
  prev = 2;
  for (double alpha = 0; alpha <= 30; alpha += 1.5) {
    base.alpha = alpha;
    const double v = evcc::violation_bound(base);
    EXPECT_LE(v, prev);
    prev = v;
  }
  base.alpha = 0;
  EXPECT_EQ(evcc::violation_bound(base), 1.0);
}

// The hypoexponential density is at most lambda1 lambda2 t, so F(D) never
// exceeds the Rayleigh exponent's lambda1 lambda2 D^2 / 2.
TEST(ViolationBound, RayleighNeverExceedsTheExactBound) {
  for (double d : {5.0, 40.0, 80.0, 160.0})
    for (double b : {1.0, 5.0, 20.0}) {
      evcc::BoundInputs in{12.0, {kMu, b * kMu}, d};
      EXPECT_LE(evcc::rayleigh_bound(in), evcc::violation_bound(in));
    }
}

// alpha = 12, lambda1 = 0.0015873/s, B = 10, D = 80 s gives exp(-0.967).
TEST(RayleighBound, StandardScenarioExponent) {
  using Dec = boost::multiprecision::cpp_dec_float_50;
  const Dec mu = Dec(100) * (Dec(1) - Dec(60) / Dec(140)) / Dec(10) / Dec(3600);
  const Dec exponent = Dec(12) * mu * (Dec(10) * mu) * Dec(80) * Dec(80) / Dec(2);
  const double reference = exponent.convert_to<double>();
  EXPECT_NEAR(evcc::rayleigh_exponent(standard_inputs()), reference, 1e-6 * reference);
  EXPECT_NEAR(evcc::rayleigh_exponent(standard_inputs()), 0.967, 5e-4);
}

TEST(MeanDelay, IsTheRayleighMean) {
  boost::math::quadrature::exp_sinh<double> q;
  for (const auto& in : {standard_inputs(), evcc::BoundInputs{3.0, {0.2, 0.9}, 1.0}}) {
    const double k = in.alpha * in.params.lambda1 * in.params.lambda2;
    const double oracle = q.integrate([&](double x) { return std::exp(-k * x * x / 2); });
    EXPECT_NEAR(evcc::mean_delay(in), oracle, 1e-9 * oracle);
  }
}

TEST(MeanDelay, UndefinedWithoutVehicles) {
  auto in = standard_inputs();
  in.alpha = 0;
  EXPECT_THROW(evcc::mean_delay(in), std::domain_error);
  const auto j = evcc::bound_report_to_json(evcc::bound_report(in));
  EXPECT_TRUE(j.at("mean_delay").is_null());
  EXPECT_EQ(j.at("exact_bound").get<double>(), 1.0);
}

TEST(BoundReport, ShortDeadlineFlag) {
  auto in = standard_inputs();
  EXPECT_FALSE(evcc::bound_report(in).short_deadline_ok);
  in.deadline = 10;
  EXPECT_TRUE(evcc::bound_report(in).short_deadline_ok);
  EXPECT_FALSE(evcc::bound_report(in, 0.1).short_deadline_ok);
}

// One task, Poisson(alpha) vehicles each meeting the RSU once: the bound is exact.
TEST(ViolationBound, SingleTaskMonteCarlo) {
  evcc::SystemConfig cfg;
  cfg.lambda = 1.2;
  cfg.road_length = 10;
  cfg.task_count = 1;
  cfg.rsu_count = 10;
  cfg.deadline = 80;
  cfg.mu = kMu;
  evcc::MonteCarloOptions opts;
  opts.arrivals = evcc::ArrivalModel::kPerVehicleFirstMeeting;
  const auto stats = evcc::run_monte_carlo(cfg, evcc::RoundRobinPolicy{}, 100000, opts);
  const double bound = evcc::violation_bound(evcc::bound_inputs(cfg));
  EXPECT_NEAR(stats.violation_ratio_mean, bound, 0.02 * bound);
}

TEST(PoissonMixture, SeriesConvergesToClosedForm) {
  for (double alpha = 0; alpha <= 20; alpha += 2.5)
    for (double f = 0; f <= 1.0; f += 0.125)
      EXPECT_NEAR(evcc::poisson_mixture_series(alpha, f, 200), evcc::poisson_mixture_survival(alpha, f), 1e-12);
  EXPECT_DOUBLE_EQ(evcc::poisson_mixture_series(3.0, 0.5, 0), std::exp(-3.0));
  EXPECT_THROW(evcc::poisson_mixture_series(1.0, 1.5, 3), std::invalid_argument);
  EXPECT_THROW(evcc::poisson_mixture_series(1.0, 0.5, -1), std::invalid_argument);
}

TEST(Asymptotics, ManyRsusApproachTheHighRsuLimit) {
  for (double d : {20.0, 80.0, 160.0}) {
    evcc::BoundInputs in{12.0, {kMu, 1e4 * kMu}, d};
    const double limit = -std::log(evcc::asymptotic_high_rsu(60, 10, 50, kMu, d));
    EXPECT_NEAR(evcc::bound_exponent(in), limit, 0.01 * limit);
  }
}

TEST(Asymptotics, ShortDeadlineHighRsuIsTheFirstOrderForm) {
  for (double d : {1.0, 5.0, 20.0}) {
    const double full = -std::log(evcc::asymptotic_high_rsu(60, 10, 50, kMu, d));
    const double linear = -std::log(evcc::asymptotic_high_rsu_short_deadline(60, 100, 140, 50, d));
    // 1 - e^{-x} = x (1 - x/2 + ...)
    EXPECT_NEAR(full / linear, 1 - kMu * d / 2, (kMu * d) * (kMu * d) / 6 + 1e-12);
  }
}

TEST(Asymptotics, LargeCityFormIsTheRayleighBound) {
  const double density = 60, vmax = 100, lmax = 140, d = 80;
  const int tasks = 50;
  const double v = vmax * (1 - density / lmax);
  for (double s : {10.0, 100.0, 1000.0}) {
    const double rsu_density = 0.5;
    const double mu = v / s / 3600.0;
    const evcc::BoundInputs in{density * s / tasks, {mu, rsu_density * s * mu}, d};
    EXPECT_NEAR(evcc::rayleigh_bound(in), evcc::asymptotic_large_city(density, vmax, lmax, rsu_density, tasks, d),
                1e-12);
  }
}

// With B fixed and S growing both rates vanish, and the exact exponent
// approaches the Rayleigh one with relative gap about (lambda1 + lambda2) D / 3.
TEST(Asymptotics, ExactBoundApproachesTheLargeCityLimit) {
  const double density = 60, vmax = 100, lmax = 140, d = 80, b = 10;
  const int tasks = 50;
  const double v = vmax * (1 - density / lmax);
  double prev_gap = 1;
  for (double s : {1e2, 1e3, 1e4, 1e5}) {
    const double mu = v / s / 3600.0;
    const evcc::BoundInputs in{density * s / tasks, {mu, b * mu}, d};
    const double limit = -std::log(evcc::asymptotic_large_city(density, vmax, lmax, b / s, tasks, d));
    const double gap = std::abs(evcc::bound_exponent(in) - limit) / limit;
    EXPECT_LE(gap, (1 + b) * mu * d / 3 * 1.01) << s;
    EXPECT_LT(gap, prev_gap);
    prev_gap = gap;
  }
  EXPECT_LT(prev_gap, 1e-4);
}

TEST(Asymptotics, RejectsBadArguments) {
  EXPECT_THROW(evcc::asymptotic_large_city(150, 100, 140, 1, 50, 80), std::invalid_argument);
  EXPECT_THROW(evcc::asymptotic_high_rsu(60, 10, 0, kMu, 80), std::invalid_argument);
  EXPECT_THROW(evcc::asymptotic_high_rsu_short_deadline(60, 100, 0, 50, 80), std::invalid_argument);
}

}  // namespace
