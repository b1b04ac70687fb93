#include <cmath>
#include <map>
#include <memory>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "evcc/analytics.hpp"
#include "evcc/simulation.hpp"

namespace {

evcc::SystemConfig standard_config() {
  evcc::SystemConfig cfg;
  cfg.lambda = 60;
  cfg.road_length = 10;
  cfg.task_count = 50;
  cfg.rsu_count = 10;
  cfg.deadline = 80;
  cfg.mu = 100.0 * (1 - 60.0 / 140.0) / 10.0 / 3600.0;
  cfg.seed = 3;
  return cfg;
}

evcc::DiscreteChain small_chain(int slots) {
  evcc::DiscreteChain chain;
  chain.task_count = 2;
  chain.vehicle_count = 3;
  const double mu_delta = 0.98 * evcc::kMaxSlotEventProbability / (3 + 2 * 3 * 2);
  chain.params = {3 * mu_delta, 2 * mu_delta, slots};
  return chain;
}

TEST(ContinuousEpisode, EmptyRoadViolatesEverything) {
  auto cfg = standard_config();
  cfg.lambda = 0;
  auto rng = evcc::episode_engine(1, 0);
  const auto o = evcc::simulate_episode_continuous(cfg, evcc::BetaPolicy{}, rng);
  EXPECT_EQ(o.vehicle_count, 0);
  EXPECT_EQ(o.total_offloads(), 0);
  EXPECT_DOUBLE_EQ(o.violation_ratio(), 1.0);
  for (const auto& t : o.completion_times) EXPECT_FALSE(t);
}

TEST(ContinuousEpisode, MdpPolicyIsRejected) {
  auto rng = evcc::episode_engine(1, 0);
  EXPECT_THROW(evcc::simulate_episode_continuous(standard_config(), evcc::MdpTablePolicy{}, rng), std::invalid_argument);
}

// One replica at t = 0 with collection rate 0.1/s; other meetings are made
// negligible by a tiny per-vehicle rate.
TEST(ContinuousEpisode, SingleReplicaCompletesAtTheCollectionRate) {
  evcc::SystemConfig cfg;
  cfg.lambda = 1;
  cfg.road_length = 1;
  cfg.task_count = 1;
  cfg.mu = 1e-7;
  cfg.rsu_count = 1'000'000;
  cfg.deadline = 1e9;
  double sum = 0;
  long n = 0;
  for (std::uint64_t i = 0; n < 100000; ++i) {
    auto rng = evcc::episode_engine(77, i);
    const auto o = evcc::simulate_episode_continuous(cfg, evcc::BetaPolicy{}, rng);
    if (o.total_offloads() != 1) continue;
    sum += *o.completion_times[0];
    ++n;
  }
  EXPECT_NEAR(sum / n, 10.0, 0.2);
}

TEST(ContinuousEpisode, ConservationAndFlags) {
  const auto cfg = standard_config();
  for (const evcc::PolicyKind& policy : {evcc::PolicyKind{evcc::BetaPolicy{}}, evcc::PolicyKind{evcc::RoundRobinPolicy{}}})
    for (std::uint64_t i = 0; i < 500; ++i) {
      auto rng = evcc::episode_engine(9, i);
      const auto o = evcc::simulate_episode_continuous(cfg, policy, rng);
      EXPECT_LE(o.total_offloads(), o.vehicle_count);
      for (std::size_t n = 0; n < o.task_count(); ++n) {
        EXPECT_EQ(o.completion_times[n].has_value(), o.offloads[n] > 0);
        EXPECT_EQ(o.omega[n], o.completion_times[n] && *o.completion_times[n] <= cfg.deadline);
      }
    }
}

TEST(ContinuousEpisode, LongerDeadlineNeverHurts) {
  auto short_cfg = standard_config();
  auto long_cfg = short_cfg;
  short_cfg.deadline = 40;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    auto a = evcc::episode_engine(4, i);
    auto b = evcc::episode_engine(4, i);
    const auto s = evcc::simulate_episode_continuous(short_cfg, evcc::BetaPolicy{}, a);
    const auto l = evcc::simulate_episode_continuous(long_cfg, evcc::BetaPolicy{}, b);
    ASSERT_LE(l.violation_ratio(), s.violation_ratio()) << "episode " << i;
  }
}

TEST(ContinuousEpisode, PerVehicleArrivalsHaveNoMeetingAtZero) {
  auto cfg = standard_config();
  cfg.task_count = 1;
  for (std::uint64_t i = 0; i < 200; ++i) {
    auto rng = evcc::episode_engine(5, i);
    const auto o = evcc::simulate_episode_continuous(cfg, evcc::RoundRobinPolicy{}, rng,
                                                     evcc::ArrivalModel::kPerVehicleFirstMeeting);
    EXPECT_LE(o.total_offloads(), o.vehicle_count);
    if (o.completion_times[0]) {
      EXPECT_GT(*o.completion_times[0], 0.0);
    }
  }
}

TEST(MonteCarlo, BetaIsNoWorseThanRoundRobin) {
  for (double L : {30.0, 60.0, 90.0}) {
    auto cfg = standard_config();
    cfg.lambda = L;
    cfg.mu = 100.0 * (1 - L / 140.0) / 10.0 / 3600.0;
    for (double D : {40.0, 120.0}) {
      cfg.deadline = D;
      const auto beta = evcc::run_monte_carlo(cfg, evcc::BetaPolicy{}, 2000);
      const auto rr = evcc::run_monte_carlo(cfg, evcc::RoundRobinPolicy{}, 2000);
      EXPECT_LE(beta.violation_ratio_mean, rr.violation_ratio_mean + 2 * rr.std_error) << L << " " << D;
    }
  }
}

TEST(MonteCarlo, StaysBelowTheBoundAtTheStandardScenario) {
  const auto cfg = standard_config();
  const auto stats = evcc::run_monte_carlo(cfg, evcc::BetaPolicy{}, 1000);
  EXPECT_LE(stats.violation_ratio_mean, evcc::violation_bound(evcc::bound_inputs(cfg)) + 3 * stats.std_error);
}

TEST(MonteCarlo, IndependentOfThreadCount) {
  const auto cfg = standard_config();
  evcc::MonteCarloOptions one, many;
  one.threads = 1;
  one.keep_raw = true;
  many.threads = 3;
  many.keep_raw = true;
  const auto a = evcc::run_monte_carlo(cfg, evcc::BetaPolicy{}, 5000, one);
  const auto b = evcc::run_monte_carlo(cfg, evcc::BetaPolicy{}, 5000, many);
  EXPECT_EQ(a.per_iteration_ratios, b.per_iteration_ratios);
  EXPECT_EQ(a.violation_ratio_mean, b.violation_ratio_mean);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(MonteCarlo, CallbackSeesEpisodesInOrder) {
  evcc::MonteCarloOptions opts;
  opts.threads = 2;
  std::vector<long> seen;
  opts.on_episode = [&](long i, const evcc::EpisodeOutcome&) { seen.push_back(i); };
  evcc::run_monte_carlo(standard_config(), evcc::BetaPolicy{}, 5000, opts);
  ASSERT_EQ(seen.size(), 5000u);
  for (long i = 0; i < 5000; ++i) EXPECT_EQ(seen[i], i);
}

TEST(MonteCarlo, SingleIterationFlagsStandardError) {
  const auto s = evcc::run_monte_carlo(standard_config(), evcc::BetaPolicy{}, 1);
  EXPECT_EQ(s.iterations, 1);
  EXPECT_FALSE(s.std_error_defined);
  EXPECT_THROW(evcc::run_monte_carlo(standard_config(), evcc::BetaPolicy{}, 0), std::invalid_argument);
}

TEST(MonteCarlo, SameSeedSameStats) {
  const auto a = evcc::run_monte_carlo(standard_config(), evcc::BetaPolicy{}, 300);
  const auto b = evcc::run_monte_carlo(standard_config(), evcc::BetaPolicy{}, 300);
  EXPECT_EQ(a.violation_ratio_mean, b.violation_ratio_mean);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(DiscreteEpisode, NoMeetingsNoOffloads) {
  auto chain = small_chain(10);
  chain.params.meeting_prob = 0;
  const auto s = evcc::run_monte_carlo_discrete(chain, evcc::BetaPolicy{}, 200, 1);
  EXPECT_EQ(s.violation_ratio_mean, 1.0);
  auto rng = evcc::episode_engine(1, 0);
  EXPECT_EQ(evcc::simulate_episode_discrete(chain, evcc::BetaPolicy{}, rng).total_offloads(), 0);
}

TEST(DiscreteEpisode, NoCompletions) {
  auto chain = small_chain(10);
  chain.params.unit_completion_prob = 0;
  EXPECT_EQ(evcc::run_monte_carlo_discrete(chain, evcc::BetaPolicy{}, 200, 1).violation_ratio_mean, 1.0);
}

// Exact law of the final status under BETA, propagated with slot_transition.
std::map<std::string, double> forward_distribution(const evcc::DiscreteChain& chain) {
  std::map<std::string, std::pair<evcc::TaskStatus, double>> dist;
  const evcc::TaskStatus start(static_cast<std::size_t>(chain.task_count));
  dist[start.to_string()] = {start, 1.0};
  for (int d = 0; d < chain.params.horizon; ++d) {
    std::map<std::string, std::pair<evcc::TaskStatus, double>> next;
    const double p = evcc::stage_meeting_prob(chain, d);
    auto add = [&](const std::vector<evcc::Transition>& ts, double weight) {
      for (const auto& t : ts) {
        auto& slot = next[t.next.status.to_string()];
        slot.first = t.next.status;
        slot.second += weight * t.probability;
      }
    };
    for (const auto& [key, entry] : dist) {
      const auto& [status, mass] = entry;
      const evcc::MdpState state{status, d};
      if (evcc::meeting_usable(status, chain.vehicle_count) && p > 0) {
        add(evcc::slot_transition(state, evcc::beta_assign(status), true, chain.params), mass * p);
        if (p < 1) add(evcc::slot_transition(state, std::nullopt, false, chain.params), mass * (1 - p));
      } else {
        add(evcc::slot_transition(state, std::nullopt, false, chain.params), mass);
      }
    }
    dist = std::move(next);
  }
  std::map<std::string, double> out;
  for (const auto& [key, entry] : dist) out[key] = entry.second;
  return out;
}

TEST(DiscreteEpisode, FinalStatusFollowsTheChainLaw) {
  const auto chain = small_chain(10);
  const auto expected = forward_distribution(chain);
  constexpr long kEpisodes = 100000;
  std::map<std::string, long> observed;
  evcc::MonteCarloOptions opts;
  opts.on_episode = [&](long, const evcc::EpisodeOutcome& o) {
    std::vector<int> r(o.task_count());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = o.omega[i] ? evcc::TaskStatus::kFinished : o.offloads[i];
    ++observed[evcc::TaskStatus(r).to_string()];
  };
  evcc::run_monte_carlo_discrete(chain, evcc::BetaPolicy{}, kEpisodes, 321, opts);
  double chi2 = 0, pooled_e = 0, pooled_o = 0;
  int cells = 0;
  for (const auto& [key, p] : expected) {
    const double e = p * kEpisodes;
    const double o = observed.count(key) ? static_cast<double>(observed.at(key)) : 0.0;
    if (e < 5) {
      pooled_e += e;
      pooled_o += o;
      continue;
    }
    chi2 += (o - e) * (o - e) / e;
    ++cells;
  }
  if (pooled_e > 0) {
    chi2 += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
    ++cells;
  }
  for (const auto& [key, count] : observed) EXPECT_TRUE(expected.count(key)) << key;
  ASSERT_GE(cells, 3);
  const boost::math::chi_squared_distribution<double> law(cells - 1);
  EXPECT_LT(chi2, boost::math::quantile(law, 0.999)) << cells << " cells";
}

TEST(DiscreteEpisode, MatchesTheDynamicProgramme) {
  const auto chain = small_chain(30);
  const auto table = evcc::value_iteration(chain);
  const auto s = evcc::run_monte_carlo_discrete(chain, evcc::BetaPolicy{}, 40000, 8);
  EXPECT_NEAR(s.violation_ratio_mean, table.optimal_violation_ratio(), 3 * s.std_error);
}

TEST(DiscreteEpisode, ReplaysTheValueTable) {
  const auto chain = small_chain(12);
  auto table = std::make_shared<const evcc::ValueTable>(evcc::value_iteration(chain));
  const auto s = evcc::run_monte_carlo_discrete(chain, evcc::MdpTablePolicy{table}, 40000, 8);
  EXPECT_NEAR(s.violation_ratio_mean, table->optimal_violation_ratio(), 3 * s.std_error);
}

TEST(EpisodeCsv, Format) {
  evcc::EpisodeOutcome o;
  o.omega = {true, false, false};
  o.offloads = {2, 1, 0};
  o.completion_times = {12.5, 99.0, std::nullopt};
  std::ostringstream out;
  evcc::write_episode_csv_header(out);
  evcc::write_episode_csv(out, 4, o);
  EXPECT_EQ(out.str(),
            "episode,task,offloads,completed,completion_time\n"
            "4,1,2,1,12.5\n"
            "4,2,1,0,99\n"
            "4,3,0,0,\n");
}

}  // namespace
