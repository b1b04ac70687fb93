#include "evcc/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <vector>

#include <fmt/format.h>

namespace evcc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

EpisodeOutcome empty_outcome(std::size_t tasks, double deadline) {
  EpisodeOutcome out;
  out.omega.assign(tasks, false);
  out.completion_times.assign(tasks, std::nullopt);
  out.offloads.assign(tasks, 0);
  out.deadline = deadline;
  return out;
}

// Per-episode bookkeeping for the continuous backend: replicas never change
// after creation, only the earliest completion per task is kept.
class ContinuousEpisode {
 public:
  ContinuousEpisode(const SystemConfig& cfg, const PolicyKind& policy, Engine& rng)
      : cfg_(cfg),
        rng_(rng),
        policy_(policy),
        status_(static_cast<std::size_t>(cfg.task_count)),
        earliest_(static_cast<std::size_t>(cfg.task_count), kInf),
        out_(empty_outcome(static_cast<std::size_t>(cfg.task_count), cfg.deadline)),
        service_rate_(cfg.rsu_count * cfg.mu) {}

  /// Handles a meeting at time t; returns false once nothing can change any more.
  bool meet(double t) {
    for (TaskIndex n = 0; n < status_.size(); ++n)
      if (!status_.finished(n) && earliest_[n] <= t) status_.mark_finished(n);
    const Action a = policy_.choose(status_);
    if (!a) return !status_.all_finished();
    const double done = t + sample_exponential(service_rate_, rng_);
    ++out_.offloads[*a];
    ++offloads_;
    earliest_[*a] = std::min(earliest_[*a], done);
    if (!status_.finished(*a)) status_.add_replica(*a);
    return true;
  }

  long offloads() const { return offloads_; }

  EpisodeOutcome finish(long vehicles) {
    out_.vehicle_count = vehicles;
    for (TaskIndex n = 0; n < status_.size(); ++n) {
      if (out_.offloads[n] > 0) out_.completion_times[n] = earliest_[n];
      out_.omega[n] = earliest_[n] <= cfg_.deadline;
    }
    return std::move(out_);
  }

 private:
  const SystemConfig& cfg_;
  Engine& rng_;
  EpisodePolicy policy_;
  TaskStatus status_;
  std::vector<double> earliest_;
  EpisodeOutcome out_;
  double service_rate_;
  long offloads_ = 0;
};

// Runs fn(i) for i in [0, n) across threads with a static strided split.
template <typename Fn>
void parallel_for(long n, unsigned threads, Fn fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<long>(threads, std::max<long>(n, 1)));
  if (threads <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (long i = t; i < n; i += threads) fn(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Episodes are generated in chunks so that on_episode sees them in order
// without holding every outcome in memory.
template <typename Episode>
SimStats run_episodes(long iterations, std::uint64_t seed, const MonteCarloOptions& options, Episode episode) {
  if (iterations < 1) throw std::invalid_argument("Monte Carlo needs at least one iteration");
  std::vector<double> ratios(static_cast<std::size_t>(iterations));
  constexpr long kChunk = 4096;
  std::vector<EpisodeOutcome> chunk;
  for (long start = 0; start < iterations; start += kChunk) {
    const long count = std::min(kChunk, iterations - start);
    if (options.on_episode) chunk.assign(static_cast<std::size_t>(count), EpisodeOutcome{});
    parallel_for(count, options.threads, [&](long k) {
      const long i = start + k;
      Engine rng = episode_engine(seed, static_cast<std::uint64_t>(i));
      EpisodeOutcome outcome = episode(rng);
      ratios[static_cast<std::size_t>(i)] = outcome.violation_ratio();
      if (options.on_episode) chunk[static_cast<std::size_t>(k)] = std::move(outcome);
    });
    if (options.on_episode)
      for (long k = 0; k < count; ++k) options.on_episode(start + k, chunk[static_cast<std::size_t>(k)]);
  }
  return summarize(ratios, options.keep_raw);
}

}  // namespace

EpisodeOutcome simulate_episode_continuous(const SystemConfig& cfg, const PolicyKind& policy, Engine& rng,
                                           ArrivalModel arrivals) {
  if (std::holds_alternative<MdpTablePolicy>(policy))
    throw std::invalid_argument("the mdp policy is only defined on the discrete chain");
  const long vehicles = sample_vehicle_count(cfg.lambda, cfg.road_length, rng);
  ContinuousEpisode episode(cfg, policy, rng);
  if (vehicles == 0) return episode.finish(0);

  if (arrivals == ArrivalModel::kAggregatePoisson) {
    const double meeting_rate = static_cast<double>(vehicles) * cfg.mu;
    double t = 0.0;
    while (t < cfg.deadline) {
      if (!episode.meet(t) || episode.offloads() >= vehicles) break;
      t += sample_exponential(meeting_rate, rng);
    }
  } else {
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(vehicles));
    for (long v = 0; v < vehicles; ++v) {
      const double t = sample_exponential(cfg.mu, rng);
      if (t < cfg.deadline) times.push_back(t);
    }
    std::sort(times.begin(), times.end());
    for (double t : times)
      if (!episode.meet(t)) break;
  }
  return episode.finish(vehicles);
}

EpisodeOutcome simulate_episode_discrete(const DiscreteChain& chain, const PolicyKind& policy, Engine& rng) {
  validate_chain(chain);
  const auto tasks = static_cast<std::size_t>(chain.task_count);
  const double u = chain.params.unit_completion_prob;
  EpisodeOutcome out = empty_outcome(tasks, chain.params.horizon);
  out.vehicle_count = chain.vehicle_count;
  TaskStatus status(tasks);
  EpisodePolicy chooser(policy);

  for (int stage = 0; stage < chain.params.horizon && !status.all_finished(); ++stage) {
    const double p_meet = stage_meeting_prob(chain, stage);
    const bool meeting = p_meet >= 1.0 || (p_meet > 0.0 && sample_uniform(rng) < p_meet);
    Action a;
    if (meeting && meeting_usable(status, chain.vehicle_count)) {
      a = chooser.choose(status, stage);
      if (a) ++out.offloads[*a];
      // Round-robin may pick a finished task: the offload is wasted.
      if (a && status.finished(*a)) a.reset();
    }
    const TaskIndex target = a.value_or(tasks);
    for (TaskIndex i = 0; i < tasks; ++i) {
      if (status.finished(i)) continue;
      const int load = status.replicas(i) + (target == i ? 1 : 0);
      if (completes_in_slot(load, u, sample_uniform(rng))) {
        status.mark_finished(i);
        out.completion_times[i] = stage + 1;
      } else if (target == i) {
        status.add_replica(i);
      }
    }
  }
  for (TaskIndex i = 0; i < tasks; ++i) out.omega[i] = status.finished(i);
  return out;
}

SimStats run_monte_carlo(const SystemConfig& cfg, const PolicyKind& policy, long iterations,
                         const MonteCarloOptions& options) {
  const SystemConfig checked = validate_config(cfg);
  return run_episodes(iterations, checked.seed, options, [&](Engine& rng) {
    return simulate_episode_continuous(checked, policy, rng, options.arrivals);
  });
}

SimStats run_monte_carlo_discrete(const DiscreteChain& chain, const PolicyKind& policy, long iterations,
                                  std::uint64_t seed, const MonteCarloOptions& options) {
  validate_chain(chain);
  return run_episodes(iterations, seed, options,
                      [&](Engine& rng) { return simulate_episode_discrete(chain, policy, rng); });
}

void write_episode_csv_header(std::ostream& out) {
  out << "episode,task,offloads,completed,completion_time\n";
}

void write_episode_csv(std::ostream& out, long episode, const EpisodeOutcome& outcome) {
  for (TaskIndex n = 0; n < outcome.task_count(); ++n) {
    out << fmt::format("{},{},{},{},", episode, n + 1, outcome.offloads[n], outcome.omega[n] ? 1 : 0);
    if (outcome.completion_times[n] && std::isfinite(*outcome.completion_times[n]))
      out << fmt::format("{}", *outcome.completion_times[n]);
    out << '\n';
  }
}

}  // namespace evcc
