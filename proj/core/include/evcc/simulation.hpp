#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>

#include "evcc/config.hpp"
#include "evcc/mdp.hpp"
#include "evcc/policy.hpp"
#include "evcc/rng.hpp"
#include "evcc/task_status.hpp"

namespace evcc {

/// How task-RSU meetings arrive in continuous time.
enum class ArrivalModel {
  /// Guaranteed meeting at t = 0, then a Poisson process of rate M*mu;
  /// vehicles may re-meet. At most M offloads per episode.
  kAggregatePoisson,
  /// Each of the M vehicles meets the task-RSU once, after an independent
  /// Exp(mu) delay. No meeting at t = 0. This is the single-pass system the
  /// closed-form bound is computed on.
  kPerVehicleFirstMeeting,
};

/// One episode in continuous time. Every offload draws its own service lag
/// Exp(B*mu); a task completes at the earliest completion of its replicas.
/// Throws std::invalid_argument for an MdpTablePolicy.
EpisodeOutcome simulate_episode_continuous(const SystemConfig& cfg, const PolicyKind& policy, Engine& rng,
                                           ArrivalModel arrivals = ArrivalModel::kAggregatePoisson);

/// One episode of the sampled-time chain, slot by slot, with the same law as
/// slot_transition. Completion times are in slots.
EpisodeOutcome simulate_episode_discrete(const DiscreteChain& chain, const PolicyKind& policy, Engine& rng);

struct MonteCarloOptions {
  unsigned threads = 0;  ///< 0 = hardware concurrency
  bool keep_raw = false;
  ArrivalModel arrivals = ArrivalModel::kAggregatePoisson;
  /// Called once per episode, in episode order, from the calling thread.
  std::function<void(long episode, const EpisodeOutcome&)> on_episode;
};

/// Runs `iterations` continuous-time episodes seeded from cfg.seed. Results
/// do not depend on the thread count.
SimStats run_monte_carlo(const SystemConfig& cfg, const PolicyKind& policy, long iterations,
                         const MonteCarloOptions& options = {});

SimStats run_monte_carlo_discrete(const DiscreteChain& chain, const PolicyKind& policy, long iterations,
                                  std::uint64_t seed, const MonteCarloOptions& options = {});

/// `episode,task,offloads,completed,completion_time`; task numbers 1-based,
/// empty completion_time for tasks never offloaded.
void write_episode_csv_header(std::ostream& out);
void write_episode_csv(std::ostream& out, long episode, const EpisodeOutcome& outcome);

}  // namespace evcc
