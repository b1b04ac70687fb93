#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evcc/config.hpp"
#include "evcc/task_status.hpp"

namespace evcc {

/// Bound on s + N*M*u that keeps the sampled-time chain in its small-delta regime.
inline constexpr double kMaxSlotEventProbability = 0.05;
/// Largest (M+2)^N * (D+1) table value_iteration will allocate.
inline constexpr std::uint64_t kMaxStateEntries = 100'000'000;

/// Per-slot law of the sampled-time chain.
struct DiscreteChainParams {
  double meeting_prob = 0.0;          ///< s = M*mu*delta
  double unit_completion_prob = 0.0;  ///< u = B*mu*delta, per replica per slot
  int horizon = 0;                    ///< D in slots
};

/// Chain parameters plus the task and vehicle counts they apply to.
struct DiscreteChain {
  DiscreteChainParams params;
  int task_count = 1;
  int vehicle_count = 1;  ///< M, fixed for the benchmark chain
};

/// s = M*mu*delta and u = B*mu*delta from a config with `delta` set.
DiscreteChain make_discrete_chain(const SystemConfig& cfg, int vehicles, int horizon_slots);

/// Throws ConfigError when the chain is outside the small-delta regime or
/// the state space exceeds kMaxStateEntries.
void validate_chain(const DiscreteChain& chain);

/// (M+2)^N * (D+1), saturating at UINT64_MAX.
std::uint64_t state_space_entries(const DiscreteChain& chain);

class StateSpaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MdpState {
  TaskStatus status;
  int elapsed = 0;  ///< slots since the batch arrived
  bool operator==(const MdpState&) const = default;
};

struct Transition {
  MdpState next;
  double probability = 0.0;
};

/// One slot of the chain. Each unfinished task i completes independently
/// with probability q_i = (r_i + [i == action && meeting]) * u; the assigned
/// task gains a replica if it does not complete. Zero-mass outcomes are
/// omitted. Throws std::invalid_argument if `action` names a finished task
/// and std::domain_error if some q_i > 1.
std::vector<Transition> slot_transition(const MdpState& state, Action action, bool meeting,
                                        const DiscreteChainParams& params);

/// Does a task served by `replicas` replicas complete this slot, given the
/// coupling variable `uniform` in [0,1)? Shared by the simulator and tests.
inline bool completes_in_slot(int replicas, double unit_completion_prob, double uniform) {
  return uniform < replicas * unit_completion_prob;
}

/// Number of finished tasks.
int terminal_reward(const TaskStatus& status);

/// A meeting can be used iff some task is unfinished and fewer than M
/// replicas are active.
bool meeting_usable(const TaskStatus& status, int vehicle_count);

/// Meeting probability of a stage. Stage 0 always holds a meeting when any
/// vehicle can meet the task-RSU (s > 0, M >= 1).
double stage_meeting_prob(const DiscreteChain& chain, int stage);

/// Optimal values and actions for every (status, stage) of the chain.
class ValueTable {
 public:
  const DiscreteChain& chain() const { return chain_; }
  int horizon() const { return chain_.params.horizon; }

  /// J_stage(status); stage in [0, D].
  double value(const TaskStatus& status, int stage) const;
  /// Canonical optimal action: lowest index among the optimal set.
  /// nullopt when no meeting can be used (stage D included).
  Action action(const TaskStatus& status, int stage) const;
  /// Every action whose value is within the tie tolerance of the best.
  std::vector<TaskIndex> optimal_actions(const TaskStatus& status, int stage) const;

  /// J_0(s_0), expected number of tasks finished by the deadline.
  double initial_value() const;
  /// 1 - J_0(s_0) / N.
  double optimal_violation_ratio() const;

  std::size_t status_count() const { return status_count_; }
  std::size_t index_of(const TaskStatus& status) const;
  TaskStatus status_at(std::size_t index) const;
  /// False for encodings whose active replicas exceed M.
  bool is_valid(std::size_t index) const;

 private:
  friend ValueTable value_iteration(const DiscreteChain& chain, double tie_tolerance);

  DiscreteChain chain_;
  std::size_t base_ = 0;  ///< M + 2; digit M + 1 encodes FINISHED
  std::size_t status_count_ = 0;
  std::vector<double> values_;          ///< (D+1) x status_count
  std::vector<std::int16_t> actions_;   ///< D x status_count, -1 = none
  std::vector<std::uint32_t> optimal_;  ///< D x status_count bitmask
};

/// Backward induction over slots, from the terminal reward at stage D down
/// to stage 0. Throws StateSpaceError above kMaxStateEntries and ConfigError
/// for an invalid chain.
ValueTable value_iteration(const DiscreteChain& chain, double tie_tolerance = 1e-12);

/// Statuses reachable at each stage 0..D from all-zeros under any policy.
std::vector<std::vector<TaskStatus>> reachable_statuses(const DiscreteChain& chain);

/// Expected immediate reward of the queueing reformulation used to show
/// BETA is myopic:
///   sum r_i + c - sum p_i (r_i + [a == i] c),  p_i = (r_i + [a == i] c) u,
/// sums over unfinished tasks, c = 1 when a meeting occurs.
double myopic_reward(const TaskStatus& status, Action action, bool meeting,
                     double unit_completion_prob);

/// Reachable entries keyed by (replica vector, stage); task numbers are 1-based.
nlohmann::json value_table_to_json(const ValueTable& table);

}  // namespace evcc
