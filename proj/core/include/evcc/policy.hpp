#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <variant>

#include "evcc/task_status.hpp"

namespace evcc {

class ValueTable;

/// Offload the unfinished task with the fewest replicas, lowest index on ties.
/// Returns nullopt iff every task is finished.
Action beta_assign(const TaskStatus& status);

/// Task for the k-th meeting (k from 0) under round-robin: k mod N.
/// Finished tasks are still assigned; that wasted offload is what makes
/// round-robin an upper bound for BETA.
TaskIndex round_robin_assign(std::uint64_t meeting_index, std::size_t task_count);

struct BalanceSnapshot {
  long gamma = 0;              ///< active replicas over unfinished tasks
  std::size_t unfinished = 0;  ///< u
};

BalanceSnapshot balance_snapshot(const TaskStatus& status);

/// True iff every unfinished count lies in {floor(gamma/u), ceil(gamma/u)}.
bool check_balance(const TaskStatus& status);

struct BetaPolicy {};
struct RoundRobinPolicy {};
/// Replays the optimal action table; discrete chain only.
struct MdpTablePolicy {
  std::shared_ptr<const ValueTable> table;
};

using PolicyKind = std::variant<BetaPolicy, RoundRobinPolicy, MdpTablePolicy>;

/// "beta" | "round-robin" | "mdp". The mdp kind comes back without a table;
/// callers attach one.
PolicyKind parse_policy(std::string_view name);
std::string policy_name(const PolicyKind& policy);

/// Per-episode decision maker. Round-robin keeps its meeting counter here,
/// so one instance must not be shared between episodes.
class EpisodePolicy {
 public:
  explicit EpisodePolicy(const PolicyKind& kind) : kind_(&kind) {}

  /// Called once per usable meeting. `stage` is the elapsed slot count for
  /// the discrete chain and is required by MdpTablePolicy.
  Action choose(const TaskStatus& status, int stage = -1);

 private:
  const PolicyKind* kind_;
  std::uint64_t meetings_ = 0;
};

}  // namespace evcc
