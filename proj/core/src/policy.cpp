#include "evcc/policy.hpp"

#include <stdexcept>

#include "evcc/mdp.hpp"

namespace evcc {

Action beta_assign(const TaskStatus& status) {
  Action best;
  int best_count = 0;
  for (TaskIndex i = 0; i < status.size(); ++i) {
    if (status.finished(i)) continue;
    const int r = status.replicas(i);
    if (!best || r < best_count) {
      best = i;
      best_count = r;
    }
  }
  return best;
}

TaskIndex round_robin_assign(std::uint64_t meeting_index, std::size_t task_count) {
  if (task_count == 0) throw std::invalid_argument("round_robin_assign: no tasks");
  return static_cast<TaskIndex>(meeting_index % task_count);
}

BalanceSnapshot balance_snapshot(const TaskStatus& status) {
  return {status.active_replicas(), status.unfinished_count()};
}

bool check_balance(const TaskStatus& status) {
  const auto [gamma, u] = balance_snapshot(status);
  if (u == 0) return true;
  const long lo = gamma / static_cast<long>(u);
  const long hi = lo + (gamma % static_cast<long>(u) != 0 ? 1 : 0);
  for (TaskIndex i = 0; i < status.size(); ++i) {
    if (status.finished(i)) continue;
    const long r = status.replicas(i);
    if (r != lo && r != hi) return false;
  }
  return true;
}

PolicyKind parse_policy(std::string_view name) {
  if (name == "beta") return BetaPolicy{};
  if (name == "round-robin") return RoundRobinPolicy{};
  if (name == "mdp") return MdpTablePolicy{};
  throw std::invalid_argument("unknown policy '" + std::string(name) + "' (expected beta, round-robin or mdp)");
}

std::string policy_name(const PolicyKind& policy) {
  struct Visitor {
    std::string operator()(const BetaPolicy&) const { return "beta"; }
    std::string operator()(const RoundRobinPolicy&) const { return "round-robin"; }
    std::string operator()(const MdpTablePolicy&) const { return "mdp"; }
  };
  return std::visit(Visitor{}, policy);
}

Action EpisodePolicy::choose(const TaskStatus& status, int stage) {
  const std::uint64_t k = meetings_++;
  if (std::holds_alternative<BetaPolicy>(*kind_)) return beta_assign(status);
  if (std::holds_alternative<RoundRobinPolicy>(*kind_)) return round_robin_assign(k, status.size());
  const auto& table = std::get<MdpTablePolicy>(*kind_).table;
  if (!table) throw std::logic_error("mdp policy used without a value table");
  if (stage < 0) throw std::logic_error("mdp policy needs the discrete-chain stage");
  return table->action(status, stage);
}

}  // namespace evcc
