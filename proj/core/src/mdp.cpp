#include "evcc/mdp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

namespace evcc {

namespace {

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a)
    return std::numeric_limits<std::uint64_t>::max();
  return a * b;
}

void check_probability(double q) {
  if (q > 1.0) throw std::domain_error("completion probability exceeds 1; shrink delta");
}

// Mixed-radix view of a status: digit M+1 is FINISHED.
struct Codec {
  std::size_t base;
  std::size_t tasks;
  std::vector<std::size_t> powers;

  Codec(int vehicles, int task_count)
      : base(static_cast<std::size_t>(vehicles) + 2), tasks(static_cast<std::size_t>(task_count)) {
    powers.resize(tasks);
    std::size_t p = 1;
    for (std::size_t i = 0; i < tasks; ++i) {
      powers[i] = p;
      p *= base;
    }
  }
  std::size_t finished_digit() const { return base - 1; }
  std::size_t count() const { return tasks == 0 ? 1 : powers.back() * base; }

  void decode(std::size_t index, std::vector<std::size_t>& digits) const {
    digits.resize(tasks);
    for (std::size_t i = 0; i < tasks; ++i) {
      digits[i] = index % base;
      index /= base;
    }
  }
};

}  // namespace

DiscreteChain make_discrete_chain(const SystemConfig& cfg, int vehicles, int horizon_slots) {
  validate_config(cfg);
  if (!cfg.delta) throw ConfigError("delta", "the discrete chain needs a time increment");
  DiscreteChain chain;
  chain.task_count = cfg.task_count;
  chain.vehicle_count = vehicles;
  chain.params.meeting_prob = vehicles * cfg.mu * *cfg.delta;
  chain.params.unit_completion_prob = cfg.rsu_count * cfg.mu * *cfg.delta;
  chain.params.horizon = horizon_slots;
  return chain;
}

std::uint64_t state_space_entries(const DiscreteChain& chain) {
  std::uint64_t entries = static_cast<std::uint64_t>(chain.params.horizon) + 1;
  const std::uint64_t base = static_cast<std::uint64_t>(chain.vehicle_count) + 2;
  for (int i = 0; i < chain.task_count; ++i) entries = saturating_mul(entries, base);
  return entries;
}

void validate_chain(const DiscreteChain& chain) {
  const auto& p = chain.params;
  if (chain.task_count < 1) throw ConfigError("task_count", "need at least one task");
  if (chain.task_count > 32) throw ConfigError("task_count", "the exact solver supports at most 32 tasks");
  if (chain.vehicle_count < 0) throw ConfigError("vehicles", "vehicle count must be >= 0");
  if (p.horizon < 0) throw ConfigError("deadline_slots", "horizon must be >= 0");
  if (!(p.meeting_prob >= 0 && p.meeting_prob < 1))
    throw ConfigError("meeting_prob", "must lie in [0, 1)");
  if (!(p.unit_completion_prob >= 0)) throw ConfigError("unit_completion_prob", "must be >= 0");
  const double load = p.meeting_prob + static_cast<double>(chain.task_count) * chain.vehicle_count *
                                           p.unit_completion_prob;
  if (load > kMaxSlotEventProbability * (1 + 1e-12))
    throw ConfigError("delta", "s + N*M*u = " + std::to_string(load) + " exceeds " +
                                   std::to_string(kMaxSlotEventProbability) +
                                   "; halve delta until results stop changing");
  if (state_space_entries(chain) > kMaxStateEntries)
    throw StateSpaceError("state space (M+2)^N*(D+1) exceeds " + std::to_string(kMaxStateEntries) +
                          " entries; use Monte Carlo and the closed-form bounds instead");
}

std::vector<Transition> slot_transition(const MdpState& state, Action action, bool meeting,
                                        const DiscreteChainParams& params) {
  const TaskStatus& status = state.status;
  if (action && *action >= status.size())
    throw std::invalid_argument("slot_transition: action out of range");
  if (action && status.finished(*action))
    throw std::invalid_argument("slot_transition: action targets finished task " + std::to_string(*action));
  const Action assigned = meeting ? action : std::nullopt;

  std::vector<TaskIndex> open;
  std::vector<double> q;
  for (TaskIndex i = 0; i < status.size(); ++i) {
    if (status.finished(i)) continue;
    const int extra = (assigned && *assigned == i) ? 1 : 0;
    const double qi = (status.replicas(i) + extra) * params.unit_completion_prob;
    check_probability(qi);
    open.push_back(i);
    q.push_back(qi);
  }

  std::vector<Transition> out;
  const std::size_t subsets = std::size_t{1} << open.size();
  out.reserve(subsets);
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    double prob = 1.0;
    for (std::size_t k = 0; k < open.size() && prob > 0; ++k)
      prob *= (mask >> k & 1) ? q[k] : 1.0 - q[k];
    if (prob <= 0) continue;
    TaskStatus next = status;
    for (std::size_t k = 0; k < open.size(); ++k)
      if (mask >> k & 1) next.mark_finished(open[k]);
    if (assigned && !next.finished(*assigned)) next.add_replica(*assigned);
    out.push_back({{std::move(next), state.elapsed + 1}, prob});
  }
  return out;
}

int terminal_reward(const TaskStatus& status) { return static_cast<int>(status.finished_count()); }

bool meeting_usable(const TaskStatus& status, int vehicle_count) {
  return !status.all_finished() && status.active_replicas() < vehicle_count;
}

double stage_meeting_prob(const DiscreteChain& chain, int stage) {
  const double s = chain.params.meeting_prob;
  if (stage == 0) return (s > 0 && chain.vehicle_count >= 1) ? 1.0 : 0.0;
  return s;
}

// ---------------------------------------------------------------------------
// ValueTable

std::size_t ValueTable::index_of(const TaskStatus& status) const {
  if (status.size() != static_cast<std::size_t>(chain_.task_count))
    throw std::invalid_argument("ValueTable: status has the wrong task count");
  std::size_t index = 0;
  std::size_t power = 1;
  for (TaskIndex i = 0; i < status.size(); ++i) {
    std::size_t digit;
    if (status.finished(i)) {
      digit = base_ - 1;
    } else {
      const int r = status.replicas(i);
      if (r > chain_.vehicle_count) throw std::out_of_range("ValueTable: replica count exceeds M");
      digit = static_cast<std::size_t>(r);
    }
    index += digit * power;
    power *= base_;
  }
  return index;
}

TaskStatus ValueTable::status_at(std::size_t index) const {
  std::vector<int> r(static_cast<std::size_t>(chain_.task_count));
  for (auto& v : r) {
    const std::size_t digit = index % base_;
    index /= base_;
    v = digit == base_ - 1 ? TaskStatus::kFinished : static_cast<int>(digit);
  }
  return TaskStatus(std::move(r));
}

bool ValueTable::is_valid(std::size_t index) const {
  return index < status_count_ && !std::isnan(values_[index]);
}

double ValueTable::value(const TaskStatus& status, int stage) const {
  if (stage < 0 || stage > horizon()) throw std::out_of_range("ValueTable: stage out of range");
  const std::size_t idx = index_of(status);
  const double v = values_[static_cast<std::size_t>(stage) * status_count_ + idx];
  if (std::isnan(v)) throw std::out_of_range("ValueTable: status has more than M active replicas");
  return v;
}

Action ValueTable::action(const TaskStatus& status, int stage) const {
  if (stage < 0 || stage > horizon()) throw std::out_of_range("ValueTable: stage out of range");
  if (stage == horizon()) return std::nullopt;
  const auto a = actions_[static_cast<std::size_t>(stage) * status_count_ + index_of(status)];
  if (a < 0) return std::nullopt;
  return static_cast<TaskIndex>(a);
}

std::vector<TaskIndex> ValueTable::optimal_actions(const TaskStatus& status, int stage) const {
  std::vector<TaskIndex> out;
  if (stage < 0 || stage > horizon()) throw std::out_of_range("ValueTable: stage out of range");
  if (stage == horizon()) return out;
  const std::uint32_t mask = optimal_[static_cast<std::size_t>(stage) * status_count_ + index_of(status)];
  for (TaskIndex i = 0; i < static_cast<TaskIndex>(chain_.task_count); ++i)
    if (mask >> i & 1u) out.push_back(i);
  return out;
}

double ValueTable::initial_value() const { return values_[0]; }

double ValueTable::optimal_violation_ratio() const {
  return 1.0 - initial_value() / static_cast<double>(chain_.task_count);
}

// ---------------------------------------------------------------------------

ValueTable value_iteration(const DiscreteChain& chain, double tie_tolerance) {
  validate_chain(chain);
  const Codec codec(chain.vehicle_count, chain.task_count);
  const std::size_t K = codec.count();
  const int D = chain.params.horizon;
  const double u = chain.params.unit_completion_prob;
  const std::size_t F = codec.finished_digit();

  ValueTable table;
  table.chain_ = chain;
  table.base_ = codec.base;
  table.status_count_ = K;
  table.values_.assign(static_cast<std::size_t>(D + 1) * K, std::numeric_limits<double>::quiet_NaN());
  table.actions_.assign(static_cast<std::size_t>(D) * K, -1);
  table.optimal_.assign(static_cast<std::size_t>(D) * K, 0u);

  std::vector<std::size_t> digits;
  std::vector<char> valid(K, 0);
  std::vector<long> active(K, 0);
  for (std::size_t idx = 0; idx < K; ++idx) {
    codec.decode(idx, digits);
    long total = 0;
    int done = 0;
    for (std::size_t d : digits) {
      if (d == F) ++done;
      else total += static_cast<long>(d);
    }
    active[idx] = total;
    if (total > chain.vehicle_count) continue;
    valid[idx] = 1;
    table.values_[static_cast<std::size_t>(D) * K + idx] = done;
  }

  std::vector<std::size_t> open;
  std::vector<double> q;
  // E[J_next(next)] from status `idx` (digits already decoded) with an optional assignment.
  auto expected_next = [&](std::size_t idx, std::optional<std::size_t> assigned, const double* next) {
    open.clear();
    q.clear();
    for (std::size_t i = 0; i < codec.tasks; ++i) {
      if (digits[i] == F) continue;
      const double qi = (static_cast<double>(digits[i]) + (assigned == i ? 1.0 : 0.0)) * u;
      check_probability(qi);
      open.push_back(i);
      q.push_back(qi);
    }
    double total = 0.0;
    const std::size_t subsets = std::size_t{1} << open.size();
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      double prob = 1.0;
      std::size_t target = idx;
      for (std::size_t k = 0; k < open.size(); ++k) {
        const std::size_t i = open[k];
        if (mask >> k & 1) {
          prob *= q[k];
          target += (F - digits[i]) * codec.powers[i];
        } else {
          prob *= 1.0 - q[k];
          if (assigned == i) target += codec.powers[i];
        }
      }
      if (prob > 0) total += prob * next[target];
    }
    return total;
  };

  for (int stage = D - 1; stage >= 0; --stage) {
    const double p_meet = stage_meeting_prob(chain, stage);
    const double* next = table.values_.data() + static_cast<std::size_t>(stage + 1) * K;
    double* current = table.values_.data() + static_cast<std::size_t>(stage) * K;
    std::int16_t* act = table.actions_.data() + static_cast<std::size_t>(stage) * K;
    std::uint32_t* opt = table.optimal_.data() + static_cast<std::size_t>(stage) * K;

    for (std::size_t idx = 0; idx < K; ++idx) {
      if (!valid[idx]) continue;
      codec.decode(idx, digits);
      const bool any_open = std::any_of(digits.begin(), digits.end(), [F](std::size_t d) { return d != F; });
      const double idle = expected_next(idx, std::nullopt, next);
      if (!any_open || active[idx] >= chain.vehicle_count || p_meet == 0.0) {
        current[idx] = idle;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      std::vector<double> qvalues(codec.tasks, -std::numeric_limits<double>::infinity());
      for (std::size_t a = 0; a < codec.tasks; ++a) {
        if (digits[a] == F) continue;
        qvalues[a] = expected_next(idx, a, next);
        best = std::max(best, qvalues[a]);
      }
      const double slack = tie_tolerance * (1.0 + std::abs(best));
      std::uint32_t mask = 0;
      for (std::size_t a = 0; a < codec.tasks; ++a)
        if (qvalues[a] >= best - slack) mask |= 1u << a;
      opt[idx] = mask;
      act[idx] = static_cast<std::int16_t>(std::countr_zero(mask));
      current[idx] = p_meet * best + (1.0 - p_meet) * idle;
    }
  }
  return table;
}

std::vector<std::vector<TaskStatus>> reachable_statuses(const DiscreteChain& chain) {
  validate_chain(chain);
  const int D = chain.params.horizon;
  std::vector<std::vector<TaskStatus>> stages(static_cast<std::size_t>(D) + 1);
  stages[0].push_back(TaskStatus(static_cast<std::size_t>(chain.task_count)));
  auto less = [](const TaskStatus& a, const TaskStatus& b) {
    return std::lexicographical_compare(a.entries().begin(), a.entries().end(), b.entries().begin(),
                                        b.entries().end());
  };
  for (int stage = 0; stage < D; ++stage) {
    const double p_meet = stage_meeting_prob(chain, stage);
    std::vector<TaskStatus> next;
    auto push_all = [&](const std::vector<Transition>& ts) {
      for (const auto& t : ts) next.push_back(t.next.status);
    };
    for (const auto& status : stages[static_cast<std::size_t>(stage)]) {
      const MdpState state{status, stage};
      const bool usable = meeting_usable(status, chain.vehicle_count);
      if (p_meet < 1.0 || !usable) push_all(slot_transition(state, std::nullopt, false, chain.params));
      if (p_meet > 0.0 && usable) {
        for (TaskIndex a = 0; a < status.size(); ++a)
          if (!status.finished(a)) push_all(slot_transition(state, a, true, chain.params));
      }
    }
    std::sort(next.begin(), next.end(), less);
    next.erase(std::unique(next.begin(), next.end()), next.end());
    stages[static_cast<std::size_t>(stage) + 1] = std::move(next);
  }
  return stages;
}

double myopic_reward(const TaskStatus& status, Action action, bool meeting, double unit_completion_prob) {
  if (action && *action >= status.size()) throw std::invalid_argument("myopic_reward: action out of range");
  if (meeting && action && status.finished(*action))
    throw std::invalid_argument("myopic_reward: action targets finished task " + std::to_string(*action));
  const double c = meeting ? 1.0 : 0.0;
  double total = c;
  for (TaskIndex i = 0; i < status.size(); ++i) {
    if (status.finished(i)) continue;
    const double load = status.replicas(i) + ((action && *action == i) ? c : 0.0);
    const double p = load * unit_completion_prob;
    total += status.replicas(i) - p * load;
  }
  return total;
}

nlohmann::json value_table_to_json(const ValueTable& table) {
  const auto& chain = table.chain();
  nlohmann::json entries = nlohmann::json::array();
  const auto stages = reachable_statuses(chain);
  auto replicas_json = [](const TaskStatus& s) {
    nlohmann::json r = nlohmann::json::array();
    for (int v : s.entries()) {
      if (v == TaskStatus::kFinished) r.push_back("F");
      else r.push_back(v);
    }
    return r;
  };
  for (int stage = 0; stage <= table.horizon(); ++stage) {
    for (const auto& status : stages[static_cast<std::size_t>(stage)]) {
      nlohmann::json e;
      e["stage"] = stage;
      e["replicas"] = replicas_json(status);
      e["value"] = table.value(status, stage);
      const Action a = table.action(status, stage);
      e["action"] = a ? nlohmann::json(*a + 1) : nlohmann::json(nullptr);
      nlohmann::json opt = nlohmann::json::array();
      for (TaskIndex t : table.optimal_actions(status, stage)) opt.push_back(t + 1);
      e["optimal_actions"] = std::move(opt);
      entries.push_back(std::move(e));
    }
  }
  return {
      {"task_count", chain.task_count},
      {"vehicle_count", chain.vehicle_count},
      {"horizon", chain.params.horizon},
      {"meeting_prob", chain.params.meeting_prob},
      {"unit_completion_prob", chain.params.unit_completion_prob},
      {"initial_value", table.initial_value()},
      {"optimal_violation_ratio", table.optimal_violation_ratio()},
      {"entries", std::move(entries)},
  };
}

}  // namespace evcc
