#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evcc {

using TaskIndex = std::size_t;
/// A task assignment decision; std::nullopt means "assign nothing".
using Action = std::optional<TaskIndex>;

/// Replica counts per task, with a FINISHED sentinel.
///
/// Entries only grow (one replica at a time) until the task finishes;
/// FINISHED is absorbing.
class TaskStatus {
 public:
  static constexpr int kFinished = -1;

  TaskStatus() = default;
  explicit TaskStatus(std::size_t task_count) : r_(task_count, 0) {}
  /// Raw entries; use kFinished for finished tasks.
  TaskStatus(std::initializer_list<int> entries);
  explicit TaskStatus(std::vector<int> entries);

  std::size_t size() const { return r_.size(); }
  bool finished(TaskIndex i) const { return r_.at(i) == kFinished; }
  /// Replica count of an unfinished task.
  int replicas(TaskIndex i) const;
  int raw(TaskIndex i) const { return r_.at(i); }
  std::span<const int> entries() const { return r_; }

  void add_replica(TaskIndex i);
  void mark_finished(TaskIndex i);

  std::size_t unfinished_count() const;
  std::size_t finished_count() const { return size() - unfinished_count(); }
  bool all_finished() const { return unfinished_count() == 0; }
  /// Sum of replica counts over unfinished tasks.
  long active_replicas() const;

  /// e.g. "(F,3,0)"
  std::string to_string() const;

  bool operator==(const TaskStatus&) const = default;

 private:
  std::vector<int> r_;
};

/// Result of one simulated episode.
struct EpisodeOutcome {
  std::vector<bool> omega;  ///< omega[n]: task n executed before the deadline
  long vehicle_count = 0;   ///< M drawn for the episode
  /// Earliest replica completion per task, if the task was ever offloaded.
  std::vector<std::optional<double>> completion_times;
  std::vector<int> offloads;  ///< replicas created per task
  double deadline = 0.0;

  std::size_t task_count() const { return omega.size(); }
  long total_offloads() const;
  /// p_v = 1 - (1/N) sum omega_n
  double violation_ratio() const;
};

/// Aggregated Monte Carlo statistics over per-episode violation ratios.
struct SimStats {
  double violation_ratio_mean = 0.0;
  /// Standard error of the mean; 0 with `std_error_defined == false` for a single episode.
  double std_error = 0.0;
  bool std_error_defined = false;
  long iterations = 0;
  std::vector<double> per_iteration_ratios;  ///< filled only when requested
};

/// Ordered reduction of per-episode ratios into SimStats.
SimStats summarize(std::span<const double> ratios, bool keep_raw = false);

}  // namespace evcc
