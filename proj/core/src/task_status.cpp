#include "evcc/task_status.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evcc {

TaskStatus::TaskStatus(std::initializer_list<int> entries) : TaskStatus(std::vector<int>(entries)) {}

TaskStatus::TaskStatus(std::vector<int> entries) : r_(std::move(entries)) {
  for (int v : r_)
    if (v < 0 && v != kFinished) throw std::invalid_argument("TaskStatus: negative replica count");
}

int TaskStatus::replicas(TaskIndex i) const {
  if (finished(i)) throw std::logic_error("TaskStatus: task " + std::to_string(i) + " is finished");
  return r_[i];
}

void TaskStatus::add_replica(TaskIndex i) {
  if (finished(i)) throw std::logic_error("TaskStatus: cannot replicate finished task " + std::to_string(i));
  ++r_[i];
}

void TaskStatus::mark_finished(TaskIndex i) { r_.at(i) = kFinished; }

std::size_t TaskStatus::unfinished_count() const {
  return static_cast<std::size_t>(std::count_if(r_.begin(), r_.end(), [](int v) { return v != kFinished; }));
}

long TaskStatus::active_replicas() const {
  long total = 0;
  for (int v : r_)
    if (v != kFinished) total += v;
  return total;
}

std::string TaskStatus::to_string() const {
  std::string out = "(";
  for (std::size_t i = 0; i < r_.size(); ++i) {
    if (i) out += ',';
    out += r_[i] == kFinished ? std::string("F") : std::to_string(r_[i]);
  }
  return out + ")";
}

long EpisodeOutcome::total_offloads() const {
  long total = 0;
  for (int k : offloads) total += k;
  return total;
}

double EpisodeOutcome::violation_ratio() const {
  if (omega.empty()) return 1.0;
  const auto done = std::count(omega.begin(), omega.end(), true);
  return 1.0 - static_cast<double>(done) / static_cast<double>(omega.size());
}

SimStats summarize(std::span<const double> ratios, bool keep_raw) {
  SimStats stats;
  stats.iterations = static_cast<long>(ratios.size());
  if (ratios.empty()) return stats;
  double sum = 0.0;
  for (double r : ratios) sum += r;
  const double n = static_cast<double>(ratios.size());
  stats.violation_ratio_mean = sum / n;
  if (ratios.size() > 1) {
    double ss = 0.0;
    for (double r : ratios) ss += (r - stats.violation_ratio_mean) * (r - stats.violation_ratio_mean);
    stats.std_error = std::sqrt(ss / (n - 1.0) / n);
    stats.std_error_defined = true;
  }
  if (keep_raw) stats.per_iteration_ratios.assign(ratios.begin(), ratios.end());
  return stats;
}

}  // namespace evcc
