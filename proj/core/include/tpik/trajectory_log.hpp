#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tpik/kinematics.hpp"

namespace tpik {

/// A set-based task tracked by the log, with its physical thresholds.
struct LoggedTask {
  std::string id;
  double lower = 0.0;
  double upper = 0.0;
};

/// One control tick. Values describe the state at the start of the tick and
/// the velocity commanded during it.
struct TickRecord {
  double time = 0.0;
  std::uint64_t tick = 0;
  std::size_t phase = 0;
  std::string state;
  std::string frame;
  Vector q;
  Vector qdot;
  std::vector<double> set_values;  ///< one per LoggedTask
  Eigen::Vector3d position_error = Eigen::Vector3d::Zero();
  Eigen::Vector3d orientation_error = Eigen::Vector3d::Zero();
  double error_norm = 0.0;
  std::uint64_t active_mask = 0;  ///< bit i: hierarchy task i active
  std::uint64_t chosen_mask = 0;  ///< bit i: hierarchy task i inserted in the chosen solution
  std::size_t candidates = 0;
  std::size_t feasible = 0;
  std::vector<double> candidate_norms;
  double scale = 1.0;
};

/// Per-tick trajectory log with a fixed CSV schema (docs/csv_schema.md).
class TrajectoryLog {
 public:
  TrajectoryLog() = default;
  TrajectoryLog(std::size_t joint_count, std::vector<LoggedTask> tasks);

  void append(TickRecord record);
  const std::vector<TickRecord>& rows() const { return rows_; }
  const std::vector<LoggedTask>& tasks() const { return tasks_; }
  std::size_t joint_count() const { return joint_count_; }
  bool empty() const { return rows_.empty(); }

  std::vector<std::string> columns() const;
  void write_csv(std::ostream& out) const;
  std::string to_csv() const;

  /// time, then per task: value, margin to lower, margin to upper.
  void write_bounds_csv(std::ostream& out) const;

 private:
  std::size_t joint_count_ = 0;
  std::vector<LoggedTask> tasks_;
  std::vector<TickRecord> rows_;
};

/// Shortest round-trip decimal form; "inf" / "-inf" / "nan" for non-finite values.
std::string format_number(double v);

struct ExportReport {
  std::vector<std::string> files;
  std::size_t rows = 0;
  bool truncated = false;
  std::vector<std::string> warnings;
};

/// Splits a trajectory CSV into per-figure tidy files inside `out_dir`:
/// pose_error.csv, joint<k>_limits.csv for each logged joint-limit task and
/// obstacle_distance.csv. Incomplete rows end the export with a warning.
ExportReport export_plot_data(const std::string& trajectory_csv, const std::string& out_dir);

}  // namespace tpik
