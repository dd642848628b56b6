#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tpik/mission.hpp"
#include "tpik/selection.hpp"

namespace tpik {

/// Mission snapshot pushed to console subscribers after every tick.
struct StatusEvent {
  std::uint64_t mission_id = 0;
  std::string command;
  std::string state;
  std::size_t phase = 0;
  std::string phase_name;
  std::size_t phase_count = 0;
  std::string fault;
  double clock = 0.0;
  std::uint64_t tick = 0;
  std::optional<double> error_norm;  ///< controlled-frame error; absent before the first tick
  std::vector<std::string> active_tasks;
  std::vector<double> q;
};

StatusEvent make_status_event(const MissionRunner& runner, std::uint64_t mission_id);

/// {"type":"status", ...}
std::string to_json(const StatusEvent& event);

/// {"type":"notice","kind":...,"text":...} for rejections and diagnostics.
std::string notice_json(std::string_view kind, std::string_view text);

/// Reply to a console input: {"type":"ack"|"reject", "layer", "object", "action",
/// "sub_action", "icons", "sent"?, "error"?}.
std::string selection_json(const SelectionResult& result, std::span<const std::string> objects);

/// Greeting sent to a new subscriber: {"type":"hello","layer",...,"objects":[...]}.
std::string hello_json(const SelectionState& state, std::span<const std::string> objects);

std::string summary_json(const MissionSummary& summary);

/// Writes trajectory.csv, bounds.csv and summary.json into `dir` (created if needed).
void write_run_artifacts(const std::string& dir, const TrajectoryLog& log,
                         const MissionSummary& summary);

}  // namespace tpik
