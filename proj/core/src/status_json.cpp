#include "tpik/status.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "tpik/errors.hpp"

namespace tpik {

namespace {

using nlohmann::json;

std::string command_text(const MissionCommand& c) {
  return c.object_id + " " + std::string(to_string(c.action)) + " " +
         std::string(to_string(c.sub_action));
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json selection_fields(const SelectionState& s, std::span<const std::string> objects) {
  json j;
  j["layer"] = to_string(s.layer);
  j["object"] = s.object.empty() ? json(nullptr) : json(s.object);
  j["action"] = s.action ? json(to_string(*s.action)) : json(nullptr);
  j["sub_action"] = s.sub_action ? json(to_string(*s.sub_action)) : json(nullptr);
  j["icons"] = available_icons(s.layer, objects);
  return j;
}

}  // namespace

StatusEvent make_status_event(const MissionRunner& runner, std::uint64_t mission_id) {
  StatusEvent e;
  const MissionScript& script = runner.script();
  const MissionStatus& status = runner.status();
  e.mission_id = mission_id;
  e.command = command_text(script.command);
  e.state = std::string(to_string(status.state));
  e.phase = status.phase;
  e.phase_name = script.phases[status.phase].name;
  e.phase_count = script.phases.size();
  e.fault = status.fault;
  if (const TickRecord* r = runner.last_record()) {
    e.clock = r->time;
    e.tick = r->tick;
    e.error_norm = r->error_norm;
    for (std::size_t i = 0; i < script.hierarchy.size(); ++i) {
      if ((r->active_mask >> i) & 1U) e.active_tasks.push_back(script.hierarchy[i].id);
    }
    e.q.assign(r->q.data(), r->q.data() + r->q.size());
  } else {
    e.clock = runner.world().clock;
    e.tick = runner.world().tick;
    const Vector& q = runner.world().arm.q;
    e.q.assign(q.data(), q.data() + q.size());
  }
  return e;
}

std::string to_json(const StatusEvent& e) {
  json j;
  j["type"] = "status";
  j["mission_id"] = e.mission_id;
  j["command"] = e.command;
  j["state"] = e.state;
  j["phase"] = e.phase;
  j["phase_name"] = e.phase_name;
  j["phase_count"] = e.phase_count;
  j["fault"] = e.fault;
  j["clock"] = e.clock;
  j["tick"] = e.tick;
  j["error_norm"] = e.error_norm ? finite_or_null(*e.error_norm) : json(nullptr);
  j["active_tasks"] = e.active_tasks;
  j["q"] = e.q;
  return j.dump();
}

std::string notice_json(std::string_view kind, std::string_view text) {
  return json{{"type", "notice"}, {"kind", kind}, {"text", text}}.dump();
}

std::string selection_json(const SelectionResult& result, std::span<const std::string> objects) {
  json j = selection_fields(result.state, objects);
  j["type"] = result.error ? "reject" : "ack";
  if (result.message) {
    std::string line = render(*result.message);
    line.pop_back();
    j["sent"] = line;
  }
  if (result.error) j["error"] = *result.error;
  return j.dump();
}

std::string hello_json(const SelectionState& state, std::span<const std::string> objects) {
  json j = selection_fields(state, objects);
  j["type"] = "hello";
  j["objects"] = std::vector<std::string>(objects.begin(), objects.end());
  return j.dump();
}

std::string summary_json(const MissionSummary& s) {
  json j;
  j["command"] = command_text(s.command);
  j["status"] = to_string(s.status.state);
  j["final_phase"] = s.status.phase;
  j["fault"] = s.status.fault;
  j["sim_time"] = s.sim_time;
  j["ticks"] = s.ticks;
  json phases = json::array();
  for (std::size_t i = 0; i < s.phases.size(); ++i) {
    const PhaseTiming& p = s.phases[i];
    json pj{{"name", p.name}, {"start", p.start}};
    pj["end"] = p.end >= 0.0 ? json(p.end) : json(nullptr);
    pj["duration"] = p.end >= 0.0 ? json(p.end - p.start) : json(nullptr);
    if (i < s.phase_position_errors.size()) {
      pj["position_error"] = s.phase_position_errors[i];
      pj["orientation_error"] = s.phase_orientation_errors[i];
    }
    phases.push_back(pj);
  }
  j["phases"] = phases;
  json bounds = json::array();
  for (const BoundReport& b : s.bounds) {
    bounds.push_back({{"task", b.task_id},
                      {"lower", finite_or_null(b.lower)},
                      {"upper", finite_or_null(b.upper)},
                      {"min_value", finite_or_null(b.min_value)},
                      {"max_value", finite_or_null(b.max_value)},
                      {"min_margin", finite_or_null(b.min_margin)},
                      {"activations", b.activations},
                      {"chattering", b.chattering}});
  }
  j["bounds"] = bounds;
  j["max_active_set_tasks"] = s.max_active_set_tasks;
  j["empty_feasible_sets"] = s.empty_feasible_sets;
  return j.dump(2) + "\n";
}

void write_run_artifacts(const std::string& dir, const TrajectoryLog& log,
                         const MissionSummary& summary) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw Error("cannot write '" + (fs::path(dir) / name).string() + "'");
    return out;
  };
  {
    auto out = open("trajectory.csv");
    log.write_csv(out);
  }
  {
    auto out = open("bounds.csv");
    log.write_bounds_csv(out);
  }
  auto out = open("summary.json");
  out << summary_json(summary);
}

}  // namespace tpik
