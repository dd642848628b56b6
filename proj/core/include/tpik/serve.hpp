#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tpik/gateway.hpp"
#include "tpik/mission.hpp"

namespace tpik {

struct ServeOptions {
  SimConfig sim;
  SolverConfig solver;
  MissionConfig mission;
  /// Each finished mission writes its artifacts to <out_dir>/mission_<k>_<command>/. Empty: none.
  std::string out_dir;
  /// Simulated seconds per wall-clock second; 0 runs ticks back to back.
  double realtime = 1.0;
  /// Return after this many missions have ended; 0 keeps serving.
  std::size_t max_missions = 0;
};

/// Listen-mode control loop. Idle until a CMD arrives, then runs that mission
/// tick by tick, draining the inbox once per tick and publishing a status
/// event after each one. CMDs that arrive while a mission is active are
/// rejected. The world carries over from one mission to the next.
class MissionServer {
 public:
  using Publish = std::function<void(std::string event)>;

  MissionServer(const KinematicChain& chain, WorldState world, ServeOptions options,
                CommandInbox& inbox, Publish publish = {}, LogSink log = {});

  /// Blocks until `stop` is set or max_missions missions have ended.
  void run(const std::atomic<bool>& stop);

  const WorldState& world() const { return world_; }
  const std::vector<MissionSummary>& finished() const { return finished_; }

 private:
  void start(const MissionCommand& command);
  void finish();
  void notice(std::string_view kind, const std::string& text);

  const KinematicChain* chain_;
  WorldState world_;
  ServeOptions options_;
  CommandInbox* inbox_;
  Publish publish_;
  LogSink log_;
  std::optional<MissionRunner> runner_;
  std::uint64_t mission_id_ = 0;
  std::vector<MissionSummary> finished_;
};

}  // namespace tpik
