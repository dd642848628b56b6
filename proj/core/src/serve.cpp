#include "tpik/serve.hpp"

#include <chrono>
#include <filesystem>
#include <thread>

#include "tpik/errors.hpp"
#include "tpik/status.hpp"

namespace tpik {

MissionServer::MissionServer(const KinematicChain& chain, WorldState world, ServeOptions options,
                             CommandInbox& inbox, Publish publish, LogSink log)
    : chain_(&chain),
      world_(std::move(world)),
      options_(std::move(options)),
      inbox_(&inbox),
      publish_(std::move(publish)),
      log_(std::move(log)) {
  options_.sim.validate();
  options_.mission.validate();
  if (!(options_.realtime >= 0.0)) throw ContractViolation("realtime factor must be >= 0");
}

void MissionServer::notice(std::string_view kind, const std::string& text) {
  if (log_) log_(std::string(kind) + ": " + text);
  if (publish_) publish_(notice_json(kind, text));
}

void MissionServer::start(const MissionCommand& command) {
  try {
    std::mt19937_64 rng(options_.sim.seed ^ (mission_id_ + 1));
    const Perception perception = perceive(world_, options_.sim, rng);
    MissionScript script =
        compile_mission(command, world_, perception, options_.mission, chain_->joint_count());
    runner_.emplace(*chain_, std::move(script), world_, options_.sim, options_.solver,
                    options_.mission);
    ++mission_id_;
    if (log_) log_("mission " + std::to_string(mission_id_) + " started");
    if (publish_) publish_(to_json(make_status_event(*runner_, mission_id_)));
  } catch (const Error& e) {
    notice("rejected", std::string("cannot start mission: ") + e.what());
  }
}

void MissionServer::finish() {
  const MissionSummary summary = runner_->summary();
  if (log_) {
    log_("mission " + std::to_string(mission_id_) + " " + std::string(to_string(summary.status.state)) +
         (summary.status.fault.empty() ? "" : ": " + summary.status.fault));
  }
  if (!options_.out_dir.empty()) {
    const MissionCommand& c = summary.command;
    std::string name = "mission_" + std::to_string(mission_id_) + "_" + c.object_id + "_" +
                       std::string(to_string(c.action));
    if (c.sub_action != SubAction::none) name += "_" + std::string(to_string(c.sub_action));
    write_run_artifacts((std::filesystem::path(options_.out_dir) / name).string(), runner_->log(),
                        summary);
  }
  world_ = runner_->world();
  if (world_.attachment) world_ = detach(world_);
  world_.arm.qdot.setZero();
  finished_.push_back(summary);
  runner_.reset();
}

void MissionServer::run(const std::atomic<bool>& stop) {
  using clock = std::chrono::steady_clock;
  const auto period = options_.realtime > 0.0
                          ? std::chrono::duration_cast<clock::duration>(
                                std::chrono::duration<double>(options_.sim.dt / options_.realtime))
                          : clock::duration::zero();
  auto next = clock::now();
  std::vector<WireMessage> carried;

  while (!stop.load()) {
    if (options_.max_missions != 0 && finished_.size() >= options_.max_missions) return;

    if (!runner_) {
      std::vector<WireMessage> batch = inbox_->wait_drain(std::chrono::milliseconds(50));
      for (const WireMessage& msg : batch) {
        if (runner_) {
          if (msg.type == MessageType::cmd) {
            notice("rejected", "mission already active; '" + msg.command.object_id + "' ignored");
          } else {
            carried.push_back(msg);
          }
        } else if (msg.type == MessageType::cmd) {
          start(msg.command);
        } else if (msg.type != MessageType::home) {
          notice("ignored", std::string(to_string(msg.type)) + " with no active mission");
        }
      }
      next = clock::now();
      continue;
    }

    std::vector<WireMessage> batch = std::move(carried);
    carried.clear();
    for (WireMessage& msg : inbox_->drain()) {
      if (msg.type == MessageType::cmd) {
        notice("rejected", "mission already active; '" + msg.command.object_id + "' ignored");
      } else {
        batch.push_back(std::move(msg));
      }
    }
    runner_->tick(batch);
    if (publish_) publish_(to_json(make_status_event(*runner_, mission_id_)));
    if (runner_->finished()) {
      finish();
      continue;
    }
    if (period > clock::duration::zero()) {
      next += period;
      std::this_thread::sleep_until(next);
    }
  }
}

}  // namespace tpik
