#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>

#include "CLI11.hpp"
#include "tpik/chain_config.hpp"
#include "tpik/errors.hpp"
#include "tpik/gateway.hpp"
#include "tpik/mission.hpp"
#include "tpik/serve.hpp"
#include "tpik/status.hpp"
#include "tpik/trajectory_log.hpp"
#include "verify/oracle.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

constexpr unsigned short kDefaultPort = 5005;
constexpr unsigned short kDefaultStatusPort = 8765;

struct RunArgs {
  std::string chain;
  std::string world;
  std::string mission_config;
  std::string mission;
  bool listen = false;
  std::string host = "127.0.0.1";
  std::optional<unsigned short> port;
  std::optional<unsigned short> status_port;
  std::uint64_t seed = 0;
  std::string out = "out";
  double noise = 0.0;
  double duration_cap = 120.0;
  double realtime = 1.0;
  std::size_t max_missions = 0;
  bool verify_oracle = false;
  std::size_t cases = 1000;
};

unsigned short resolve_port(const std::optional<unsigned short>& flag, const char* env,
                            unsigned short fallback) {
  if (flag) return *flag;
  if (const char* v = std::getenv(env); v != nullptr && *v != '\0') {
    char* end = nullptr;
    const long p = std::strtol(v, &end, 10);
    if (*end != '\0' || p < 0 || p > 65535) {
      throw tpik::ContractViolation(std::string(env) + " is not a valid port: '" + v + "'");
    }
    return static_cast<unsigned short>(p);
  }
  return fallback;
}

/// Accepts "water move right", "water drink" and the verb-first "move water right".
std::optional<tpik::MissionCommand> parse_mission_arg(const std::string& text) {
  if (auto c = tpik::parse_mission_command(text)) return c;
  const auto space = text.find(' ');
  if (space == std::string::npos) return std::nullopt;
  const std::string verb = text.substr(0, space);
  if (!tpik::parse_action(verb)) return std::nullopt;
  std::string rest = text.substr(space + 1);
  const auto next = rest.find(' ');
  const std::string object = rest.substr(0, next);
  const std::string tail = next == std::string::npos ? "" : rest.substr(next);
  return tpik::parse_mission_command(object + " " + verb + tail);
}

int verify(const RunArgs& a) {
  const auto report = tpik::verify::verify_solver(a.cases, a.seed);
  std::cout << "oracle cases: " << report.cases << " (n_active 1/2/3: " << report.by_active[1] << "/"
            << report.by_active[2] << "/" << report.by_active[3] << ")\n"
            << "mismatches: " << report.mismatches << "\n"
            << "time: " << report.seconds << " s\n";
  for (const auto& f : report.failures) std::cout << "  " << f << "\n";
  return report.mismatches == 0 ? 0 : 1;
}

int run_scripted(const RunArgs& a, const tpik::KinematicChain& chain, tpik::WorldState world,
                 const tpik::SimConfig& sim, const tpik::MissionConfig& config) {
  const auto command = parse_mission_arg(a.mission);
  if (!command) {
    std::cerr << "error: cannot parse mission '" << a.mission
              << "' (expected e.g. \"water move right\" or \"water drink\")\n";
    return 2;
  }
  std::mt19937_64 rng(sim.seed);
  const tpik::Perception perception = tpik::perceive(world, sim, rng);
  tpik::MissionScript script =
      tpik::compile_mission(*command, world, perception, config, chain.joint_count());
  const auto result = tpik::run_mission(chain, std::move(script), std::move(world), sim, {}, config);
  tpik::write_run_artifacts(a.out, result.log, result.summary);

  std::cout << "mission: " << a.mission << "\n"
            << "status: " << tpik::to_string(result.status.state) << "\n";
  if (!result.status.fault.empty()) std::cout << "fault: " << result.status.fault << "\n";
  std::cout << "sim time: " << result.summary.sim_time << " s, ticks: " << result.summary.ticks << "\n";
  for (const auto& b : result.summary.bounds) {
    std::cout << "  " << b.task_id << ": [" << b.min_value << ", " << b.max_value
              << "] margin " << b.min_margin << ", activations " << b.activations << "\n";
  }
  std::cout << "artifacts: " << a.out << "\n";
  return result.status.state == tpik::MissionState::completed ? 0 : 1;
}

int run_listen(const RunArgs& a, const tpik::KinematicChain& chain, tpik::WorldState world,
               const tpik::SimConfig& sim, const tpik::MissionConfig& config) {
  std::filesystem::create_directories(a.out);
  std::ofstream gateway_log(std::filesystem::path(a.out) / "gateway.log");
  std::mutex log_mutex;
  auto log = [&](std::string_view line) {
    std::lock_guard lock(log_mutex);
    std::cerr << "[tpik] " << line << '\n';
    gateway_log << line << '\n';
    gateway_log.flush();
  };

  std::vector<std::string> objects;
  for (const auto& [id, object] : world.objects) {
    if (object.graspable) objects.push_back(id);
  }
  tpik::CommandInbox inbox;
  tpik::GatewayOptions options;
  options.host = a.host;
  options.udp_port = resolve_port(a.port, "TPIK_PORT", kDefaultPort);
  options.status_port = resolve_port(a.status_port, "TPIK_STATUS_PORT", kDefaultStatusPort);
  options.objects = objects;
  options.log = log;
  tpik::Gateway gateway(inbox, options);
  std::cout << "listening udp=" << gateway.udp_port() << " status=" << gateway.status_port()
            << std::endl;

  tpik::ServeOptions serve;
  serve.sim = sim;
  serve.mission = config;
  serve.out_dir = a.out;
  serve.realtime = a.realtime;
  serve.max_missions = a.max_missions;
  tpik::MissionServer server(chain, std::move(world), serve, inbox,
                             [&](std::string event) { gateway.publish(std::move(event)); }, log);
  server.run(g_stop);
  gateway.stop();
  const auto stats = gateway.receiver_stats();
  std::cout << "datagrams received " << stats.received << ", malformed " << stats.malformed
            << ", dropped " << stats.dropped << "\n";
  return 0;
}

int run(const RunArgs& a) {
  if (a.verify_oracle) return verify(a);
  if (a.listen == !a.mission.empty()) {
    std::cerr << "error: give exactly one of --mission or --listen\n";
    return 2;
  }
  const tpik::KinematicChain chain = a.chain.empty() ? tpik::reference_chain() : tpik::load_chain(a.chain);
  tpik::WorldState world =
      a.world.empty() ? tpik::default_world() : tpik::load_world(a.world, chain.joint_count());
  const tpik::MissionConfig config =
      a.mission_config.empty() ? tpik::MissionConfig{} : tpik::load_mission_config(a.mission_config);
  tpik::SimConfig sim;
  sim.seed = a.seed;
  sim.perception_noise = a.noise;
  sim.duration_cap = a.duration_cap;
  sim.validate();
  return a.listen ? run_listen(a, chain, std::move(world), sim, config)
                  : run_scripted(a, chain, std::move(world), sim, config);
}

int export_plots(const std::string& log, const std::string& out) {
  const auto report = tpik::export_plot_data(log, out);
  for (const auto& f : report.files) std::cout << f << "\n";
  std::cout << "rows: " << report.rows << "\n";
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  if (report.rows == 0) return 1;
  return report.truncated ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Set-based task-priority arm controller: missions, gateway and tools"};
  app.require_subcommand(1);

  RunArgs a;
  auto* run_cmd = app.add_subcommand("run", "Run a scripted mission, listen for operator commands, or verify the solver");
  run_cmd->add_option("--chain", a.chain, "Arm chain YAML (default: built-in 7-DOF arm)");
  run_cmd->add_option("--world", a.world, "World layout YAML (default: built-in two-bottle table)");
  run_cmd->add_option("--mission-config", a.mission_config, "Mission config YAML");
  run_cmd->add_option("--mission", a.mission, "Mission, e.g. \"water move right\" or \"water drink\"");
  run_cmd->add_flag("--listen", a.listen, "Serve the datagram gateway and status channel");
  run_cmd->add_option("--host", a.host, "Bind address in listen mode");
  run_cmd->add_option("--port", a.port, "Datagram port (env TPIK_PORT, default 5005)");
  run_cmd->add_option("--status-port", a.status_port, "WebSocket status port (env TPIK_STATUS_PORT, default 8765)");
  run_cmd->add_option("--seed", a.seed, "Random seed");
  run_cmd->add_option("--out", a.out, "Output directory");
  run_cmd->add_option("--noise", a.noise, "Perception noise half-width, meters");
  run_cmd->add_option("--duration-cap", a.duration_cap, "Simulated seconds before a mission fails");
  run_cmd->add_option("--realtime", a.realtime, "Listen mode: sim seconds per wall second (0 = unpaced)");
  run_cmd->add_option("--max-missions", a.max_missions, "Listen mode: exit after this many missions");
  run_cmd->add_flag("--verify-oracle", a.verify_oracle, "Compare the solver against the brute-force oracle");
  run_cmd->add_option("--cases", a.cases, "Number of oracle cases");

  std::string log_path;
  std::string export_out = "plots";
  auto* export_cmd = app.add_subcommand("export", "Split a trajectory CSV into per-figure files");
  export_cmd->add_option("--log", log_path, "trajectory.csv")->required();
  export_cmd->add_option("--out", export_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  try {
    if (*run_cmd) return run(a);
    return export_plots(log_path, export_out);
  } catch (const tpik::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
