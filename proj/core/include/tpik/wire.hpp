#pragma once

#include <condition_variable>
#include <chrono>
#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tpik {

/// Operator command datagram. One ASCII line per datagram:
///
///   <version> <type> [<object_id> <action> <sub_action>]\n
///
/// version is the literal "1"; tokens are separated by single spaces; the
/// payload is present only for CMD. object_id matches [A-Za-z0-9_-]{1,64};
/// action is move|drink; sub_action is left|right for move and none for drink.
enum class MessageType { cmd, stop, pause, resume, home };

enum class Action { move, drink };
enum class SubAction { left, right, none };

struct MissionCommand {
  std::string object_id;
  Action action = Action::move;
  SubAction sub_action = SubAction::none;

  friend bool operator==(const MissionCommand&, const MissionCommand&) = default;
};

struct WireMessage {
  MessageType type = MessageType::stop;
  MissionCommand command;  ///< meaningful for cmd only

  static WireMessage cmd(MissionCommand c) { return {MessageType::cmd, std::move(c)}; }
  static WireMessage of(MessageType t) { return {t, {}}; }

  friend bool operator==(const WireMessage& a, const WireMessage& b) {
    return a.type == b.type && (a.type != MessageType::cmd || a.command == b.command);
  }
};

inline constexpr std::size_t kMaxDatagramBytes = 512;
inline constexpr std::string_view kWireVersion = "1";

std::string render(const WireMessage& message);

/// Parses one datagram; a single trailing "\n" is accepted. Returns nullopt
/// and fills `error` (when given) for anything outside the grammar.
std::optional<WireMessage> parse_message(std::string_view datagram, std::string* error = nullptr);

std::string_view to_string(MessageType t);
std::string_view to_string(Action a);
std::string_view to_string(SubAction s);
std::optional<Action> parse_action(std::string_view s);
std::optional<SubAction> parse_sub_action(std::string_view s);
bool valid_object_id(std::string_view id);

/// "water move right" / "water drink" / "water drink none".
std::optional<MissionCommand> parse_mission_command(std::string_view text);

/// Bounded multi-producer single-consumer queue feeding the control loop.
class CommandInbox {
 public:
  explicit CommandInbox(std::size_t capacity = 256) : capacity_(capacity) {}

  /// False when the queue is full and the message was dropped.
  bool push(WireMessage message);
  /// Everything queued so far, in arrival order.
  std::vector<WireMessage> drain();
  /// Blocks up to `timeout` for at least one message, then drains.
  std::vector<WireMessage> wait_drain(std::chrono::milliseconds timeout);
  std::size_t dropped() const;

 private:
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<WireMessage> queue_;
  std::size_t capacity_;
  std::size_t dropped_ = 0;
};

}  // namespace tpik
