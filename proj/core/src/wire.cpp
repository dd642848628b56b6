#include "tpik/wire.hpp"

#include <algorithm>

namespace tpik {

namespace {

std::vector<std::string_view> split_single_spaces(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(' ', start);
    tokens.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return tokens;
}

std::optional<WireMessage> reject(std::string* error, std::string what) {
  if (error != nullptr) *error = std::move(what);
  return std::nullopt;
}

std::optional<MessageType> parse_type(std::string_view s) {
  if (s == "CMD") return MessageType::cmd;
  if (s == "STOP") return MessageType::stop;
  if (s == "PAUSE") return MessageType::pause;
  if (s == "RESUME") return MessageType::resume;
  if (s == "HOME") return MessageType::home;
  return std::nullopt;
}

bool consistent(Action a, SubAction s) {
  return a == Action::drink ? s == SubAction::none : s != SubAction::none;
}

}  // namespace

std::string_view to_string(MessageType t) {
  switch (t) {
    case MessageType::cmd: return "CMD";
    case MessageType::stop: return "STOP";
    case MessageType::pause: return "PAUSE";
    case MessageType::resume: return "RESUME";
    case MessageType::home: return "HOME";
  }
  return "?";
}

std::string_view to_string(Action a) { return a == Action::move ? "move" : "drink"; }

std::string_view to_string(SubAction s) {
  switch (s) {
    case SubAction::left: return "left";
    case SubAction::right: return "right";
    case SubAction::none: return "none";
  }
  return "?";
}

std::optional<Action> parse_action(std::string_view s) {
  if (s == "move") return Action::move;
  if (s == "drink") return Action::drink;
  return std::nullopt;
}

std::optional<SubAction> parse_sub_action(std::string_view s) {
  if (s == "left") return SubAction::left;
  if (s == "right") return SubAction::right;
  if (s == "none") return SubAction::none;
  return std::nullopt;
}

bool valid_object_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-';
  });
}

std::string render(const WireMessage& message) {
  std::string out(kWireVersion);
  out += ' ';
  out += to_string(message.type);
  if (message.type == MessageType::cmd) {
    out += ' ';
    out += message.command.object_id;
    out += ' ';
    out += to_string(message.command.action);
    out += ' ';
    out += to_string(message.command.sub_action);
  }
  out += '\n';
  return out;
}

std::optional<WireMessage> parse_message(std::string_view datagram, std::string* error) {
  if (datagram.size() > kMaxDatagramBytes) return reject(error, "datagram exceeds 512 bytes");
  if (!datagram.empty() && datagram.back() == '\n') datagram.remove_suffix(1);
  if (datagram.empty()) return reject(error, "empty datagram");
  for (char c : datagram) {
    if (c < 0x20 || c > 0x7e) return reject(error, "non-printable byte in datagram");
  }
  const auto tokens = split_single_spaces(datagram);
  if (tokens.size() < 2) return reject(error, "missing message type");
  if (tokens[0] != kWireVersion) return reject(error, "unsupported version");
  const auto type = parse_type(tokens[1]);
  if (!type) return reject(error, "unknown message type");
  if (*type != MessageType::cmd) {
    if (tokens.size() != 2) return reject(error, "unexpected payload");
    return WireMessage::of(*type);
  }
  if (tokens.size() != 5) return reject(error, "CMD needs object, action and sub-action");
  if (!valid_object_id(tokens[2])) return reject(error, "invalid object id");
  const auto action = parse_action(tokens[3]);
  const auto sub = parse_sub_action(tokens[4]);
  if (!action || !sub) return reject(error, "invalid action or sub-action");
  if (!consistent(*action, *sub)) return reject(error, "sub-action does not fit the action");
  return WireMessage::cmd({std::string(tokens[2]), *action, *sub});
}

std::optional<MissionCommand> parse_mission_command(std::string_view text) {
  const auto tokens = split_single_spaces(text);
  if (tokens.size() < 2 || tokens.size() > 3) return std::nullopt;
  if (!valid_object_id(tokens[0])) return std::nullopt;
  const auto action = parse_action(tokens[1]);
  if (!action) return std::nullopt;
  SubAction sub = SubAction::none;
  if (tokens.size() == 3) {
    const auto parsed = parse_sub_action(tokens[2]);
    if (!parsed) return std::nullopt;
    sub = *parsed;
  }
  if (!consistent(*action, sub)) return std::nullopt;
  return MissionCommand{std::string(tokens[0]), *action, sub};
}

bool CommandInbox::push(WireMessage message) {
  {
    std::lock_guard lock(mutex_);
    if (queue_.size() >= capacity_) {
      ++dropped_;
      return false;
    }
    queue_.push_back(std::move(message));
  }
  ready_.notify_one();
  return true;
}

std::vector<WireMessage> CommandInbox::drain() {
  std::lock_guard lock(mutex_);
  std::vector<WireMessage> out(std::make_move_iterator(queue_.begin()),
                               std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

std::vector<WireMessage> CommandInbox::wait_drain(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  ready_.wait_for(lock, timeout, [this] { return !queue_.empty(); });
  std::vector<WireMessage> out(std::make_move_iterator(queue_.begin()),
                               std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

std::size_t CommandInbox::dropped() const {
  std::lock_guard lock(mutex_);
  return dropped_;
}

}  // namespace tpik
