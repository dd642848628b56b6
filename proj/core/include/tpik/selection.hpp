#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tpik/wire.hpp"

namespace tpik {

/// Layered operator menu: pick an object, then an action, then (for move) a
/// side, ending on the control layer where the running mission is steered.
enum class Layer { object_selection, action_selection, subaction_selection, control_layer };

namespace icon {
inline constexpr std::string_view pause = "pause";
inline constexpr std::string_view emergency = "emergency";
inline constexpr std::string_view drink = "drink";
inline constexpr std::string_view move = "move";
inline constexpr std::string_view back = "back";
inline constexpr std::string_view left = "left";
inline constexpr std::string_view right = "right";
inline constexpr std::string_view play = "play";
inline constexpr std::string_view stop = "stop";
inline constexpr std::string_view home = "home";
}  // namespace icon

struct SelectionState {
  Layer layer = Layer::object_selection;
  std::string object;
  std::optional<Action> action;
  std::optional<SubAction> sub_action;

  friend bool operator==(const SelectionState&, const SelectionState&) = default;
};

struct SelectionResult {
  SelectionState state;
  std::optional<WireMessage> message;
  /// Set when the icon is not valid for the layer; `state` is then unchanged.
  std::optional<std::string> error;
};

/// Applies one icon activation. `objects` lists the selectable object ids.
SelectionResult select(const SelectionState& state, std::string_view input,
                       std::span<const std::string> objects);

/// Icons accepted on a layer, in display order (objects first on the object layer).
std::vector<std::string> available_icons(Layer layer, std::span<const std::string> objects);

std::string_view to_string(Layer layer);

}  // namespace tpik
