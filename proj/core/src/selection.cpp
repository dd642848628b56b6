#include "tpik/selection.hpp"

#include <algorithm>

namespace tpik {

namespace {

SelectionResult stay(const SelectionState& s, std::optional<WireMessage> msg = std::nullopt) {
  return {s, std::move(msg), std::nullopt};
}

SelectionResult move_to(SelectionState s, Layer layer, std::optional<WireMessage> msg = std::nullopt) {
  s.layer = layer;
  return {std::move(s), std::move(msg), std::nullopt};
}

SelectionResult rejected(const SelectionState& s, std::string_view input) {
  return {s, std::nullopt,
          "icon '" + std::string(input) + "' is not available on the " +
              std::string(to_string(s.layer)) + " layer"};
}

}  // namespace

std::string_view to_string(Layer layer) {
  switch (layer) {
    case Layer::object_selection: return "object_selection";
    case Layer::action_selection: return "action_selection";
    case Layer::subaction_selection: return "subaction_selection";
    case Layer::control_layer: return "control_layer";
  }
  return "?";
}

std::vector<std::string> available_icons(Layer layer, std::span<const std::string> objects) {
  using namespace icon;
  switch (layer) {
    case Layer::object_selection: {
      std::vector<std::string> icons(objects.begin(), objects.end());
      icons.emplace_back(pause);
      icons.emplace_back(emergency);
      return icons;
    }
    case Layer::action_selection:
      return {std::string(drink), std::string(move), std::string(back), std::string(pause),
              std::string(emergency)};
    case Layer::subaction_selection:
      return {std::string(left), std::string(right), std::string(emergency)};
    case Layer::control_layer:
      return {std::string(play), std::string(stop), std::string(home), std::string(back),
              std::string(emergency)};
  }
  return {};
}

SelectionResult select(const SelectionState& state, std::string_view input,
                       std::span<const std::string> objects) {
  // The emergency cross is reachable from every layer and never navigates.
  if (input == icon::emergency) return stay(state, WireMessage::of(MessageType::stop));

  switch (state.layer) {
    case Layer::object_selection: {
      if (input == icon::pause) return stay(state, WireMessage::of(MessageType::pause));
      if (std::find(objects.begin(), objects.end(), input) != objects.end()) {
        SelectionState next;
        next.object = std::string(input);
        return move_to(std::move(next), Layer::action_selection);
      }
      break;
    }
    case Layer::action_selection: {
      if (input == icon::drink) {
        SelectionState next = state;
        next.action = Action::drink;
        next.sub_action = SubAction::none;
        return move_to(next, Layer::control_layer,
                       WireMessage::cmd({state.object, Action::drink, SubAction::none}));
      }
      if (input == icon::move) {
        SelectionState next = state;
        next.action = Action::move;
        next.sub_action.reset();
        return move_to(next, Layer::subaction_selection);
      }
      if (input == icon::back) return move_to(SelectionState{}, Layer::object_selection);
      if (input == icon::pause) return stay(state, WireMessage::of(MessageType::pause));
      break;
    }
    case Layer::subaction_selection: {
      if (input == icon::left || input == icon::right) {
        const SubAction side = input == icon::left ? SubAction::left : SubAction::right;
        SelectionState next = state;
        next.sub_action = side;
        return move_to(next, Layer::control_layer,
                       WireMessage::cmd({state.object, Action::move, side}));
      }
      break;
    }
    case Layer::control_layer: {
      if (input == icon::play) return stay(state, WireMessage::of(MessageType::resume));
      if (input == icon::stop) return stay(state, WireMessage::of(MessageType::stop));
      if (input == icon::home) {
        return move_to(SelectionState{}, Layer::object_selection, WireMessage::of(MessageType::home));
      }
      if (input == icon::back) {
        SelectionState next = state;
        if (state.action == Action::move) {
          next.sub_action.reset();
          return move_to(next, Layer::subaction_selection);
        }
        next.action.reset();
        next.sub_action.reset();
        return move_to(next, Layer::action_selection);
      }
      break;
    }
  }
  return rejected(state, input);
}

}  // namespace tpik
