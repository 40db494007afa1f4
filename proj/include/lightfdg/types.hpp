#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "lightfdg/errors.hpp"

namespace lightfdg {

enum class FlowClass : std::uint8_t { Mice, Elephant, Unknown };

inline std::string_view to_string(FlowClass c) {
  switch (c) {
    case FlowClass::Mice: return "MF";
    case FlowClass::Elephant: return "EF";
    case FlowClass::Unknown: return "unknown";
  }
  return "unknown";
}

inline FlowClass parse_flow_class(std::string_view s) {
  if (s == "MF" || s == "mf" || s == "mice") return FlowClass::Mice;
  if (s == "EF" || s == "ef" || s == "elephant") return FlowClass::Elephant;
  if (s == "unknown") return FlowClass::Unknown;
  throw ConfigError("unknown flow class '" + std::string(s) + "'");
}

// The two provisioned classes, in provisioning priority order.
inline constexpr FlowClass kProvisionedClasses[] = {FlowClass::Mice, FlowClass::Elephant};

inline int class_index(FlowClass c) {
  if (c == FlowClass::Unknown) throw ContractError("unknown class has no index");
  return c == FlowClass::Mice ? 0 : 1;
}

}  // namespace lightfdg
