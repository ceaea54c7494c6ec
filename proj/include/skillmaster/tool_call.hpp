#pragma once

#include <string>
#include <variant>

namespace skillmaster {

// Argument sets of the three skill-management tools. Field names match the
// wire-format argument keys.
struct ProposeSkill {
  std::string category;
  std::string title;
  std::string principle;
  std::string when_to_apply;
  std::string evidence;
  friend bool operator==(const ProposeSkill&, const ProposeSkill&) = default;
};

struct UpdateSkill {
  std::string skill_id;
  std::string title;
  std::string principle;
  std::string when_to_apply;
  std::string reason;
  friend bool operator==(const UpdateSkill&, const UpdateSkill&) = default;
};

struct KeepSkill {
  std::string reason;
  friend bool operator==(const KeepSkill&, const KeepSkill&) = default;
};

using ToolCall = std::variant<ProposeSkill, UpdateSkill, KeepSkill>;

enum class ToolKind { propose, update, keep };

inline ToolKind tool_kind(const ToolCall& call) {
  return static_cast<ToolKind>(call.index());
}

inline bool is_mutation(const ToolCall& call) {
  return tool_kind(call) != ToolKind::keep;
}

// Tool name as it appears in the wire payload.
const char* tool_name(ToolKind kind);

}  // namespace skillmaster
