#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "skillmaster/skill_bank.hpp"
#include "skillmaster/tool_call.hpp"
#include "skillmaster/trajectory.hpp"

namespace skillmaster {

enum class FailureCode {
  MissingThinkTag,
  MissingToolCallTag,
  MalformedPayload,
  UnknownTool,
  MissingRequiredField,
  MultipleToolCalls,
  PlaceholderContent,
};

std::string_view to_string(FailureCode code);

struct ParseOutcome {
  // The call, or the first failure detected (tags, then payload, then fields).
  std::variant<ToolCall, FailureCode> result;
  // Every failure detected; these all count toward the format reward.
  std::vector<FailureCode> codes;
  // Byte offsets of the tool_call body, or [0, 0) when absent.
  std::size_t span_begin = 0;
  std::size_t span_end = 0;

  bool ok() const { return std::holds_alternative<ToolCall>(result); }
  const ToolCall& call() const { return std::get<ToolCall>(result); }
  FailureCode failure() const { return std::get<FailureCode>(result); }
  bool has(FailureCode code) const;
};

// <think>THINK</think><tool_call>{"name": ..., "arguments": {...}}</tool_call>
std::string render_wire(const ToolCall& call, std::string_view think = "Decide from the episode evidence.");
std::string render_payload(const ToolCall& call);

// Total: never throws.
ParseOutcome parse_tool_call(std::string_view text) noexcept;

enum class ValidationFlag { UnknownSkillId, DuplicateTitle, PlaceholderContent, UnknownCategory };
std::string_view to_string(ValidationFlag flag);

struct ValidationReport {
  std::vector<ValidationFlag> flags;
  bool has(ValidationFlag flag) const;
  // A flagged call is never applied to a bank.
  bool executable() const { return flags.empty(); }
};

// Checks the call against the bank. An empty schema skips the category check.
ValidationReport validate(const ToolCall& call, const SkillBank& bank, const BankSchema& schema = {});

namespace format_constants {
inline constexpr double kValid = 0.1;
inline constexpr double kMalformedPayload = 0.2;
inline constexpr double kUnknownTool = 0.2;
inline constexpr double kMissingTag = 0.1;
inline constexpr double kMissingRequiredField = 0.15;
inline constexpr double kPlaceholder = 0.15;
inline constexpr double kUnknownSkillId = 0.15;
inline constexpr double kMultipleToolCalls = 0.1;
}  // namespace format_constants

double format_reward(const ParseOutcome& outcome, const ValidationReport& report);

inline constexpr std::size_t kMaxTraceSteps = 40;

struct ReviewContext {
  std::string task;
  std::string family;
  std::string outcome;  // "success" or "failure"
  double episode_reward = 0.0;
  std::vector<std::string> skills;  // one rendered entry per retrieved skill
  std::vector<std::string> trace;   // rendered, capped at max_trace_steps + 1 lines
};

inline constexpr const char* kNoSkillsMarker = "(no skills retrieved)";
inline constexpr const char* kElisionMarker = "[... %zu steps omitted ...]";

ReviewContext render_review_context(const Trajectory& trajectory, std::span<const Skill> retrieved,
                                    const SkillBank& bank, std::size_t max_trace_steps = kMaxTraceSteps);
std::string render_prompt(const ReviewContext& context);

}  // namespace skillmaster
