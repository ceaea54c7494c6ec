#include "skillmaster/tool_protocol.hpp"

#include <algorithm>
#include <cstdio>

#include "json.hpp"

#include "skillmaster/kv_config.hpp"

namespace skillmaster {

using nlohmann::json;

const char* tool_name(ToolKind kind) {
  switch (kind) {
    case ToolKind::propose: return "propose_skill";
    case ToolKind::update: return "update_skill";
    case ToolKind::keep: return "keep_skill";
  }
  return "keep_skill";
}

std::string_view to_string(FailureCode code) {
  switch (code) {
    case FailureCode::MissingThinkTag: return "MissingThinkTag";
    case FailureCode::MissingToolCallTag: return "MissingToolCallTag";
    case FailureCode::MalformedPayload: return "MalformedPayload";
    case FailureCode::UnknownTool: return "UnknownTool";
    case FailureCode::MissingRequiredField: return "MissingRequiredField";
    case FailureCode::MultipleToolCalls: return "MultipleToolCalls";
    case FailureCode::PlaceholderContent: return "PlaceholderContent";
  }
  return "MalformedPayload";
}

std::string_view to_string(ValidationFlag flag) {
  switch (flag) {
    case ValidationFlag::UnknownSkillId: return "UnknownSkillId";
    case ValidationFlag::DuplicateTitle: return "DuplicateTitle";
    case ValidationFlag::PlaceholderContent: return "PlaceholderContent";
    case ValidationFlag::UnknownCategory: return "UnknownCategory";
  }
  return "UnknownSkillId";
}

bool ParseOutcome::has(FailureCode code) const {
  return std::find(codes.begin(), codes.end(), code) != codes.end();
}

bool ValidationReport::has(ValidationFlag flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

namespace {

// (key, member) pairs in schema order.
template <typename F>
void for_each_field(const ToolCall& call, F&& f) {
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ProposeSkill>) {
          f("category", c.category);
          f("title", c.title);
          f("principle", c.principle);
          f("when_to_apply", c.when_to_apply);
          f("evidence", c.evidence);
        } else if constexpr (std::is_same_v<T, UpdateSkill>) {
          f("skill_id", c.skill_id);
          f("title", c.title);
          f("principle", c.principle);
          f("when_to_apply", c.when_to_apply);
          f("reason", c.reason);
        } else {
          f("reason", c.reason);
        }
      },
      call);
}

template <typename F>
void for_each_field(ToolCall& call, F&& f) {
  std::visit(
      [&](auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ProposeSkill>) {
          f("category", c.category);
          f("title", c.title);
          f("principle", c.principle);
          f("when_to_apply", c.when_to_apply);
          f("evidence", c.evidence);
        } else if constexpr (std::is_same_v<T, UpdateSkill>) {
          f("skill_id", c.skill_id);
          f("title", c.title);
          f("principle", c.principle);
          f("when_to_apply", c.when_to_apply);
          f("reason", c.reason);
        } else {
          f("reason", c.reason);
        }
      },
      call);
}

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

std::string render_payload(const ToolCall& call) {
  json args = json::object();
  for_each_field(call, [&](const char* key, const std::string& v) { args[key] = v; });
  json payload = {{"name", tool_name(tool_kind(call))}, {"arguments", args}};
  return payload.dump();
}

std::string render_wire(const ToolCall& call, std::string_view think) {
  return "<think>" + std::string(think) + "</think><tool_call>" + render_payload(call) + "</tool_call>";
}

ParseOutcome parse_tool_call(std::string_view text) noexcept {
  ParseOutcome out;
  out.result = FailureCode::MalformedPayload;
  try {
    auto fail = [&](FailureCode c) {
      if (!out.has(c)) out.codes.push_back(c);
    };

    const auto think_open = text.find("<think>");
    const auto think_close = text.find("</think>");
    if (think_open == std::string_view::npos || think_close == std::string_view::npos ||
        think_close < think_open) {
      fail(FailureCode::MissingThinkTag);
    }

    static constexpr std::string_view kOpen = "<tool_call>";
    static constexpr std::string_view kClose = "</tool_call>";
    const auto open = text.find(kOpen);
    const auto close = open == std::string_view::npos ? std::string_view::npos : text.find(kClose, open);
    std::optional<ToolCall> call;
    if (open == std::string_view::npos || close == std::string_view::npos) {
      fail(FailureCode::MissingToolCallTag);
    } else {
      if (count_occurrences(text, kOpen) > 1) fail(FailureCode::MultipleToolCalls);
      out.span_begin = open + kOpen.size();
      out.span_end = close;
      const std::string body(text.substr(out.span_begin, out.span_end - out.span_begin));
      const json payload = json::parse(body, nullptr, /*allow_exceptions=*/false);
      if (payload.is_discarded() || !payload.is_object() || !payload.contains("name") ||
          !payload["name"].is_string() || !payload.contains("arguments") ||
          !payload["arguments"].is_object()) {
        fail(FailureCode::MalformedPayload);
      } else {
        const std::string name = payload["name"].get<std::string>();
        if (name == tool_name(ToolKind::propose)) {
          call = ProposeSkill{};
        } else if (name == tool_name(ToolKind::update)) {
          call = UpdateSkill{};
        } else if (name == tool_name(ToolKind::keep)) {
          call = KeepSkill{};
        } else {
          fail(FailureCode::UnknownTool);
        }
        if (call) {
          const json& args = payload["arguments"];
          bool placeholder = false;
          for_each_field(*call, [&](const char* key, std::string& v) {
            const auto it = args.find(key);
            if (it == args.end() || !it->is_string() || trim(it->get<std::string>()).empty()) {
              fail(FailureCode::MissingRequiredField);
              return;
            }
            v = it->get<std::string>();
            if (contains_placeholder(v)) placeholder = true;
          });
          if (placeholder) fail(FailureCode::PlaceholderContent);
        }
      }
    }

    // Report the first code in tag -> payload -> field order.
    static constexpr FailureCode kOrder[] = {
        FailureCode::MissingThinkTag,  FailureCode::MissingToolCallTag,   FailureCode::MultipleToolCalls,
        FailureCode::MalformedPayload, FailureCode::UnknownTool,          FailureCode::MissingRequiredField,
        FailureCode::PlaceholderContent,
    };
    for (auto c : kOrder) {
      if (out.has(c)) {
        out.result = c;
        return out;
      }
    }
    out.result = std::move(*call);
  } catch (...) {
    out.codes = {FailureCode::MalformedPayload};
    out.result = FailureCode::MalformedPayload;
  }
  return out;
}

ValidationReport validate(const ToolCall& call, const SkillBank& bank, const BankSchema& schema) {
  ValidationReport report;
  auto flag = [&](ValidationFlag f) {
    if (!report.has(f)) report.flags.push_back(f);
  };
  bool placeholder = false;
  for_each_field(call, [&](const char*, const std::string& v) {
    if (contains_placeholder(v)) placeholder = true;
  });
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ProposeSkill>) {
          if (bank.find_by_title(c.title) != nullptr) flag(ValidationFlag::DuplicateTitle);
          if (!schema.families.empty() && !schema.valid_category(c.category)) {
            flag(ValidationFlag::UnknownCategory);
          }
        } else if constexpr (std::is_same_v<T, UpdateSkill>) {
          if (resolve_update_target(bank, c.skill_id) == nullptr) flag(ValidationFlag::UnknownSkillId);
        }
      },
      call);
  if (placeholder) flag(ValidationFlag::PlaceholderContent);
  return report;
}

double format_reward(const ParseOutcome& outcome, const ValidationReport& report) {
  namespace k = format_constants;
  if (outcome.ok()) {
    double r = k::kValid;
    if (report.has(ValidationFlag::UnknownSkillId)) r -= k::kUnknownSkillId;
    if (report.has(ValidationFlag::PlaceholderContent)) r -= k::kPlaceholder;
    return r;
  }
  // Failures share three slots (tags, payload schema, content); each slot
  // charges its largest applicable penalty.
  double tag = 0.0, schema = 0.0, content = 0.0;
  for (auto c : outcome.codes) {
    switch (c) {
      case FailureCode::MissingThinkTag:
      case FailureCode::MissingToolCallTag: tag = std::max(tag, k::kMissingTag); break;
      case FailureCode::MultipleToolCalls: tag = std::max(tag, k::kMultipleToolCalls); break;
      case FailureCode::MalformedPayload: schema = std::max(schema, k::kMalformedPayload); break;
      case FailureCode::UnknownTool: schema = std::max(schema, k::kUnknownTool); break;
      case FailureCode::MissingRequiredField: schema = std::max(schema, k::kMissingRequiredField); break;
      case FailureCode::PlaceholderContent: content = std::max(content, k::kPlaceholder); break;
    }
  }
  return -(tag + schema + content);
}

namespace {

std::string render_skill(const Skill& s) {
  return "[" + s.id + "] " + s.title + " (" + s.category + ", rev " + std::to_string(s.revision) +
         ")\n    principle: " + s.principle + "\n    when: " + s.when_to_apply;
}

std::string render_step(std::size_t i, const StepTrace& t) {
  return "step " + std::to_string(i + 1) + ": " + t.label + " -> " +
         (t.effect == Effect::ok ? "ok" : "nothing happens");
}

}  // namespace

ReviewContext render_review_context(const Trajectory& trajectory, std::span<const Skill> retrieved,
                                    const SkillBank& bank, std::size_t max_trace_steps) {
  ReviewContext ctx;
  ctx.task = trajectory.description.empty() ? trajectory.task.task_id : trajectory.description;
  ctx.family = trajectory.task.family;
  ctx.outcome = trajectory.success ? "success" : "failure";
  ctx.episode_reward = trajectory.r_env;
  for (const auto& s : retrieved) {
    // Prefer the bank's current copy so ids and revisions are up to date.
    const Skill* live = bank.find(s.id);
    ctx.skills.push_back(render_skill(live ? *live : s));
  }
  if (ctx.skills.empty()) ctx.skills.push_back(kNoSkillsMarker);

  const auto& tr = trajectory.trace;
  if (tr.size() <= max_trace_steps) {
    for (std::size_t i = 0; i < tr.size(); ++i) ctx.trace.push_back(render_step(i, tr[i]));
  } else {
    const std::size_t head = max_trace_steps / 2;
    const std::size_t tail = max_trace_steps - head;
    for (std::size_t i = 0; i < head; ++i) ctx.trace.push_back(render_step(i, tr[i]));
    char buf[64];
    std::snprintf(buf, sizeof buf, kElisionMarker, tr.size() - head - tail);
    ctx.trace.emplace_back(buf);
    for (std::size_t i = tr.size() - tail; i < tr.size(); ++i) ctx.trace.push_back(render_step(i, tr[i]));
  }
  return ctx;
}

std::string render_prompt(const ReviewContext& c) {
  std::string out;
  out += "Review the finished episode and emit one skill-management tool call.\n";
  out += "Tools: propose_skill, update_skill, keep_skill. Think briefly first.\n\n";
  out += "Task: " + c.task + "\n";
  out += "Category: " + c.family + "\n";
  out += "Outcome: " + c.outcome + "\n";
  char reward[32];
  std::snprintf(reward, sizeof reward, "%.1f", c.episode_reward);
  out += "Reward: " + std::string(reward) + "\n\nSkills:\n";
  for (const auto& s : c.skills) out += "  " + s + "\n";
  out += "\nTrajectory:\n";
  for (const auto& s : c.trace) out += "  " + s + "\n";
  out += "End of trajectory.\n";
  return out;
}

}  // namespace skillmaster
