#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skillmaster/directive.hpp"
#include "skillmaster/tool_call.hpp"

namespace skillmaster {

inline constexpr const char* kGeneralCategory = "general";
inline constexpr std::size_t kDefaultRetrievalLimit = 5;

struct Skill {
  std::string id;
  std::string category;
  std::string title;
  std::string principle;
  std::string when_to_apply;
  std::string evidence_or_reason;
  std::vector<Directive> directives;
  std::uint64_t created_at_iteration = 0;
  std::uint64_t revision = 0;

  friend bool operator==(const Skill&, const Skill&) = default;
};

// Families and locations a bank may refer to. Supplied by the environment
// configuration; the bank file itself does not carry it.
struct BankSchema {
  std::vector<std::string> families;
  std::vector<std::string> locations;
  std::vector<std::string> operations;

  bool has_family(const std::string& f) const;
  bool valid_category(const std::string& c) const;
};

// Immutable-by-convention value: every mutation goes through apply_mutation
// and yields a new bank.
struct SkillBank {
  std::uint64_t version = 0;
  std::vector<Skill> general;
  std::map<std::string, std::vector<Skill>> by_category;

  std::size_t size() const;
  const Skill* find(const std::string& id) const;
  const Skill* find_by_title(const std::string& title) const;
  // All skills, general first, then categories in key order.
  std::vector<const Skill*> all() const;
  // Next id the bank would hand out ("sk-" + zero-padded counter).
  std::string next_id() const;

  friend bool operator==(const SkillBank&, const SkillBank&) = default;
};

struct BankDiff {
  enum class Kind { none, added, updated };
  Kind kind = Kind::none;
  std::optional<std::string> skill_id;
  std::optional<Skill> before;
  std::optional<Skill> after;
};

// True when the text contains a bare "...", an ellipsis character, the word
// TODO, or an angle-bracket template such as "<skill title>".
bool contains_placeholder(const std::string& text);

// Checks every invariant; throws MalformedBank naming the first violation.
// An empty schema skips category/location checks.
void check_bank(const SkillBank& bank, const BankSchema& schema);

// Canonical JSON text: sorted keys, two-space indent, trailing newline.
std::string serialize_bank(const SkillBank& bank);
SkillBank parse_bank(const std::string& text, const BankSchema& schema);

SkillBank load_bank(const std::filesystem::path& path, const BankSchema& schema = {});
void save_bank(const SkillBank& bank, const std::filesystem::path& path);

// Family skills, then general skills; each group ordered by revision
// (descending) then id (descending); truncated to limit.
std::vector<Skill> retrieve(const SkillBank& bank, const std::string& family,
                            std::size_t limit, const BankSchema& schema);

// Resolves an update target by id, falling back to an exact title match.
const Skill* resolve_update_target(const SkillBank& bank, const std::string& id_or_title);

// Pure: the input bank is never modified. Propose and update bump the
// version; keep returns an equal bank. Directives of proposed or updated
// skills are derived from their principle text.
std::pair<SkillBank, BankDiff> apply_mutation(const SkillBank& bank, const ToolCall& call,
                                              std::uint64_t iteration = 0);

// Entry-wise differences between two banks keyed by skill id.
std::vector<BankDiff> diff_banks(const SkillBank& before, const SkillBank& after);

// Keeps round(fraction * n) of the bank's skills, chosen by a seeded shuffle.
SkillBank subset_bank(const SkillBank& bank, double fraction, std::uint64_t seed);

}  // namespace skillmaster
