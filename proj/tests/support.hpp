#pragma once

#include <string>
#include <vector>

#include "skillmaster/household_env.hpp"
#include "skillmaster/random.hpp"
#include "skillmaster/skill_bank.hpp"
#include "skillmaster/tool_call.hpp"

namespace testsupport {

inline std::string random_word(skillmaster::Rng& rng) {
  static const char* words[] = {"keep", "fridge", "target", "lamp", "slowly", "search", "heat", "table",
                                "first", "apple", "sink", "check", "mug", "quiet", "shelf", "\"quoted\"",
                                "back\\slash", "tab\tchar", "caf\xC3\xA9", "new\nline"};
  return words[rng.below(std::size(words))];
}

inline std::string random_text(skillmaster::Rng& rng, std::size_t min_words = 1) {
  std::string s = random_word(rng);
  const std::size_t n = min_words + rng.below(6);
  for (std::size_t i = 1; i < n; ++i) s += " " + random_word(rng);
  return s;
}

inline skillmaster::BankSchema household_schema() {
  return skillmaster::HouseholdEnv(skillmaster::EnvConfig::household_defaults()).schema();
}

// Valid bank over the household families with random text and directives.
inline skillmaster::SkillBank random_bank(skillmaster::Rng& rng) {
  using namespace skillmaster;
  const auto schema = household_schema();
  SkillBank b;
  b.version = rng.below(1000);
  const std::size_t n = rng.below(12);
  std::uint64_t next = 1 + rng.below(50);
  for (std::size_t i = 0; i < n; ++i) {
    Skill s;
    char id[32];
    std::snprintf(id, sizeof id, "sk-%06llu", static_cast<unsigned long long>(next));
    next += 1 + rng.below(3);
    s.id = id;
    const std::size_t c = rng.below(schema.families.size() + 1);
    s.category = c == schema.families.size() ? kGeneralCategory : schema.families[c];
    s.title = random_text(rng);
    s.principle = random_text(rng, 3);
    s.when_to_apply = random_text(rng, 2);
    s.evidence_or_reason = random_text(rng);
    if (rng.below(2) == 0) {
      Directive d;
      d.kind = static_cast<Directive::Kind>(rng.below(3));
      if (d.kind == Directive::Kind::hold_while) {
        d.args = {schema.operations[rng.below(schema.operations.size())]};
      } else {
        const std::size_t k = 1 + rng.below(3);
        for (std::size_t j = 0; j < k; ++j) d.args.push_back(schema.locations[rng.below(schema.locations.size())]);
      }
      s.directives.push_back(d);
    }
    s.created_at_iteration = rng.below(200);
    s.revision = rng.below(4);
    if (s.category == kGeneralCategory) {
      b.general.push_back(s);
    } else {
      b.by_category[s.category].push_back(s);
    }
  }
  return b;
}

inline skillmaster::Skill make_skill(const std::string& id, const std::string& category, std::uint64_t revision,
                                     const std::string& title = "") {
  skillmaster::Skill s;
  s.id = id;
  s.category = category;
  s.title = title.empty() ? "Title " + id : title;
  s.principle = "Principle for " + id;
  s.when_to_apply = "Whenever " + id + " applies";
  s.evidence_or_reason = "Evidence";
  s.revision = revision;
  return s;
}

inline void add_skill(skillmaster::SkillBank& b, const skillmaster::Skill& s) {
  if (s.category == skillmaster::kGeneralCategory) {
    b.general.push_back(s);
  } else {
    b.by_category[s.category].push_back(s);
  }
}

inline skillmaster::ToolCall random_call(skillmaster::Rng& rng) {
  using namespace skillmaster;
  const auto schema = household_schema();
  switch (rng.below(3)) {
    case 0: {
      const std::size_t c = rng.below(schema.families.size() + 1);
      return ProposeSkill{c == schema.families.size() ? kGeneralCategory : schema.families[c], random_text(rng),
                          random_text(rng, 3), random_text(rng, 2), random_text(rng)};
    }
    case 1: {
      char id[32];
      std::snprintf(id, sizeof id, "sk-%06llu", static_cast<unsigned long long>(rng.below(999999)));
      return UpdateSkill{id, random_text(rng), random_text(rng, 3), random_text(rng, 2), random_text(rng)};
    }
    default:
      return KeepSkill{random_text(rng)};
  }
}

}  // namespace testsupport
