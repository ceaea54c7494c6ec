#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "skillmaster/errors.hpp"
#include "skillmaster/skill_bank.hpp"
#include "support.hpp"

using namespace skillmaster;
using testsupport::add_skill;
using testsupport::make_skill;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "skillmaster_bank_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

const std::string kOneGeneral = R"({
  "version": 7,
  "general": [
    {"id": "s1", "category": "general", "title": "Look Around", "principle": "Scan each room once.",
     "when_to_apply": "Target unknown.", "evidence_or_reason": "seed", "directives": [],
     "created_at_iteration": 0, "revision": 0}
  ],
  "by_category": {}
})";

}  // namespace

TEST_CASE("load: minimal file keeps the stored version") {
  const auto p = temp_path("minimal.json");
  write(p, kOneGeneral);
  const SkillBank b = load_bank(p, testsupport::household_schema());
  CHECK(b.general.size() == 1);
  CHECK(b.by_category.empty());
  CHECK(b.version == 7);
  CHECK(b.general[0].id == "s1");
}

TEST_CASE("load: duplicate id is rejected") {
  std::string text = kOneGeneral;
  const std::string rec = R"({"id": "s1", "category": "heat", "title": "Other", "principle": "p",
     "when_to_apply": "w", "evidence_or_reason": "e", "directives": [], "created_at_iteration": 0, "revision": 0})";
  text.replace(text.find(R"("by_category": {})"), 17, R"("by_category": {"heat": [)" + rec + "]}");
  CHECK_THROWS_AS(parse_bank(text, testsupport::household_schema()), MalformedBank);
  try {
    parse_bank(text, {});
  } catch (const MalformedBank& e) {
    CHECK(std::string(e.what()).find("s1") != std::string::npos);
  }
}

TEST_CASE("load: unknown category, missing field and misfiled skill are rejected") {
  const auto schema = testsupport::household_schema();
  std::string unknown = kOneGeneral;
  unknown.replace(unknown.find(R"("by_category": {})"), 17,
                  R"("by_category": {"juggle": [{"id": "s2", "category": "juggle", "title": "T", "principle": "p",
                     "when_to_apply": "w", "evidence_or_reason": "e", "directives": [],
                     "created_at_iteration": 0, "revision": 0}]})");
  CHECK_THROWS_AS(parse_bank(unknown, schema), MalformedBank);

  std::string missing = kOneGeneral;
  missing.replace(missing.find(R"("when_to_apply": "Target unknown.", )"), 35, "");
  CHECK_THROWS_AS(parse_bank(missing, schema), MalformedBank);

  std::string misfiled = kOneGeneral;
  misfiled.replace(misfiled.find(R"("category": "general")"), 21, R"("category": "heat")");
  CHECK_THROWS_AS(parse_bank(misfiled, schema), MalformedBank);

  CHECK_THROWS_AS(parse_bank("{not json", schema), MalformedBank);
}

TEST_CASE("save/load round trip is byte-identical on random banks") {
  Rng rng(20240611);
  const auto schema = testsupport::household_schema();
  for (int i = 0; i < 50; ++i) {
    const SkillBank b = testsupport::random_bank(rng);
    const auto p = temp_path("rt.json");
    save_bank(b, p);
    const std::string first = slurp(p);
    const SkillBank loaded = load_bank(p, schema);
    CHECK(loaded == b);
    save_bank(loaded, p);
    CHECK(slurp(p) == first);
  }
}

TEST_CASE("canonical bytes: equal banks built in different orders serialize identically") {
  SkillBank a;
  add_skill(a, make_skill("sk-000001", "heat", 0));
  add_skill(a, make_skill("sk-000002", "general", 1));
  SkillBank b;
  add_skill(b, make_skill("sk-000002", "general", 1));
  add_skill(b, make_skill("sk-000001", "heat", 0));
  REQUIRE(a == b);
  CHECK(serialize_bank(a) == serialize_bank(b));

  const std::string empty = serialize_bank(SkillBank{});
  CHECK(empty == "{\n  \"by_category\": {},\n  \"general\": [],\n  \"version\": 0\n}\n");
}

TEST_CASE("retrieve matches an independent ordering oracle") {
  const auto schema = testsupport::household_schema();
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const SkillBank b = testsupport::random_bank(rng);
    const std::string family = schema.families[rng.below(schema.families.size())];
    const std::size_t limit = 1 + rng.below(8);

    // Oracle: family group before general, then revision desc, then id desc.
    std::vector<Skill> pool;
    for (const Skill* s : b.all()) {
      if (s->category == family || s->category == kGeneralCategory) pool.push_back(*s);
    }
    std::sort(pool.begin(), pool.end(), [&](const Skill& x, const Skill& y) {
      const int gx = x.category == family ? 0 : 1;
      const int gy = y.category == family ? 0 : 1;
      if (gx != gy) return gx < gy;
      if (x.revision != y.revision) return x.revision > y.revision;
      return x.id > y.id;
    });
    if (pool.size() > limit) pool.resize(limit);

    const auto got = retrieve(b, family, limit, schema);
    REQUIRE(got.size() == pool.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].id == pool[i].id);
    CHECK(retrieve(b, family, limit, schema) == got);
  }
}

TEST_CASE("retrieve examples") {
  const auto schema = testsupport::household_schema();
  CHECK(retrieve(SkillBank{}, "heat", 5, schema).empty());

  SkillBank b;
  add_skill(b, make_skill("sk-000001", "general", 0));
  add_skill(b, make_skill("sk-000002", "general", 2));
  add_skill(b, make_skill("sk-000003", "general", 1));
  add_skill(b, make_skill("sk-000004", "heat", 0));
  add_skill(b, make_skill("sk-000005", "heat", 3));
  add_skill(b, make_skill("sk-000006", "cool", 9));
  const auto r = retrieve(b, "heat", 5, schema);
  REQUIRE(r.size() == 5);
  CHECK(r[0].id == "sk-000005");
  CHECK(r[1].id == "sk-000004");
  CHECK(r[2].id == "sk-000002");
  CHECK(r[3].id == "sk-000003");
  CHECK(r[4].id == "sk-000001");

  const auto one = retrieve(b, "heat", 1, schema);
  REQUIRE(one.size() == 1);
  CHECK(one[0].id == "sk-000005");

  CHECK_THROWS_AS(retrieve(b, "juggle", 5, schema), UnknownFamily);
}

TEST_CASE("apply_mutation: keep, propose, update") {
  SkillBank b;
  add_skill(b, make_skill("sk-000003", "heat", 0, "Open Then Heat"));
  add_skill(b, make_skill("sk-000007", "general", 2));
  b.version = 4;

  const auto [kept, kd] = apply_mutation(b, KeepSkill{"covered"});
  CHECK(kept == b);
  CHECK(kd.kind == BankDiff::Kind::none);
  CHECK_FALSE(kd.before.has_value());
  CHECK_FALSE(kd.after.has_value());

  const ProposeSkill p{"cool", "Cool While Holding Target",
                       "Keep holding the target while you cool it at the fridge.", "Cooling tasks.", "Three failures."};
  const auto [proposed, pd] = apply_mutation(b, p, 12);
  CHECK(proposed.size() == b.size() + 1);
  CHECK(proposed.version == 5);
  CHECK(pd.kind == BankDiff::Kind::added);
  REQUIRE(pd.after.has_value());
  CHECK(pd.after->id == "sk-000008");
  CHECK(pd.after->revision == 0);
  CHECK(pd.after->created_at_iteration == 12);
  REQUIRE(pd.after->directives.size() == 1);
  CHECK(pd.after->directives[0].kind == Directive::Kind::hold_while);
  CHECK(pd.after->directives[0].args == std::vector<std::string>{"cool"});

  const UpdateSkill u{"sk-000003", "Heat While Holding Target", "Keep holding the target while you heat it.",
                      "Heating tasks.", "Placing it first failed."};
  const auto [updated, ud] = apply_mutation(b, u);
  CHECK(updated.size() == b.size());
  CHECK(updated.version == 5);
  CHECK(ud.kind == BankDiff::Kind::updated);
  const Skill* s = updated.find("sk-000003");
  REQUIRE(s != nullptr);
  CHECK(s->revision == 1);
  CHECK(s->title == "Heat While Holding Target");
  CHECK(s->category == "heat");
  CHECK(ud.before->title == "Open Then Heat");

  // Title fallback for the update target.
  const UpdateSkill by_title{"Open Then Heat", "Heat Held", "Keep holding the target while you heat it.", "w", "r"};
  CHECK(apply_mutation(b, by_title).first.find("sk-000003")->title == "Heat Held");

  CHECK_THROWS_AS(apply_mutation(b, UpdateSkill{"s7", "t", "p", "w", "r"}), UnknownSkillId);
}

TEST_CASE("apply_mutation is pure and never removes skills") {
  Rng rng(5);
  const auto schema = testsupport::household_schema();
  for (int trial = 0; trial < 100; ++trial) {
    const SkillBank b = testsupport::random_bank(rng);
    const SkillBank snapshot = b;
    ToolCall call;
    const auto all = b.all();
    if (!all.empty() && rng.below(2) == 0) {
      call = UpdateSkill{all[rng.below(all.size())]->id, "New Title", "Some principle", "When", "Reason"};
    } else {
      call = ProposeSkill{schema.families[rng.below(schema.families.size())], "Fresh Title", "Some principle",
                          "When", "Evidence"};
    }
    const auto first = apply_mutation(b, call);
    const auto second = apply_mutation(b, call);
    CHECK(b == snapshot);
    CHECK(first.first == second.first);
    CHECK(first.first.version == b.version + 1);
    CHECK(first.first.size() == b.size() + (tool_kind(call) == ToolKind::propose ? 1 : 0));
    for (const Skill* s : b.all()) CHECK(first.first.find(s->id) != nullptr);
    CHECK(apply_mutation(b, KeepSkill{"r"}).first == b);
  }
}

TEST_CASE("next id follows the highest existing counter") {
  SkillBank b;
  CHECK(b.next_id() == "sk-000001");
  add_skill(b, make_skill("sk-000041", "general", 0));
  add_skill(b, make_skill("legacy", "general", 0));
  CHECK(b.next_id() == "sk-000042");
}

TEST_CASE("placeholder detection") {
  CHECK(contains_placeholder("..."));
  CHECK(contains_placeholder("do this ... then that"));
  CHECK(contains_placeholder("TODO fill in"));
  CHECK(contains_placeholder("<skill title>"));
  CHECK(contains_placeholder("wait\xE2\x80\xA6"));
  CHECK_FALSE(contains_placeholder("Heat the mug, then deliver it."));
  CHECK_FALSE(contains_placeholder("e.g. the fridge"));
}

TEST_CASE("diff_banks reports added and updated entries") {
  SkillBank a;
  add_skill(a, make_skill("sk-000001", "heat", 0));
  SkillBank b = a;
  b.by_category["heat"][0].revision = 1;
  b.by_category["heat"][0].title = "Changed";
  add_skill(b, make_skill("sk-000002", "general", 0));
  const auto d = diff_banks(a, b);
  REQUIRE(d.size() == 2);
  int added = 0, updated = 0;
  for (const auto& e : d) {
    added += e.kind == BankDiff::Kind::added;
    updated += e.kind == BankDiff::Kind::updated;
  }
  CHECK(added == 1);
  CHECK(updated == 1);
  CHECK(diff_banks(a, a).empty());
}

TEST_CASE("subset_bank keeps a rounded, seeded fraction") {
  SkillBank b;
  for (int i = 1; i <= 6; ++i) add_skill(b, make_skill("sk-00000" + std::to_string(i), i % 2 ? "general" : "heat", 0));
  CHECK(subset_bank(b, 0.0, 3).size() == 0);
  CHECK(subset_bank(b, 1.0, 3).size() == 6);
  CHECK(subset_bank(b, 0.5, 3).size() == 3);
  CHECK(subset_bank(b, 0.5, 3) == subset_bank(b, 0.5, 3));
}

TEST_CASE("shipped seed bank files parse and validate") {
  const auto dir = std::filesystem::path(SKILLMASTER_SOURCE_DIR) / "data";
  const SkillBank h = load_bank(dir / "household_seed_bank.json", testsupport::household_schema());
  CHECK(h.size() == 6);
  CHECK(h.version == 0);
}
