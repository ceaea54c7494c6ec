#include "skillmaster/skill_bank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "json.hpp"

#include "skillmaster/errors.hpp"
#include "skillmaster/random.hpp"

namespace skillmaster {

using nlohmann::json;

bool BankSchema::has_family(const std::string& f) const {
  return std::find(families.begin(), families.end(), f) != families.end();
}

bool BankSchema::valid_category(const std::string& c) const {
  return c == kGeneralCategory || has_family(c);
}

std::size_t SkillBank::size() const {
  std::size_t n = general.size();
  for (const auto& [_, list] : by_category) n += list.size();
  return n;
}

std::vector<const Skill*> SkillBank::all() const {
  std::vector<const Skill*> out;
  for (const auto& s : general) out.push_back(&s);
  for (const auto& [_, list] : by_category)
    for (const auto& s : list) out.push_back(&s);
  return out;
}

const Skill* SkillBank::find(const std::string& id) const {
  for (const Skill* s : all())
    if (s->id == id) return s;
  return nullptr;
}

const Skill* SkillBank::find_by_title(const std::string& title) const {
  for (const Skill* s : all())
    if (s->title == title) return s;
  return nullptr;
}

std::string SkillBank::next_id() const {
  static const std::regex id_re(R"(sk-(\d+))");
  std::uint64_t max_seen = 0;
  for (const Skill* s : all()) {
    std::smatch m;
    if (std::regex_match(s->id, m, id_re)) {
      max_seen = std::max<std::uint64_t>(max_seen, std::stoull(m[1].str()));
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "sk-%06llu", static_cast<unsigned long long>(max_seen + 1));
  return buf;
}

bool contains_placeholder(const std::string& text) {
  static const std::regex bare_ellipsis(R"((^|\s)\.\.\.(\s|$))");
  static const std::regex todo(R"(\bTODO\b)");
  static const std::regex angle(R"(<[^<>]*>)");
  return std::regex_search(text, bare_ellipsis) || std::regex_search(text, todo) ||
         std::regex_search(text, angle) || text.find("\xE2\x80\xA6") != std::string::npos;
}

namespace {

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

void check_skill(const Skill& s, const BankSchema& schema) {
  if (blank(s.id)) throw MalformedBank("skill with empty id");
  if (blank(s.title) || blank(s.principle) || blank(s.when_to_apply)) {
    throw MalformedBank("skill " + s.id + " has an empty text field");
  }
  if (contains_placeholder(s.title) || contains_placeholder(s.principle) ||
      contains_placeholder(s.when_to_apply)) {
    throw MalformedBank("skill " + s.id + " contains placeholder text");
  }
  if (!schema.families.empty() && !schema.valid_category(s.category)) {
    throw MalformedBank("skill " + s.id + " has unknown category " + s.category);
  }
  for (const auto& d : s.directives) {
    if (d.args.empty()) throw MalformedBank("skill " + s.id + " has a directive without args");
    const auto& pool =
        d.kind == Directive::Kind::hold_while ? schema.operations : schema.locations;
    if (pool.empty()) continue;
    for (const auto& a : d.args) {
      if (std::find(pool.begin(), pool.end(), a) == pool.end()) {
        throw MalformedBank("skill " + s.id + " directive argument not in config: " + a);
      }
    }
  }
}

json directive_to_json(const Directive& d) {
  return json{{"kind", std::string(to_string(d.kind))}, {"args", d.args}};
}

json skill_to_json(const Skill& s) {
  json dirs = json::array();
  for (const auto& d : s.directives) dirs.push_back(directive_to_json(d));
  return json{{"id", s.id},
              {"category", s.category},
              {"title", s.title},
              {"principle", s.principle},
              {"when_to_apply", s.when_to_apply},
              {"evidence_or_reason", s.evidence_or_reason},
              {"directives", dirs},
              {"created_at_iteration", s.created_at_iteration},
              {"revision", s.revision}};
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw MalformedBank(where + " missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw MalformedBank(where + " field '" + key + "' has the wrong type");
  }
}

Skill skill_from_json(const json& j) {
  if (!j.is_object()) throw MalformedBank("skill record is not an object");
  static const std::set<std::string> keys = {
      "id", "category", "title", "principle", "when_to_apply",
      "evidence_or_reason", "directives", "created_at_iteration", "revision"};
  for (const auto& [k, _] : j.items()) {
    if (!keys.contains(k)) throw MalformedBank("unexpected skill field '" + k + "'");
  }
  Skill s;
  s.id = field<std::string>(j, "id", "skill");
  const std::string where = "skill " + s.id;
  s.category = field<std::string>(j, "category", where);
  s.title = field<std::string>(j, "title", where);
  s.principle = field<std::string>(j, "principle", where);
  s.when_to_apply = field<std::string>(j, "when_to_apply", where);
  s.evidence_or_reason = field<std::string>(j, "evidence_or_reason", where);
  s.created_at_iteration = field<std::uint64_t>(j, "created_at_iteration", where);
  s.revision = field<std::uint64_t>(j, "revision", where);
  const json dirs = field<json>(j, "directives", where);
  if (!dirs.is_array()) throw MalformedBank(where + " directives is not an array");
  for (const auto& d : dirs) {
    Directive dir;
    try {
      dir.kind = directive_kind_from_string(field<std::string>(d, "kind", where));
    } catch (const std::invalid_argument& e) {
      throw MalformedBank(where + ": " + e.what());
    }
    dir.args = field<std::vector<std::string>>(d, "args", where);
    s.directives.push_back(std::move(dir));
  }
  return s;
}

bool retrieval_before(const Skill& a, const Skill& b) {
  if (a.revision != b.revision) return a.revision > b.revision;
  return a.id > b.id;
}

std::vector<Skill>& list_for(SkillBank& bank, const std::string& category) {
  return category == kGeneralCategory ? bank.general : bank.by_category[category];
}

Skill* find_mut(SkillBank& bank, const std::string& id) {
  for (auto& s : bank.general)
    if (s.id == id) return &s;
  for (auto& [_, list] : bank.by_category)
    for (auto& s : list)
      if (s.id == id) return &s;
  return nullptr;
}

}  // namespace

void check_bank(const SkillBank& bank, const BankSchema& schema) {
  std::set<std::string> ids;
  auto visit = [&](const Skill& s, const std::string& list_category) {
    check_skill(s, schema);
    if (!ids.insert(s.id).second) throw MalformedBank("duplicate skill id " + s.id);
    if (s.category != list_category) {
      throw MalformedBank("skill " + s.id + " stored under '" + list_category +
                          "' but has category '" + s.category + "'");
    }
  };
  for (const auto& s : bank.general) visit(s, kGeneralCategory);
  for (const auto& [cat, list] : bank.by_category) {
    if (cat == kGeneralCategory) throw MalformedBank("'general' used as a category key");
    for (const auto& s : list) visit(s, cat);
  }
}

std::string serialize_bank(const SkillBank& bank) {
  json general = json::array();
  for (const auto& s : bank.general) general.push_back(skill_to_json(s));
  json cats = json::object();
  for (const auto& [cat, list] : bank.by_category) {
    if (list.empty()) continue;
    json arr = json::array();
    for (const auto& s : list) arr.push_back(skill_to_json(s));
    cats[cat] = std::move(arr);
  }
  json doc = {{"version", bank.version}, {"general", general}, {"by_category", cats}};
  return doc.dump(2) + "\n";
}

SkillBank parse_bank(const std::string& text, const BankSchema& schema) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MalformedBank(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw MalformedBank("top level is not an object");
  for (const auto& [k, _] : doc.items()) {
    if (k != "version" && k != "general" && k != "by_category") {
      throw MalformedBank("unexpected top-level field '" + k + "'");
    }
  }
  SkillBank bank;
  bank.version = field<std::uint64_t>(doc, "version", "bank");
  const json general = field<json>(doc, "general", "bank");
  const json cats = field<json>(doc, "by_category", "bank");
  if (!general.is_array()) throw MalformedBank("'general' is not an array");
  if (!cats.is_object()) throw MalformedBank("'by_category' is not an object");
  for (const auto& j : general) bank.general.push_back(skill_from_json(j));
  for (const auto& [cat, arr] : cats.items()) {
    if (!arr.is_array()) throw MalformedBank("category '" + cat + "' is not an array");
    auto& list = bank.by_category[cat];
    for (const auto& j : arr) list.push_back(skill_from_json(j));
  }
  check_bank(bank, schema);
  return bank;
}

SkillBank load_bank(const std::filesystem::path& path, const BankSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedBank("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_bank(buf.str(), schema);
}

void save_bank(const SkillBank& bank, const std::filesystem::path& path) {
  const std::string text = serialize_bank(bank);
  // Write-then-rename so a crash never leaves a truncated bank behind.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<Skill> retrieve(const SkillBank& bank, const std::string& family,
                            std::size_t limit, const BankSchema& schema) {
  if (!schema.has_family(family)) throw UnknownFamily(family);
  std::vector<Skill> fam;
  if (auto it = bank.by_category.find(family); it != bank.by_category.end()) fam = it->second;
  std::vector<Skill> gen = bank.general;
  std::stable_sort(fam.begin(), fam.end(), retrieval_before);
  std::stable_sort(gen.begin(), gen.end(), retrieval_before);
  std::vector<Skill> out;
  for (auto* group : {&fam, &gen}) {
    for (auto& s : *group) {
      if (out.size() >= limit) return out;
      out.push_back(std::move(s));
    }
  }
  return out;
}

const Skill* resolve_update_target(const SkillBank& bank, const std::string& id_or_title) {
  if (const Skill* s = bank.find(id_or_title)) return s;
  return bank.find_by_title(id_or_title);
}

std::pair<SkillBank, BankDiff> apply_mutation(const SkillBank& bank, const ToolCall& call,
                                              std::uint64_t iteration) {
  SkillBank out = bank;
  BankDiff diff;
  if (const auto* p = std::get_if<ProposeSkill>(&call)) {
    Skill s;
    s.id = bank.next_id();
    s.category = p->category;
    s.title = p->title;
    s.principle = p->principle;
    s.when_to_apply = p->when_to_apply;
    s.evidence_or_reason = p->evidence;
    s.directives = derive_directives(p->principle);
    s.created_at_iteration = iteration;
    s.revision = 0;
    list_for(out, s.category).push_back(s);
    ++out.version;
    diff.kind = BankDiff::Kind::added;
    diff.skill_id = s.id;
    diff.after = std::move(s);
  } else if (const auto* u = std::get_if<UpdateSkill>(&call)) {
    const Skill* target = resolve_update_target(bank, u->skill_id);
    if (target == nullptr) throw UnknownSkillId(u->skill_id);
    Skill* s = find_mut(out, target->id);
    diff.before = *s;
    s->title = u->title;
    s->principle = u->principle;
    s->when_to_apply = u->when_to_apply;
    s->evidence_or_reason = u->reason;
    s->directives = derive_directives(u->principle);
    s->revision += 1;
    ++out.version;
    diff.kind = BankDiff::Kind::updated;
    diff.skill_id = s->id;
    diff.after = *s;
  }
  return {std::move(out), std::move(diff)};
}

std::vector<BankDiff> diff_banks(const SkillBank& before, const SkillBank& after) {
  std::vector<BankDiff> out;
  for (const Skill* s : after.all()) {
    const Skill* old = before.find(s->id);
    if (old == nullptr) {
      out.push_back({BankDiff::Kind::added, s->id, std::nullopt, *s});
    } else if (!(*old == *s)) {
      out.push_back({BankDiff::Kind::updated, s->id, *old, *s});
    }
  }
  return out;
}

SkillBank subset_bank(const SkillBank& bank, double fraction, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const Skill* s : bank.all()) ids.push_back(s->id);
  const auto keep_n = static_cast<std::size_t>(
      std::llround(std::clamp(fraction, 0.0, 1.0) * static_cast<double>(ids.size())));
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(ids));
  std::set<std::string> keep(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(keep_n));
  SkillBank out;
  out.version = bank.version;
  for (const auto& s : bank.general)
    if (keep.contains(s.id)) out.general.push_back(s);
  for (const auto& [cat, list] : bank.by_category)
    for (const auto& s : list)
      if (keep.contains(s.id)) out.by_category[cat].push_back(s);
  return out;
}

}  // namespace skillmaster
