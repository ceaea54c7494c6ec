#include "skillmaster/directive.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <stdexcept>

namespace skillmaster {

std::string_view to_string(Directive::Kind kind) {
  switch (kind) {
    case Directive::Kind::prefer_locations: return "prefer_locations";
    case Directive::Kind::hold_while: return "hold_while";
    case Directive::Kind::avoid_locations: return "avoid_locations";
  }
  return "prefer_locations";
}

Directive::Kind directive_kind_from_string(std::string_view name) {
  if (name == "prefer_locations") return Directive::Kind::prefer_locations;
  if (name == "hold_while") return Directive::Kind::hold_while;
  if (name == "avoid_locations") return Directive::Kind::avoid_locations;
  throw std::invalid_argument("unknown directive kind: " + std::string(name));
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// "a, b and c" -> {a, b, c}; tokens keep underscores.
std::vector<std::string> split_names(const std::string& list) {
  static const std::regex name_re(R"([a-z][a-z0-9_]*)");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(list.begin(), list.end(), name_re);
       it != std::sregex_iterator(); ++it) {
    const std::string tok = it->str();
    if (tok == "and" || tok == "or" || tok == "the") continue;
    if (std::find(out.begin(), out.end(), tok) == out.end()) out.push_back(tok);
  }
  return out;
}

}  // namespace

std::vector<Directive> derive_directives(std::string_view text) {
  const std::string t = lower(text);
  std::vector<Directive> out;

  static const std::regex hold_re(R"(keep holding [a-z_ ]+? while (?:you )?([a-z_]+))");
  static const std::regex prefer_re(R"(search ((?:[a-z_]+(?:, | and | or ))*[a-z_]+) first)");
  static const std::regex avoid_re(R"(avoid searching ((?:[a-z_]+(?:, | and | or ))*[a-z_]+))");

  std::smatch m;
  if (std::regex_search(t, m, hold_re)) {
    out.push_back({Directive::Kind::hold_while, {m[1].str()}});
  }
  if (std::regex_search(t, m, prefer_re)) {
    auto names = split_names(m[1].str());
    if (!names.empty()) out.push_back({Directive::Kind::prefer_locations, std::move(names)});
  }
  if (std::regex_search(t, m, avoid_re)) {
    auto names = split_names(m[1].str());
    if (!names.empty()) out.push_back({Directive::Kind::avoid_locations, std::move(names)});
  }
  return out;
}

}  // namespace skillmaster
