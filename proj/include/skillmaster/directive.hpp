#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace skillmaster {

// Machine-readable payload of a skill. The policy never reads skill text;
// it sees directives through the feature vector.
struct Directive {
  enum class Kind { prefer_locations, hold_while, avoid_locations };

  Kind kind = Kind::prefer_locations;
  // Location names for prefer/avoid, a single operation name for hold_while.
  std::vector<std::string> args;

  friend bool operator==(const Directive&, const Directive&) = default;
};

std::string_view to_string(Directive::Kind kind);
// Throws std::invalid_argument on an unknown name.
Directive::Kind directive_kind_from_string(std::string_view name);

// Extract directives from skill prose. Recognised phrasings:
//   "keep holding <...> while [you] <op>"   -> hold_while(op)
//   "search <a>, <b> and <c> first"          -> prefer_locations(a, b, c)
//   "avoid searching <a>, <b> and <c>"       -> avoid_locations(a, b, c)
// Matching is case-insensitive; anything else yields no directive.
std::vector<Directive> derive_directives(std::string_view text);

}  // namespace skillmaster
