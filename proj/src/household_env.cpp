#include "skillmaster/household_env.hpp"

#include <algorithm>
#include <set>

#include "skillmaster/errors.hpp"
#include "skillmaster/random.hpp"

namespace skillmaster {

namespace {

const std::vector<std::string> kDistractors = {"spatula", "towel", "remote", "candle",
                                               "soap", "fork", "knife", "newspaper"};

const std::set<std::string> kKnownFamilies = {"pick", "look", "clean", "heat", "cool", "pick2"};

enum Phase { kSearch, kFetch, kProcess, kDeliver };

}  // namespace

HouseholdEnv::HouseholdEnv(EnvConfig config) : Environment(std::move(config)) {
  for (const auto& f : config_.families) {
    if (!kKnownFamilies.contains(f)) throw ConfigError("household env has no rules for family " + f);
  }
  for (const char* name : {"countertop", "fridge", "microwave", "sink", "cabinet", "drawer", "desk", "shelf"}) {
    location_index(name);  // throws if missing
  }
  food_zones_ = {location_index("fridge"), location_index("countertop"), location_index("sink")};
  storage_ = {location_index("cabinet"), location_index("drawer"), location_index("shelf"),
              location_index("countertop"), location_index("desk")};
  stations_ = {location_index("sink"), location_index("microwave"), location_index("fridge"),
               location_index("desk")};
  // Default sweep: storage furniture first, appliances and food zones last.
  for (const char* name : {"cabinet", "drawer", "shelf", "desk", "countertop", "sink", "fridge", "microwave"}) {
    sweep_order_.push_back(location_index(name));
  }
  for (std::size_t l = 0; l < locations(); ++l) {
    if (std::find(sweep_order_.begin(), sweep_order_.end(), l) == sweep_order_.end()) {
      sweep_order_.push_back(l);
    }
  }

  const std::size_t L = locations();
  const std::size_t O = kOperations.size();
  layout_.global = 0;
  layout_.search = layout_.global + 3;
  layout_.fetch = layout_.search + 1 + 3 * L;
  layout_.process = layout_.fetch + 1 + 2 * L + 1 + O + 2;
  layout_.deliver = layout_.process + 1 + L + O + 3;
  layout_.total = layout_.deliver + 1 + 2 * L + 2;
}

Action HouseholdEnv::decode(std::size_t a) const {
  const std::size_t L = locations();
  if (a < L) return {Action::Verb::go_to, static_cast<int>(a)};
  if (a == L) return {Action::Verb::take, -1};
  if (a == L + 1) return {Action::Verb::put, -1};
  if (a < L + 6) return {Action::Verb::operate, static_cast<int>(a - L - 2)};
  if (a == L + 6) return {Action::Verb::examine, -1};
  return {Action::Verb::done, -1};
}

std::string HouseholdEnv::action_label(std::size_t a) const {
  const Action act = decode(a);
  switch (act.verb) {
    case Action::Verb::go_to: return "go to " + config_.locations[static_cast<std::size_t>(act.arg)];
    case Action::Verb::take: return "take target";
    case Action::Verb::put: return "put held object";
    case Action::Verb::operate: return kOperations[static_cast<std::size_t>(act.arg)];
    case Action::Verb::examine: return "examine";
    default: return "done";
  }
}

std::size_t HouseholdEnv::station_of(std::size_t op) const { return stations_.at(op); }

std::size_t HouseholdEnv::default_rank(std::size_t location) const {
  return static_cast<std::size_t>(std::find(sweep_order_.begin(), sweep_order_.end(), location) -
                                  sweep_order_.begin());
}

int HouseholdEnv::op_index(const std::string& family) const {
  if (family == "clean") return 0;
  if (family == "heat") return 1;
  if (family == "cool") return 2;
  if (family == "look") return 3;
  return -1;
}

std::optional<std::string> HouseholdEnv::operation_for(const std::string& family) const {
  const int op = op_index(family);
  if (op < 0) return std::nullopt;
  return kOperations[static_cast<std::size_t>(op)];
}

std::vector<std::string> HouseholdEnv::search_prior(const std::string& family) const {
  if (family == "heat" || family == "cool") {
    std::vector<std::string> out;
    for (auto l : food_zones_) out.push_back(config_.locations[l]);
    return out;
  }
  return {};
}

HouseholdEnv::World HouseholdEnv::generate(const std::string& family, std::uint64_t world_seed) const {
  Rng rng(derive_seed(world_seed, fnv1a64(family)));
  const auto fi = config_.family_index(family);
  World w;
  std::vector<std::string> objects = config_.objects[fi];
  rng.shuffle(std::span<std::string>(objects));
  const std::size_t n_targets = family == "pick2" ? 2 : 1;
  if (objects.size() < n_targets) throw ConfigError("not enough objects for family " + family);
  w.targets.assign(objects.begin(), objects.begin() + static_cast<std::ptrdiff_t>(n_targets));

  std::vector<std::size_t> zones;
  if (family == "heat" || family == "cool") {
    zones = food_zones_;
  } else if (family == "look" || family == "clean") {
    zones = {location_index("cabinet"), location_index("drawer"), location_index("shelf"),
             location_index("countertop")};
  } else {
    zones = storage_;
  }
  rng.shuffle(std::span<std::size_t>(zones));
  w.sources.assign(zones.begin(), zones.begin() + static_cast<std::ptrdiff_t>(n_targets));

  const int op = op_index(family);
  if (family == "look") {
    w.destination = station_of(3);
  } else {
    std::vector<std::size_t> dests;
    for (std::size_t l = 0; l < locations(); ++l) {
      if (l == location_index("microwave")) continue;
      if (op >= 0 && l == station_of(static_cast<std::size_t>(op))) continue;
      if (std::find(w.sources.begin(), w.sources.end(), l) != w.sources.end()) continue;
      dests.push_back(l);
    }
    w.destination = dests[rng.below(dests.size())];
  }
  w.start = rng.below(locations());
  for (int i = 0; i < 3; ++i) {
    w.distractors.emplace_back(kDistractors[rng.below(kDistractors.size())],
                               static_cast<int>(rng.below(locations())));
  }
  return w;
}

TaskSpec HouseholdEnv::make_task(const std::string& family, std::uint64_t world_seed) const {
  const World w = generate(family, world_seed);
  TaskSpec spec;
  spec.task_id = family + "-" + std::to_string(world_seed);
  spec.family = family;
  spec.target_objects = w.targets;
  spec.destination = config_.locations[w.destination];
  spec.world_seed = world_seed;
  return spec;
}

std::string HouseholdEnv::describe(const TaskSpec& spec) const {
  const auto& t = spec.target_objects;
  if (spec.family == "look") return "examine the " + t[0] + " under the desk lamp";
  if (spec.family == "pick2") return "put two objects (" + t[0] + ", " + t[1] + ") in the " + spec.destination;
  if (spec.family == "pick") return "put the " + t[0] + " in the " + spec.destination;
  return spec.family + " the " + t[0] + " and put it in the " + spec.destination;
}

EnvState HouseholdEnv::reset(const TaskSpec& spec) const {
  const World w = generate(spec.family, spec.world_seed);
  EnvState s;
  s.spec = spec;
  s.location = w.start;
  s.visited.assign(locations(), 0);
  s.visited[w.start] = 1;
  HouseholdWorld hw;
  for (std::size_t i = 0; i < w.targets.size(); ++i) {
    HouseholdWorld::Target t;
    t.name = w.targets[i];
    t.location = static_cast<int>(w.sources[i]);
    if (w.sources[i] == w.start) t.known_location = t.location;
    hw.targets.push_back(t);
  }
  hw.distractors = w.distractors;
  s.world = std::move(hw);
  return s;
}

bool HouseholdEnv::goal_reached(const EnvState& state) const {
  const auto& hw = std::get<HouseholdWorld>(state.world);
  if (state.spec.family == "look") return hw.looked;
  return std::all_of(hw.targets.begin(), hw.targets.end(),
                     [](const auto& t) { return t.delivered; });
}

StepTrace HouseholdEnv::advance(EnvState& s, std::size_t a) const {
  if (s.done) throw StepAfterDone();
  if (a >= num_actions()) throw std::out_of_range("action index out of range");
  auto& hw = std::get<HouseholdWorld>(s.world);
  const int op = op_index(s.spec.family);
  const std::size_t dest = location_index(s.spec.destination);
  const Action act = decode(a);

  StepTrace tr;
  tr.action = a;
  tr.label = action_label(a);
  Effect effect = Effect::nothing_happens;

  auto pending_here = [&]() -> int {
    for (std::size_t i = 0; i < hw.targets.size(); ++i) {
      const auto& t = hw.targets[i];
      if (!t.delivered && t.location == static_cast<int>(s.location)) return static_cast<int>(i);
    }
    return -1;
  };

  switch (act.verb) {
    case Action::Verb::go_to: {
      const auto to = static_cast<std::size_t>(act.arg);
      if (to != s.location) {
        s.location = to;
        s.visited[to] = 1;
        effect = Effect::ok;
      }
      break;
    }
    case Action::Verb::take: {
      const int i = pending_here();
      if (hw.holding < 0 && i >= 0) {
        hw.holding = i;
        hw.targets[static_cast<std::size_t>(i)].location = -1;
        hw.consecutive_gated_failures = 0;
        effect = Effect::ok;
      }
      break;
    }
    case Action::Verb::put: {
      if (hw.holding >= 0) {
        auto& t = hw.targets[static_cast<std::size_t>(hw.holding)];
        t.location = static_cast<int>(s.location);
        if (s.location == dest && s.spec.family != "look" && (op < 0 || t.processed)) {
          t.delivered = true;
        }
        hw.holding = -1;
        effect = Effect::ok;
      }
      break;
    }
    case Action::Verb::operate: {
      const auto requested = static_cast<std::size_t>(act.arg);
      if (op >= 0 && requested == static_cast<std::size_t>(op) &&
          s.location == station_of(requested)) {
        if (hw.holding >= 0) {
          auto& t = hw.targets[static_cast<std::size_t>(hw.holding)];
          if (!t.processed && !hw.station_jammed) {
            t.processed = true;
            if (s.spec.family == "look") hw.looked = true;
            effect = Effect::ok;
          }
        } else {
          tr.gated_failure = true;
          s.operation_failed = true;
          if (++hw.consecutive_gated_failures >= kJamThreshold) hw.station_jammed = true;
        }
      }
      break;
    }
    case Action::Verb::examine:
      effect = Effect::ok;
      break;
    default:
      s.done = true;
      effect = Effect::ok;
      break;
  }

  // Whatever is at the current location is now known to the agent.
  for (auto& t : hw.targets) {
    if (t.delivered || t.location < 0) {
      t.known_location = -1;
    } else if (t.location == static_cast<int>(s.location)) {
      t.known_location = t.location;
    }
  }

  ++s.step_index;
  s.last_effect = effect;
  if (goal_reached(s)) {
    s.success = true;
    s.reward_paid = true;
    s.done = true;
  } else if (s.step_index >= config_.max_steps) {
    s.done = true;
  }

  tr.effect = effect;
  tr.location = s.location;
  tr.holding_target = hw.holding >= 0;
  tr.target_seen = std::any_of(hw.targets.begin(), hw.targets.end(),
                               [](const auto& t) { return t.known_location >= 0; }) ||
                   hw.holding >= 0;
  return tr;
}

Observation HouseholdEnv::observe(const EnvState& s) const {
  const auto& hw = std::get<HouseholdWorld>(s.world);
  const int op = op_index(s.spec.family);
  Observation o;
  o.location = s.location;
  o.step_index = s.step_index;
  o.last_effect = s.last_effect;
  o.visited = s.visited;
  o.target_seen.assign(locations(), 0);
  o.destination = location_index(s.spec.destination);
  o.operation_failed = s.operation_failed;
  for (const auto& t : hw.targets) {
    if (t.delivered) ++o.delivered;
    if (t.location == static_cast<int>(s.location)) o.visible_objects.push_back(t.name);
    if (t.known_location >= 0) o.target_seen[static_cast<std::size_t>(t.known_location)] = 1;
    if (!t.delivered && t.location == static_cast<int>(s.location)) {
      o.target_here = true;
      if (op >= 0 && !t.processed && s.location == station_of(static_cast<std::size_t>(op))) {
        o.target_at_station = true;
      }
    }
  }
  for (const auto& [name, loc] : hw.distractors) {
    if (loc == static_cast<int>(s.location)) o.visible_objects.push_back(name);
  }
  if (hw.holding >= 0) {
    const auto& t = hw.targets[static_cast<std::size_t>(hw.holding)];
    o.holding = t.name;
    o.holding_target = true;
    o.target_processed = t.processed;
  }
  return o;
}

Eigen::VectorXd HouseholdEnv::featurize(const Observation& obs, std::span<const Skill> retrieved,
                                        const std::string& family) const {
  const std::size_t L = locations();
  const std::size_t O = kOperations.size();
  const int op = op_index(family);
  const DirectiveSignals sig = directive_signals(retrieved, family);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout_.total));
  auto set = [&](std::size_t i, double v) { f[static_cast<Eigen::Index>(i)] = v; };

  const bool nh = obs.last_effect == Effect::nothing_happens;
  set(layout_.global + 0, 1.0);
  set(layout_.global + 1, static_cast<double>(obs.step_index) / config_.max_steps);
  set(layout_.global + 2, nh ? 1.0 : 0.0);

  const bool any_seen = std::any_of(obs.target_seen.begin(), obs.target_seen.end(),
                                    [](auto v) { return v != 0; });
  const bool needs_op = op >= 0;
  const std::size_t station = needs_op ? station_of(static_cast<std::size_t>(op)) : L;
  Phase phase = kSearch;
  if (obs.holding_target) {
    phase = (needs_op && !obs.target_processed) ? kProcess : kDeliver;
  } else if (any_seen) {
    phase = kFetch;
  }

  switch (phase) {
    case kSearch: {
      const std::size_t b = layout_.search;
      set(b, 1.0);
      set(b + 1 + obs.location, 1.0);
      for (std::size_t l = 0; l < L; ++l) {
        set(b + 1 + L + l, obs.visited[l]);
        set(b + 1 + 2 * L + l, sig.location_bias[l]);
      }
      break;
    }
    case kFetch: {
      const std::size_t b = layout_.fetch;
      set(b, 1.0);
      set(b + 1 + obs.location, 1.0);
      for (std::size_t l = 0; l < L; ++l) set(b + 1 + L + l, obs.target_seen[l]);
      const std::size_t s = b + 1 + 2 * L;
      set(s, obs.target_here ? 1.0 : 0.0);
      if (obs.target_at_station) {
        set(s + 1 + static_cast<std::size_t>(op), 1.0);
        if (sig.hold_gate) set(s + 1 + O, 1.0);
        if (obs.operation_failed) set(s + 2 + O, 1.0);
      }
      break;
    }
    case kProcess: {
      const std::size_t b = layout_.process;
      set(b, 1.0);
      set(b + 1 + obs.location, 1.0);
      set(b + 1 + L + static_cast<std::size_t>(op), 1.0);
      const std::size_t s = b + 1 + L + O;
      if (obs.location == station) {
        set(s, 1.0);
        if (sig.hold_gate) set(s + 1, 1.0);
        if (obs.operation_failed) set(s + 2, 1.0);
      }
      break;
    }
    case kDeliver: {
      const std::size_t b = layout_.deliver;
      set(b, 1.0);
      set(b + 1 + obs.location, 1.0);
      set(b + 1 + L + obs.destination, 1.0);
      set(b + 1 + 2 * L, obs.location == obs.destination ? 1.0 : 0.0);
      set(b + 2 + 2 * L, static_cast<double>(obs.delivered));
      break;
    }
  }
  return f;
}

std::size_t HouseholdEnv::oracle_action(const EnvState& s, const DirectiveSignals& sig) const {
  const auto& hw = std::get<HouseholdWorld>(s.world);
  const Observation obs = observe(s);
  const int op = op_index(s.spec.family);
  const std::size_t dest = location_index(s.spec.destination);

  if (obs.holding_target) {
    if (op >= 0 && !obs.target_processed) {
      const std::size_t station = station_of(static_cast<std::size_t>(op));
      if (s.location != station) return goto_action(station);
      if (sig.hold_gate || s.operation_failed) return operate_action(static_cast<std::size_t>(op));
      return put_action();
    }
    return s.location == dest ? put_action() : goto_action(dest);
  }
  if (obs.target_here) {
    if (obs.target_at_station && !sig.hold_gate && hw.consecutive_gated_failures < 3) {
      return operate_action(static_cast<std::size_t>(op));
    }
    return take_action();
  }
  for (std::size_t l = 0; l < locations(); ++l) {
    if (obs.target_seen[l]) return goto_action(l);
  }
  std::optional<std::size_t> best;
  for (std::size_t l = 0; l < locations(); ++l) {
    if (s.visited[l] || l == s.location) continue;
    if (!best) {
      best = l;
      continue;
    }
    const double bl = sig.location_bias[l], bb = sig.location_bias[*best];
    if (bl > bb || (bl == bb && default_rank(l) < default_rank(*best))) best = l;
  }
  return best ? goto_action(*best) : examine_action();
}

SkillTemplate HouseholdEnv::hold_template(const std::string& family) const {
  const int op = op_index(family);
  if (op < 0) throw ProgrammingError("family " + family + " has no operation");
  const std::string station = config_.locations[station_of(static_cast<std::size_t>(op))];
  if (family == "look") {
    return {"Examine While Holding Target",
            "Keep holding the target while you toggle the desk lamp; a target set down on the desk is not examined.",
            "Any task that asks you to examine an object under the lamp.",
            "Toggling the lamp did nothing while the target sat on the desk."};
  }
  std::string title = family;
  title[0] = static_cast<char>(std::toupper(title[0]));
  return {title + " While Holding Target",
          "Keep holding the target while you " + family + " it at the " + station +
              "; placing it inside the " + station + " first makes the " + family + " action do nothing.",
          "Any task that requires you to " + family + " an object.",
          "Repeated " + family + " attempts did nothing while the target sat in the " + station + "."};
}

SkillTemplate HouseholdEnv::search_template(const std::string& family) const {
  const auto zones = search_prior(family);
  if (zones.empty()) throw ProgrammingError("family " + family + " has no search prior");
  std::string list;
  for (std::size_t i = 0; i < zones.size(); ++i) {
    if (i > 0) list += (i + 1 == zones.size()) ? " and " : ", ";
    list += zones[i];
  }
  return {"Search Food Zones First",
          "Search " + list + " first; food items are rarely stored anywhere else.",
          "Looking for a food item to " + family + ".",
          "Several storage locations were swept before the food target turned up."};
}

}  // namespace skillmaster
