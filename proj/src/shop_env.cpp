#include "skillmaster/shop_env.hpp"

#include <algorithm>
#include <map>

#include "skillmaster/errors.hpp"
#include "skillmaster/random.hpp"

namespace skillmaster {

namespace {

const std::map<std::string, std::string> kQueryFor = {
    {"apparel", "attribute"}, {"footwear", "attribute"}, {"electronics", "brand"},
    {"accessories", "category"}, {"home_decor", "category"}, {"beauty", "brand"},
    {"health", "attribute"},
};

const std::vector<std::string> kOptionNames = {"standard", "large", "travel"};

enum Phase { kSearch, kFetch, kProcess, kDeliver };

}  // namespace

ShopEnv::ShopEnv(EnvConfig config) : Environment(std::move(config)) {
  if (config_.locations.size() < 2) throw ConfigError("shop env needs a home page and at least one query kind");
  for (const auto& f : config_.families) effective_query(f);
  const std::size_t L = config_.locations.size();
  search_ = 3;
  fetch_ = search_ + 1 + 3 * L;
  process_ = fetch_ + 1 + 2 * L + 1 + kSlots;
  deliver_ = process_ + 1 + kOptions + 2;
  total_ = deliver_ + 1;
}

std::size_t ShopEnv::effective_query(const std::string& family) const {
  const auto it = kQueryFor.find(family);
  if (it != kQueryFor.end()) {
    const auto loc = std::find(config_.locations.begin(), config_.locations.end(), it->second);
    if (loc != config_.locations.end()) return static_cast<std::size_t>(loc - config_.locations.begin());
  }
  // Unlisted categories: spread over the query kinds by family index.
  return 1 + config_.family_index(family) % queries();
}

Action ShopEnv::decode(std::size_t a) const {
  const std::size_t Q = queries();
  if (a < Q) return {Action::Verb::search, static_cast<int>(a)};
  if (a < Q + kSlots) return {Action::Verb::open, static_cast<int>(a - Q)};
  if (a < Q + kSlots + kOptions) return {Action::Verb::select, static_cast<int>(a - Q - kSlots)};
  return {Action::Verb::buy, -1};
}

std::string ShopEnv::action_label(std::size_t a) const {
  const Action act = decode(a);
  switch (act.verb) {
    case Action::Verb::search: return "search by " + config_.locations[static_cast<std::size_t>(act.arg) + 1];
    case Action::Verb::open: return "open result " + std::to_string(act.arg);
    case Action::Verb::select: return "select " + kOptionNames[static_cast<std::size_t>(act.arg)];
    default: return "buy";
  }
}

std::vector<std::string> ShopEnv::search_prior(const std::string& family) const {
  return {config_.locations[effective_query(family)]};
}

TaskSpec ShopEnv::make_task(const std::string& family, std::uint64_t world_seed) const {
  Rng rng(derive_seed(world_seed, fnv1a64(family)));
  const auto& objects = config_.objects[config_.family_index(family)];
  TaskSpec spec;
  spec.task_id = family + "-" + std::to_string(world_seed);
  spec.family = family;
  spec.target_objects = {objects[rng.below(objects.size())]};
  spec.destination = "checkout";
  spec.world_seed = world_seed;
  return spec;
}

std::string ShopEnv::describe(const TaskSpec& spec) const {
  return "buy a " + spec.target_objects.front() + " (" + spec.family + ")";
}

EnvState ShopEnv::reset(const TaskSpec& spec) const {
  // Same stream as make_task: the first draw picked the item.
  Rng rng(derive_seed(spec.world_seed, fnv1a64(spec.family)));
  rng.below(config_.objects[config_.family_index(spec.family)].size());
  EnvState s;
  s.spec = spec;
  s.location = 0;
  s.visited.assign(config_.locations.size(), 0);
  s.visited[0] = 1;
  ShopWorld w;
  w.effective_query = static_cast<int>(effective_query(spec.family));
  w.target_slot = static_cast<int>(rng.below(kSlots));
  w.required_option = static_cast<int>(rng.below(kOptions));
  s.world = w;
  return s;
}

bool ShopEnv::goal_reached(const EnvState& s) const {
  const auto& w = std::get<ShopWorld>(s.world);
  return w.purchased && w.purchase_matches;
}

StepTrace ShopEnv::advance(EnvState& s, std::size_t a) const {
  if (s.done) throw StepAfterDone();
  if (a >= num_actions()) throw std::out_of_range("action index out of range");
  auto& w = std::get<ShopWorld>(s.world);
  const Action act = decode(a);
  StepTrace tr;
  tr.action = a;
  tr.label = action_label(a);
  Effect effect = Effect::nothing_happens;

  switch (act.verb) {
    case Action::Verb::search: {
      s.location = static_cast<std::size_t>(act.arg) + 1;
      s.visited[s.location] = 1;
      w.product_open = false;
      w.selected_option = -1;
      effect = Effect::ok;
      break;
    }
    case Action::Verb::open: {
      if (static_cast<int>(s.location) == w.effective_query && act.arg == w.target_slot) {
        w.product_open = true;
        w.selected_option = 0;
        effect = Effect::ok;
      }
      break;
    }
    case Action::Verb::select: {
      if (w.product_open) {
        w.selected_option = act.arg;
        effect = Effect::ok;
      }
      break;
    }
    default: {
      if (w.product_open) {
        if (w.selected_option == w.required_option) {
          w.purchased = true;
          w.purchase_matches = true;
          effect = Effect::ok;
        } else {
          tr.gated_failure = true;
          s.operation_failed = true;
        }
      }
      break;
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
  tr.holding_target = w.product_open;
  tr.target_seen = s.visited[static_cast<std::size_t>(w.effective_query)] != 0;
  return tr;
}

Observation ShopEnv::observe(const EnvState& s) const {
  const auto& w = std::get<ShopWorld>(s.world);
  const auto q = static_cast<std::size_t>(w.effective_query);
  Observation o;
  o.location = s.location;
  o.step_index = s.step_index;
  o.last_effect = s.last_effect;
  o.visited = s.visited;
  o.target_seen.assign(config_.locations.size(), 0);
  if (s.visited[q]) o.target_seen[q] = 1;
  o.operation_failed = s.operation_failed;
  o.target_here = s.location == q && !w.product_open;
  if (o.target_here) {
    o.target_slot = w.target_slot;
    o.visible_objects.push_back(s.spec.target_objects.front());
  }
  if (w.product_open) {
    o.holding = s.spec.target_objects.front();
    o.holding_target = true;
    o.target_processed = w.selected_option == w.required_option;
  }
  // The product page states which option the order needs.
  o.destination = static_cast<std::size_t>(w.required_option);
  o.delivered = w.purchased ? 1 : 0;
  return o;
}

Eigen::VectorXd ShopEnv::featurize(const Observation& obs, std::span<const Skill> retrieved,
                                   const std::string& family) const {
  const std::size_t L = config_.locations.size();
  const DirectiveSignals sig = directive_signals(retrieved, family);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total_));
  auto set = [&](std::size_t i, double v) { f[static_cast<Eigen::Index>(i)] = v; };
  set(0, 1.0);
  set(1, static_cast<double>(obs.step_index) / config_.max_steps);
  set(2, obs.last_effect == Effect::nothing_happens ? 1.0 : 0.0);

  const bool any_seen = std::any_of(obs.target_seen.begin(), obs.target_seen.end(),
                                    [](auto v) { return v != 0; });
  Phase phase = kSearch;
  if (obs.holding_target) {
    phase = obs.target_processed ? kDeliver : kProcess;
  } else if (any_seen) {
    phase = kFetch;
  }
  switch (phase) {
    case kSearch:
      set(search_, 1.0);
      set(search_ + 1 + obs.location, 1.0);
      for (std::size_t l = 0; l < L; ++l) {
        set(search_ + 1 + L + l, obs.visited[l]);
        set(search_ + 1 + 2 * L + l, sig.location_bias[l]);
      }
      break;
    case kFetch:
      set(fetch_, 1.0);
      set(fetch_ + 1 + obs.location, 1.0);
      for (std::size_t l = 0; l < L; ++l) set(fetch_ + 1 + L + l, obs.target_seen[l]);
      set(fetch_ + 1 + 2 * L, obs.target_here ? 1.0 : 0.0);
      if (obs.target_slot >= 0) set(fetch_ + 2 + 2 * L + static_cast<std::size_t>(obs.target_slot), 1.0);
      break;
    case kProcess:
      set(process_, 1.0);
      set(process_ + 1 + obs.destination, 1.0);
      if (sig.hold_gate) set(process_ + 1 + kOptions, 1.0);
      if (obs.operation_failed) set(process_ + 2 + kOptions, 1.0);
      break;
    case kDeliver:
      set(deliver_, 1.0);
      break;
  }
  return f;
}

std::size_t ShopEnv::oracle_action(const EnvState& s, const DirectiveSignals& sig) const {
  const Observation obs = observe(s);
  if (obs.holding_target) {
    if (obs.target_processed) return buy_action();
    // Habit without the rule: try to buy straight away and only pick the
    // option after the purchase bounced.
    if (sig.hold_gate || s.operation_failed) return select_action(obs.destination);
    return buy_action();
  }
  if (obs.target_here) return open_action(static_cast<std::size_t>(obs.target_slot));
  for (std::size_t l = 1; l < config_.locations.size(); ++l) {
    if (obs.target_seen[l]) return search_action(l - 1);
  }
  std::optional<std::size_t> best;
  for (std::size_t l = 1; l < config_.locations.size(); ++l) {
    if (s.visited[l]) continue;
    if (!best || sig.location_bias[l] > sig.location_bias[*best]) best = l;
  }
  return search_action((best ? *best : 1) - 1);
}

SkillTemplate ShopEnv::hold_template(const std::string& family) const {
  return {"Select Options Before Buying",
          "Keep holding the product page while you select the required option, then buy.",
          "Any " + family + " product page that lists size or variant options.",
          "The purchase bounced because the required option was never selected."};
}

SkillTemplate ShopEnv::search_template(const std::string& family) const {
  const std::string q = config_.locations[effective_query(family)];
  std::string title = "Query By " + q;
  title[9] = static_cast<char>(std::toupper(title[9]));
  return {title, "Search " + q + " first; " + family + " items are indexed under that query.",
          "Looking for any " + family + " product.",
          "Other query kinds returned nothing relevant before the item turned up."};
}

}  // namespace skillmaster
