#include "skillmaster/env.hpp"

#include <algorithm>

#include "skillmaster/errors.hpp"
#include "skillmaster/household_env.hpp"
#include "skillmaster/shop_env.hpp"

namespace skillmaster {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::probe_pool: return "probe_pool";
    case Split::test: return "test";
  }
  return "train";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "probe_pool" || name == "probe") return Split::probe_pool;
  if (name == "test") return Split::test;
  throw ConfigError("unknown split: " + std::string(name));
}

EnvConfig EnvConfig::household_defaults() {
  EnvConfig c;
  c.kind = "household";
  c.locations = {"countertop", "fridge", "microwave", "sink", "cabinet", "drawer", "desk", "shelf"};
  c.families = {"pick", "look", "clean", "heat", "cool", "pick2"};
  c.objects = {
      {"mug", "book", "vase", "keychain", "cd", "pen"},
      {"book", "pen", "watch", "cd", "keychain"},
      {"plate", "mug", "pan", "cup", "spoon"},
      {"apple", "potato", "egg", "bread", "tomato"},
      {"apple", "tomato", "lettuce", "potato", "egg"},
      {"mug", "book", "vase", "keychain", "cd", "pen"},
  };
  c.max_steps = 30;
  return c;
}

EnvConfig EnvConfig::shop_defaults() {
  EnvConfig c;
  c.kind = "shop";
  c.locations = {"home", "plain", "category", "attribute", "brand"};
  c.families = {"apparel", "footwear", "electronics", "accessories", "home_decor", "beauty", "health"};
  c.objects = {
      {"shirt", "jacket", "dress"},   {"sneakers", "boots", "sandals"},
      {"headphones", "charger", "speaker"}, {"wallet", "belt", "watch"},
      {"lamp", "rug", "vase"},        {"lotion", "serum", "shampoo"},
      {"vitamins", "bandage", "thermometer"},
  };
  c.max_steps = 15;
  return c;
}

EnvConfig EnvConfig::from_kv(const KvConfig& kv) {
  const std::string kind = kv.get_string("env", "household");
  EnvConfig c;
  if (kind == "household") {
    c = household_defaults();
  } else if (kind == "shop") {
    c = shop_defaults();
  } else {
    throw ConfigError("unknown env kind: " + kind);
  }
  c.locations = kv.get_list("locations", c.locations);
  const auto families = kv.get_list("families", c.families);
  if (families != c.families) {
    std::vector<std::vector<std::string>> objects;
    for (const auto& f : families) {
      const auto it = std::find(c.families.begin(), c.families.end(), f);
      objects.push_back(it == c.families.end()
                            ? std::vector<std::string>{}
                            : c.objects[static_cast<std::size_t>(it - c.families.begin())]);
    }
    c.families = families;
    c.objects = std::move(objects);
  }
  for (std::size_t i = 0; i < c.families.size(); ++i) {
    c.objects[i] = kv.get_list("objects." + c.families[i], c.objects[i]);
    if (c.objects[i].empty()) throw ConfigError("no objects for family " + c.families[i]);
  }
  c.max_steps = static_cast<int>(kv.get_int("max_steps", c.max_steps));
  c.tasks_train = static_cast<int>(kv.get_int("tasks.train", c.tasks_train));
  c.tasks_probe = static_cast<int>(kv.get_int("tasks.probe_pool", c.tasks_probe));
  c.tasks_test = static_cast<int>(kv.get_int("tasks.test", c.tasks_test));
  c.seed_train_base = static_cast<std::uint64_t>(kv.get_int("seed.train_base", static_cast<long long>(c.seed_train_base)));
  c.seed_probe_offset = static_cast<std::uint64_t>(kv.get_int("seed.probe_offset", static_cast<long long>(c.seed_probe_offset)));
  c.seed_test_offset = static_cast<std::uint64_t>(kv.get_int("seed.test_offset", static_cast<long long>(c.seed_test_offset)));
  if (c.max_steps <= 0) throw ConfigError("max_steps must be positive");
  if (c.tasks_train < 0 || c.tasks_probe < 0 || c.tasks_test < 0) {
    throw ConfigError("task counts must be non-negative");
  }
  if (std::max({c.tasks_train, c.tasks_probe, c.tasks_test}) >= 1000) {
    throw ConfigError("at most 999 tasks per family and split");
  }
  if (c.seed_probe_offset == c.seed_test_offset || c.seed_probe_offset == 0 || c.seed_test_offset == 0) {
    throw ConfigError("seed offsets must be distinct and non-zero");
  }
  return c;
}

void EnvConfig::write_kv(KvConfig& kv) const {
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s;
  };
  kv.set("env", kind);
  kv.set("locations", join(locations));
  kv.set("families", join(families));
  for (std::size_t i = 0; i < families.size(); ++i) kv.set("objects." + families[i], join(objects[i]));
  kv.set("max_steps", std::to_string(max_steps));
  kv.set("tasks.train", std::to_string(tasks_train));
  kv.set("tasks.probe_pool", std::to_string(tasks_probe));
  kv.set("tasks.test", std::to_string(tasks_test));
  kv.set("seed.train_base", std::to_string(seed_train_base));
  kv.set("seed.probe_offset", std::to_string(seed_probe_offset));
  kv.set("seed.test_offset", std::to_string(seed_test_offset));
}

std::size_t EnvConfig::family_index(const std::string& family) const {
  const auto it = std::find(families.begin(), families.end(), family);
  if (it == families.end()) throw UnknownFamily(family);
  return static_cast<std::size_t>(it - families.begin());
}

BankSchema Environment::schema() const {
  return BankSchema{config_.families, config_.locations, operations()};
}

std::size_t Environment::location_index(const std::string& name) const {
  const auto it = std::find(config_.locations.begin(), config_.locations.end(), name);
  if (it == config_.locations.end()) throw ConfigError("unknown location: " + name);
  return static_cast<std::size_t>(it - config_.locations.begin());
}

std::vector<TaskSpec> Environment::enumerate_tasks(Split split) const {
  std::uint64_t offset = 0;
  int count = config_.tasks_train;
  if (split == Split::probe_pool) {
    offset = config_.seed_probe_offset;
    count = config_.tasks_probe;
  } else if (split == Split::test) {
    offset = config_.seed_test_offset;
    count = config_.tasks_test;
  }
  std::vector<TaskSpec> out;
  for (std::size_t f = 0; f < config_.families.size(); ++f) {
    for (int i = 0; i < count; ++i) {
      const std::uint64_t seed = config_.seed_train_base + offset + f * 1000 + static_cast<std::uint64_t>(i);
      out.push_back(make_task(config_.families[f], seed));
    }
  }
  return out;
}

StepResult Environment::step(const EnvState& state, std::size_t action) const {
  StepResult r;
  r.state = state;
  const bool paid_before = r.state.reward_paid;
  r.trace = advance(r.state, action);
  r.observation = observe(r.state);
  r.reward = (!paid_before && r.state.reward_paid) ? 1.0 : 0.0;
  r.done = r.state.done;
  return r;
}

DirectiveSignals Environment::directive_signals(std::span<const Skill> retrieved,
                                                const std::string& family) const {
  DirectiveSignals sig;
  sig.location_bias.assign(config_.locations.size(), 0.0);
  const auto op = operation_for(family);
  for (const auto& skill : retrieved) {
    for (const auto& d : skill.directives) {
      switch (d.kind) {
        case Directive::Kind::hold_while:
          if (op && !d.args.empty() && d.args.front() == *op) sig.hold_gate = true;
          break;
        case Directive::Kind::prefer_locations:
        case Directive::Kind::avoid_locations: {
          const double delta = d.kind == Directive::Kind::prefer_locations ? 1.0 : -1.0;
          for (const auto& name : d.args) {
            const auto it = std::find(config_.locations.begin(), config_.locations.end(), name);
            if (it == config_.locations.end()) continue;
            auto& v = sig.location_bias[static_cast<std::size_t>(it - config_.locations.begin())];
            v = std::clamp(v + delta, -1.0, 1.0);
          }
          break;
        }
      }
    }
  }
  return sig;
}

std::unique_ptr<Environment> make_environment(const EnvConfig& config) {
  if (config.kind == "household") return std::make_unique<HouseholdEnv>(config);
  if (config.kind == "shop") return std::make_unique<ShopEnv>(config);
  throw ConfigError("unknown env kind: " + config.kind);
}

}  // namespace skillmaster
