#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "skillmaster/kv_config.hpp"
#include "skillmaster/skill_bank.hpp"

namespace skillmaster {

enum class Effect { ok, nothing_happens };
enum class Split { train, probe_pool, test };

std::string_view to_string(Split split);
// Throws ConfigError on an unknown name.
Split split_from_string(std::string_view name);

struct TaskSpec {
  std::string task_id;
  std::string family;
  std::vector<std::string> target_objects;
  std::string destination;
  std::uint64_t world_seed = 0;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

// What the agent sees after each step, including the episode memory an
// agent would carry in its context (visited locations, where targets were
// last seen, whether an operation has already failed).
struct Observation {
  std::size_t location = 0;
  std::vector<std::string> visible_objects;
  std::optional<std::string> holding;
  int step_index = 0;
  Effect last_effect = Effect::ok;

  std::vector<std::uint8_t> visited;      // per location
  std::vector<std::uint8_t> target_seen;  // per location: a pending target was last seen here
  bool holding_target = false;
  bool target_processed = false;  // held target already had its operation applied
  bool target_here = false;       // a pending target lies at the current location
  bool target_at_station = false; // ...and it is unprocessed and sits at the operation's station
  bool operation_failed = false;  // a gated operation already did nothing this episode
  int target_slot = -1;           // shop: result slot showing the target
  int delivered = 0;
  std::size_t destination = 0;    // household: goal location index
};

// Action vocabulary entry; the policy only sees indices.
struct Action {
  enum class Verb { go_to, take, put, operate, examine, done, search, open, select, buy };
  Verb verb = Verb::examine;
  int arg = -1;  // location / operation / result slot / option index
};

// Per-step record kept for skill review and candidate mining.
struct StepTrace {
  std::size_t action = 0;
  std::string label;
  Effect effect = Effect::ok;
  std::size_t location = 0;
  bool holding_target = false;
  bool target_seen = false;   // any pending target is known after this step
  bool gated_failure = false; // an operation failed because the target was not held
};

struct HouseholdWorld {
  struct Target {
    std::string name;
    int location = -1;        // -1 while held
    int known_location = -1;  // agent memory; -1 if unknown or held
    bool processed = false;
    bool delivered = false;
  };
  std::vector<Target> targets;
  std::vector<std::pair<std::string, int>> distractors;
  int holding = -1;
  bool looked = false;
  int consecutive_gated_failures = 0;
  bool station_jammed = false;  // too many ineffective operations in a row
};

struct ShopWorld {
  int effective_query = 0;  // location index whose results contain the target
  int target_slot = 0;
  int required_option = 0;
  bool product_open = false;
  int selected_option = -1;
  bool purchased = false;
  bool purchase_matches = false;
};

struct EnvState {
  TaskSpec spec;
  std::size_t location = 0;
  int step_index = 0;
  bool done = false;
  bool success = false;
  bool reward_paid = false;
  bool operation_failed = false;
  Effect last_effect = Effect::ok;
  std::vector<std::uint8_t> visited;
  std::variant<HouseholdWorld, ShopWorld> world;
};

struct StepResult {
  EnvState state;
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepTrace trace;
};

// Directive-derived signals shared by the featurizer and the scripted
// teacher so both read skills the same way.
struct DirectiveSignals {
  std::vector<double> location_bias;  // per location, clamped to [-1, 1]
  bool hold_gate = false;             // hold_while for this family's operation
};

// Skill text used by the candidate miner for one rule and family.
struct SkillTemplate {
  std::string title;
  std::string principle;
  std::string when_to_apply;
  std::string evidence;
};

struct EnvConfig {
  std::string kind = "household";
  std::vector<std::string> locations;
  std::vector<std::string> families;
  std::vector<std::vector<std::string>> objects;  // per family
  int max_steps = 30;
  int tasks_train = 24;
  int tasks_probe = 24;
  int tasks_test = 20;
  std::uint64_t seed_train_base = 1000;
  std::uint64_t seed_probe_offset = 50000;
  std::uint64_t seed_test_offset = 100000;

  static EnvConfig household_defaults();
  static EnvConfig shop_defaults();
  // Overlays keys from a flat config (locations, families, objects.<family>,
  // tasks.train/probe_pool/test, max_steps, seed.*) onto the defaults for
  // the `env` kind named in it.
  static EnvConfig from_kv(const KvConfig& kv);
  void write_kv(KvConfig& kv) const;
  std::size_t family_index(const std::string& family) const;
};

class Environment {
 public:
  explicit Environment(EnvConfig config) : config_(std::move(config)) {}
  virtual ~Environment() = default;

  const EnvConfig& config() const { return config_; }
  int max_steps() const { return config_.max_steps; }
  BankSchema schema() const;

  virtual std::size_t num_actions() const = 0;
  virtual std::size_t num_features() const = 0;
  virtual Action decode(std::size_t action) const = 0;
  virtual std::string action_label(std::size_t action) const = 0;
  virtual std::vector<std::string> operations() const = 0;

  // Disjoint by construction: probe seeds are train seeds plus the probe
  // offset, test seeds the train seeds plus the test offset.
  std::vector<TaskSpec> enumerate_tasks(Split split) const;
  virtual TaskSpec make_task(const std::string& family, std::uint64_t world_seed) const = 0;

  virtual EnvState reset(const TaskSpec& spec) const = 0;
  // Pure transition; throws StepAfterDone on a finished state.
  StepResult step(const EnvState& state, std::size_t action) const;
  // In-place transition used on hot paths.
  virtual StepTrace advance(EnvState& state, std::size_t action) const = 0;
  virtual Observation observe(const EnvState& state) const = 0;
  virtual bool goal_reached(const EnvState& state) const = 0;

  DirectiveSignals directive_signals(std::span<const Skill> retrieved,
                                     const std::string& family) const;
  virtual Eigen::VectorXd featurize(const Observation& obs, std::span<const Skill> retrieved,
                                    const std::string& family) const = 0;

  // Scripted per-family teacher. Follows directives; without a hold rule it
  // uses the place-then-operate habit, and without a location prior it
  // sweeps locations in a fixed default order.
  virtual std::size_t oracle_action(const EnvState& state,
                                    const DirectiveSignals& signals) const = 0;

  // Mining hints.
  virtual std::optional<std::string> operation_for(const std::string& family) const = 0;
  // Locations where the family's targets are likely to be; empty if none.
  virtual std::vector<std::string> search_prior(const std::string& family) const = 0;
  virtual int gating_failure_threshold() const = 0;
  virtual SkillTemplate hold_template(const std::string& family) const = 0;
  virtual SkillTemplate search_template(const std::string& family) const = 0;
  virtual std::string describe(const TaskSpec& spec) const = 0;

 protected:
  std::size_t location_index(const std::string& name) const;

  EnvConfig config_;
};

std::unique_ptr<Environment> make_environment(const EnvConfig& config);

}  // namespace skillmaster
