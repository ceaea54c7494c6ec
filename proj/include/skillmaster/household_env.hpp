#pragma once

#include "skillmaster/env.hpp"

namespace skillmaster {

// Six-family household simulator. Operations (clean/heat/cool/toggle) only
// work at their station while the agent holds the target; placing the
// target inside first makes the operation do nothing.
class HouseholdEnv : public Environment {
 public:
  explicit HouseholdEnv(EnvConfig config);

  std::size_t num_actions() const override { return locations() + 8; }
  std::size_t num_features() const override { return layout_.total; }
  Action decode(std::size_t action) const override;
  std::string action_label(std::size_t action) const override;
  std::vector<std::string> operations() const override { return kOperations; }

  TaskSpec make_task(const std::string& family, std::uint64_t world_seed) const override;
  EnvState reset(const TaskSpec& spec) const override;
  StepTrace advance(EnvState& state, std::size_t action) const override;
  Observation observe(const EnvState& state) const override;
  bool goal_reached(const EnvState& state) const override;

  Eigen::VectorXd featurize(const Observation& obs, std::span<const Skill> retrieved,
                            const std::string& family) const override;
  std::size_t oracle_action(const EnvState& state, const DirectiveSignals& signals) const override;

  std::optional<std::string> operation_for(const std::string& family) const override;
  std::vector<std::string> search_prior(const std::string& family) const override;
  int gating_failure_threshold() const override { return 3; }
  // Consecutive ineffective operations after which the station stops
  // working for the rest of the episode. The teacher gives up after 3.
  static constexpr int kJamThreshold = 5;
  SkillTemplate hold_template(const std::string& family) const override;
  SkillTemplate search_template(const std::string& family) const override;
  std::string describe(const TaskSpec& spec) const override;

  // Action indices.
  std::size_t goto_action(std::size_t location) const { return location; }
  std::size_t take_action() const { return locations(); }
  std::size_t put_action() const { return locations() + 1; }
  std::size_t operate_action(std::size_t op) const { return locations() + 2 + op; }
  std::size_t examine_action() const { return locations() + 6; }
  std::size_t done_action() const { return locations() + 7; }

  std::size_t station_of(std::size_t op) const;
  std::size_t default_rank(std::size_t location) const;

  static inline const std::vector<std::string> kOperations = {"clean", "heat", "cool", "toggle"};

 private:
  struct Layout {
    std::size_t global = 0, search = 0, fetch = 0, process = 0, deliver = 0, total = 0;
  };
  struct World {
    std::vector<std::string> targets;
    std::vector<std::size_t> sources;
    std::size_t destination = 0;
    std::size_t start = 0;
    std::vector<std::pair<std::string, int>> distractors;
  };

  std::size_t locations() const { return config_.locations.size(); }
  World generate(const std::string& family, std::uint64_t world_seed) const;
  // Index into kOperations, or -1 for pick families.
  int op_index(const std::string& family) const;

  Layout layout_;
  std::vector<std::size_t> food_zones_;
  std::vector<std::size_t> storage_;
  std::vector<std::size_t> sweep_order_;
  std::vector<std::size_t> stations_;  // per operation
};

}  // namespace skillmaster
