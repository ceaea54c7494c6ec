#pragma once

#include "skillmaster/env.hpp"

namespace skillmaster {

// Product-search simulator. Locations are result pages (one per query
// kind); each category's item only shows up under one query kind, and a
// purchase fails unless the required option was selected first.
class ShopEnv : public Environment {
 public:
  explicit ShopEnv(EnvConfig config);

  static constexpr std::size_t kSlots = 3;
  static constexpr std::size_t kOptions = 3;

  std::size_t num_actions() const override { return queries() + kSlots + kOptions + 1; }
  std::size_t num_features() const override { return total_; }
  Action decode(std::size_t action) const override;
  std::string action_label(std::size_t action) const override;
  std::vector<std::string> operations() const override { return {"select"}; }

  TaskSpec make_task(const std::string& family, std::uint64_t world_seed) const override;
  EnvState reset(const TaskSpec& spec) const override;
  StepTrace advance(EnvState& state, std::size_t action) const override;
  Observation observe(const EnvState& state) const override;
  bool goal_reached(const EnvState& state) const override;

  Eigen::VectorXd featurize(const Observation& obs, std::span<const Skill> retrieved,
                            const std::string& family) const override;
  std::size_t oracle_action(const EnvState& state, const DirectiveSignals& signals) const override;

  std::optional<std::string> operation_for(const std::string&) const override { return "select"; }
  std::vector<std::string> search_prior(const std::string& family) const override;
  int gating_failure_threshold() const override { return 1; }
  SkillTemplate hold_template(const std::string& family) const override;
  SkillTemplate search_template(const std::string& family) const override;
  std::string describe(const TaskSpec& spec) const override;

  std::size_t search_action(std::size_t query) const { return query; }
  std::size_t open_action(std::size_t slot) const { return queries() + slot; }
  std::size_t select_action(std::size_t option) const { return queries() + kSlots + option; }
  std::size_t buy_action() const { return queries() + kSlots + kOptions; }

  // Location index of the results page that lists the family's items.
  std::size_t effective_query(const std::string& family) const;

 private:
  // Location 0 is the home page; the rest are query kinds.
  std::size_t queries() const { return config_.locations.size() - 1; }

  std::size_t search_ = 0, fetch_ = 0, process_ = 0, deliver_ = 0, total_ = 0;
};

}  // namespace skillmaster
