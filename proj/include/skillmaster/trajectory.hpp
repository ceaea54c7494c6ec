#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skillmaster/env.hpp"
#include "skillmaster/tool_call.hpp"

namespace skillmaster {

enum class Phase { acting, skill_mastery };

// One policy decision ("token"). For acting records `features` is a single
// row; for the skill-mastery record it holds one row per candidate.
struct DecisionRecord {
  Phase phase = Phase::acting;
  Eigen::MatrixXd features;
  std::size_t chosen = 0;
  double log_prob = 0.0;
  Eigen::VectorXd probs;
};

struct RewardBundle {
  double r_env = 0.0;
  double r_format = 0.0;
  double r_utility = 0.0;
  double r_skill = 0.0;
};

struct Trajectory {
  TaskSpec task;
  std::string description;
  std::vector<DecisionRecord> records;
  std::vector<StepTrace> trace;
  std::vector<Skill> retrieved;
  bool success = false;
  int steps = 0;
  double r_env = 0.0;
  std::optional<ToolCall> call;
  int rule_id = -1;  // mining rule of the chosen candidate
  RewardBundle reward;
  int probe_rollouts = 0;
};

}  // namespace skillmaster
