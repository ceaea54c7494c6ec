#pragma once

#include <span>
#include <string>
#include <vector>

#include "skillmaster/env.hpp"
#include "skillmaster/policy.hpp"
#include "skillmaster/skill_bank.hpp"
#include "skillmaster/tool_call.hpp"

namespace skillmaster {

struct ProbeReport {
  std::string probe_task_id;
  double score_before = 0.0;
  double score_after = 0.0;
  double delta = 0.0;
  int steps_before = 0;
  int steps_after = 0;
  bool success_before = false;
  bool success_after = false;
};

struct UtilitySummary {
  double mean_delta = 0.0;
  int wins = 0;
  int losses = 0;
  int K = 0;
  double alpha = 0.0;
  double r_utility = 0.0;
};

// K distinct same-family tasks from the probe pool, never the current task,
// chosen by a shuffle seeded with the FNV-1a hash of the current task id.
std::vector<TaskSpec> select_probes(const std::string& current_task_id, const std::string& family,
                                    std::span<const TaskSpec> pool, std::size_t K);
// Ablation: the same seeded shuffle over the whole pool, family ignored.
std::vector<TaskSpec> select_random_probes(const std::string& current_task_id, std::span<const TaskSpec> pool,
                                           std::size_t K);

double probe_score(bool success, int steps, int M);
UtilitySummary utility_reward(std::span<const double> deltas, double alpha);

struct MutationEvaluation {
  UtilitySummary summary;
  std::vector<ProbeReport> reports;
  int rollouts = 0;
};

// Greedy paired rollouts of every probe under the bank and under the bank
// with `call` applied. Neither bank is kept.
MutationEvaluation evaluate_mutation(const Environment& env, const ToolCall& call, const SkillBank& bank,
                                     const PolicyParams& policy, std::span<const TaskSpec> probes, int M,
                                     double alpha, std::size_t retrieval_limit = kDefaultRetrievalLimit,
                                     int repeats = 1);

}  // namespace skillmaster
