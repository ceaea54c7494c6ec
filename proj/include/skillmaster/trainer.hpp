#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "skillmaster/dualadv_grpo.hpp"
#include "skillmaster/env.hpp"
#include "skillmaster/kv_config.hpp"
#include "skillmaster/policy.hpp"
#include "skillmaster/probe_eval.hpp"
#include "skillmaster/random.hpp"
#include "skillmaster/rollout.hpp"
#include "skillmaster/skill_bank.hpp"
#include "skillmaster/tool_protocol.hpp"
#include "skillmaster/trajectory.hpp"

namespace skillmaster {

struct Ablations {
  bool no_utility = false;
  bool coupled_norm = false;
  bool random_probes = false;
  bool review_only = false;
  bool no_coldstart = false;
  double bank_fraction = 1.0;

  // Comma-separated names; "none" or empty clears all flags.
  void set(const std::string& names);
  std::string names() const;
};

struct TrainConfig {
  EnvConfig env = EnvConfig::household_defaults();
  std::uint64_t seed = 1;
  int iterations = 200;
  int G = 8;
  int K = 4;
  double alpha = 0.3;
  double gamma = 1.0;
  double beta = kKlBeta;
  double clip_eps = kClipEps;
  double stability_eps = kStabilityEps;
  bool sample_std = false;
  double lr = 0.5;
  std::size_t retrieval_limit = kDefaultRetrievalLimit;
  int tasks_per_iteration = 4;
  int probe_repeats = 1;
  int bc_epochs = 200;
  double bc_lr = 1.0;
  int demos_per_family = 50;
  std::string seed_bank = "builtin";  // or a bank file path
  Ablations ablation;
  int checkpoint_every = 0;  // 0: only at the end
  bool wall_clock = false;   // record real seconds in the metrics CSV

  static TrainConfig from_kv(const KvConfig& kv);
  KvConfig to_kv() const;
  // Throws ConfigError.
  void validate() const;
};

struct MetricsRow {
  int iter = 0;
  double mean_r_env = 0.0;
  double success = 0.0;
  double mean_steps = 0.0;
  double mean_r_format = 0.0;
  double mean_r_utility = 0.0;
  int n_propose = 0;
  int n_update = 0;
  int n_keep = 0;
  std::uint64_t bank_version = 0;
  std::size_t bank_size = 0;
  int probe_rollouts = 0;
  double wall_secs = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "iter,mean_r_env,success,mean_steps,mean_r_format,mean_r_utility,n_propose,n_update,n_keep,"
    "bank_version,bank_size,probe_rollouts,wall_secs";
std::string format_metrics_row(const MetricsRow& row);

struct FamilyResult {
  std::string family;
  int tasks = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_steps = 0.0;
};

struct EvalReport {
  std::string split;
  bool with_retrieval = true;
  std::vector<FamilyResult> families;
  int tasks = 0;
  double success_rate = 0.0;
  double mean_steps = 0.0;
};

EvalReport evaluate(const Environment& env, const PolicyParams& params, const SkillBank& bank, Split split,
                    bool with_retrieval, std::size_t retrieval_limit = kDefaultRetrievalLimit);

// Hand-written starting banks; data/ holds the same banks as files.
SkillBank builtin_seed_bank(const std::string& env_kind);

// Scripted-teacher demonstrations: per family, `per_family` episodes over
// the train split, each with a random set of directive-carrying skills.
std::vector<Demo> make_demos(const Environment& env, int per_family, std::uint64_t seed);

PolicyParams initial_params(const Environment& env);

struct SkillTurn {
  ToolCall call;
  DecisionRecord record;
  Rule rule = Rule::keep;
  std::size_t num_candidates = 0;
};

// Mines candidates, scores them with the skill head and picks one
// (sampled with `rng`, else argmax).
SkillTurn skill_mastery_turn(const Environment& env, const PolicyParams& params, const Trajectory& trajectory,
                             const SkillBank& bank, Rng* rng);

struct ScoredDecision {
  RewardBundle reward;
  std::optional<MutationEvaluation> evaluation;
  bool executable = false;
};

// R_format from the wire round trip and validation; R_utility from probes
// for executable propose/update calls unless an ablation turns it off.
ScoredDecision score_skill_decision(const Environment& env, const ToolCall& call, const Trajectory& trajectory,
                                    const SkillBank& bank, const PolicyParams& rollout_params,
                                    const TrainConfig& config, std::span<const TaskSpec> probe_pool);

GroupRollout collect_group(const Environment& env, const TaskSpec& task, const PolicyParams& params,
                           const SkillBank& bank, const TrainConfig& config, std::span<const TaskSpec> probe_pool,
                           std::uint64_t group_seed);

// Commits the highest positive-utility executable mutation of the group
// (ties: lowest index) to `bank`. Returns what changed.
BankDiff commit_rule(const GroupRollout& group, SkillBank& bank, const BankSchema& schema,
                     std::uint64_t iteration = 0);

class Trainer {
 public:
  explicit Trainer(TrainConfig config);

  // Cold start (unless ablated) and seed bank.
  void initialize();
  // One iteration of rollouts, one optimizer step, then commits.
  MetricsRow step();
  bool finished() const { return iteration_ >= config_.iterations; }

  void save_checkpoint(const std::filesystem::path& dir) const;
  // Restores a run saved by save_checkpoint; the config must match.
  void resume(const std::filesystem::path& dir);

  const TrainConfig& config() const { return config_; }
  const Environment& env() const { return *env_; }
  const PolicyParams& params() const { return params_; }
  const PolicyParams& ref_params() const { return ref_; }
  const SkillBank& bank() const { return bank_; }
  int iteration() const { return iteration_; }
  const std::vector<MetricsRow>& rows() const { return rows_; }
  const std::vector<GroupRollout>& last_groups() const { return last_groups_; }

  std::vector<TaskSpec> schedule(int iteration);

 private:
  TrainConfig config_;
  std::unique_ptr<Environment> env_;
  std::vector<TaskSpec> train_tasks_;
  std::vector<TaskSpec> probe_pool_;
  PolicyParams params_;
  PolicyParams ref_;
  SkillBank bank_;
  Rng rng_;
  int iteration_ = 0;
  std::vector<MetricsRow> rows_;
  std::vector<GroupRollout> last_groups_;
};

struct TrainingReport {
  std::vector<MetricsRow> rows;
  EvalReport initial_eval;
  EvalReport final_eval;
  SkillBank bank;
  PolicyParams params;
};

struct TrainHooks {
  std::function<void(const MetricsRow&)> on_row;
  std::optional<std::filesystem::path> checkpoint_dir;
  std::optional<std::filesystem::path> resume_from;
};

TrainingReport train(const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace skillmaster
