#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skillmaster/env.hpp"
#include "skillmaster/skill_bank.hpp"
#include "skillmaster/tool_call.hpp"
#include "skillmaster/trajectory.hpp"

namespace skillmaster {

inline constexpr std::size_t kMaxCandidates = 6;

// Mining rules, in priority order.
enum class Rule { hold = 0, prefer = 1, keep = 2 };
inline constexpr std::size_t kNumRules = 3;

// Linear-softmax acting head (A x F) and skill-decision head (C_max x F_c).
// Gradients are returned in the same shape.
struct PolicyParams {
  Eigen::MatrixXd acting;
  Eigen::MatrixXd skill;

  static PolicyParams zeros(std::size_t actions, std::size_t features, std::size_t skill_features,
                            std::size_t candidates = kMaxCandidates);
  PolicyParams zeros_like() const;
  bool same_shape(const PolicyParams& other) const;
  bool all_finite() const;

  PolicyParams& add_scaled(const PolicyParams& other, double scale);
  double dot(const PolicyParams& other) const;
  std::size_t size() const;
  // Flat view for finite-difference checks: acting entries, then skill.
  double& at(std::size_t i);
  double at(std::size_t i) const;

  friend bool operator==(const PolicyParams& a, const PolicyParams& b) {
    return a.same_shape(b) && a.acting == b.acting && a.skill == b.skill;
  }
};

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

Eigen::VectorXd action_distribution(const PolicyParams& params, const Eigen::VectorXd& features);

struct LogProbGrad {
  double log_prob = 0.0;
  PolicyParams grad;
};

LogProbGrad logprob_and_grad(const PolicyParams& params, const Eigen::VectorXd& features,
                             std::size_t chosen);

double kl_divergence(const PolicyParams& params, const PolicyParams& ref, const Eigen::VectorXd& features);

// Skill head over n <= C_max candidates; row i of `candidates` is phi_i and
// scores against skill-weight row i.
Eigen::VectorXd skill_distribution(const PolicyParams& params, const Eigen::MatrixXd& candidates);
LogProbGrad skill_logprob_and_grad(const PolicyParams& params, const Eigen::MatrixXd& candidates,
                                   std::size_t chosen);
double skill_kl_divergence(const PolicyParams& params, const PolicyParams& ref,
                           const Eigen::MatrixXd& candidates);

// Dispatch on the record's phase.
Eigen::VectorXd record_distribution(const PolicyParams& params, const DecisionRecord& record);
LogProbGrad record_logprob_and_grad(const PolicyParams& params, const DecisionRecord& record);
double record_kl(const PolicyParams& params, const PolicyParams& ref, const DecisionRecord& record);
// Gradient of record_kl with respect to params.
PolicyParams record_kl_grad(const PolicyParams& params, const PolicyParams& ref, const DecisionRecord& record);

std::size_t argmax(const Eigen::VectorXd& probs);

struct EditCandidate {
  ToolCall call;
  Rule rule = Rule::keep;
  Eigen::VectorXd features;
};

std::size_t skill_feature_size(std::size_t num_families);

// Deterministic rules over the finished episode:
//   hold   - enough operation attempts did nothing while the target was not
//            held: hold_while candidate (update a covering skill, else propose)
//   prefer - two or more locations outside the family's search prior were
//            visited before the target was first seen
//   keep   - always
// Output is ordered hold, prefer, keep and never longer than kMaxCandidates.
std::vector<EditCandidate> mine_edit_candidates(const Environment& env, const Trajectory& trajectory,
                                                std::span<const Skill> retrieved, const SkillBank& bank);

struct Demo {
  Eigen::VectorXd features;
  std::size_t action = 0;
};

// Full-batch gradient descent on mean cross-entropy of the acting head,
// diagonally preconditioned by the feature second moments. The step is
// capped by a curvature bound (0.5 * largest eigenvalue of the scaled
// second-moment matrix), so the loss never increases. `losses` (optional) receives the
// loss before each epoch and after the last.
PolicyParams behavior_clone(const PolicyParams& params, std::span<const Demo> demos, int epochs,
                            double lr, std::vector<double>* losses = nullptr);
double demo_loss(const PolicyParams& params, std::span<const Demo> demos);
double demo_agreement(const PolicyParams& params, std::span<const Demo> demos);

// Text checkpoint:
//   skillmaster-params 1
//   acting <rows> <cols>
//   <row-major values, one row per line, %.17g>
//   skill <rows> <cols>
//   ...
void save_params(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_params(const std::filesystem::path& path);
std::string serialize_params(const PolicyParams& params);
PolicyParams parse_params(const std::string& text);

}  // namespace skillmaster
