#pragma once

#include <span>
#include <string>
#include <vector>

#include "skillmaster/policy.hpp"
#include "skillmaster/trajectory.hpp"

namespace skillmaster {

inline constexpr double kStabilityEps = 1e-8;
inline constexpr double kClipEps = 0.2;
inline constexpr double kKlBeta = 0.01;

struct GroupStats {
  double mu = 0.0;
  double sigma = 0.0;
};

// Population std by default. Throws GroupTooSmall for fewer than 2 values.
GroupStats group_stats(std::span<const double> rewards, bool sample_std = false);

struct GroupRollout {
  std::string prompt_id;  // task id + "@" + bank version
  std::vector<Trajectory> trajectories;
};

struct StreamAdvantages {
  std::vector<double> act;
  std::vector<double> skill;
};

std::vector<double> env_rewards(const GroupRollout& group);
std::vector<double> skill_rewards(const GroupRollout& group);

// (r - mu) / (sigma + eps) per stream; a stream whose rewards are all equal
// gets zero advantages.
StreamAdvantages dual_advantages(const GroupRollout& group, double eps = kStabilityEps, bool sample_std = false);
// One (mu, sigma) over the 2G pooled rewards.
StreamAdvantages coupled_advantages(const GroupRollout& group, double eps = kStabilityEps,
                                    bool sample_std = false);

// A_act on acting records, gamma * A_skill on skill-mastery records.
std::vector<double> assign_token_advantages(const Trajectory& trajectory, double a_act, double a_skill,
                                            double gamma);

// assignments[g][j] is the per-record advantage list of trajectory j in
// group g.
using Assignments = std::vector<std::vector<std::vector<double>>>;

struct LossAndGrad {
  double loss = 0.0;
  double surrogate = 0.0;
  double kl = 0.0;  // mean KL over all records
  PolicyParams grad;
  int clipped = 0;  // records whose clipped branch was active
};

LossAndGrad ppo_loss_and_grad(const PolicyParams& params, const PolicyParams& old_params,
                              const PolicyParams& ref_params, std::span<const GroupRollout> groups,
                              const Assignments& assignments, double clip_eps = kClipEps,
                              double beta = kKlBeta);

}  // namespace skillmaster
