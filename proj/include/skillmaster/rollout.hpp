#pragma once

#include <span>

#include "skillmaster/env.hpp"
#include "skillmaster/policy.hpp"
#include "skillmaster/random.hpp"
#include "skillmaster/skill_bank.hpp"
#include "skillmaster/trajectory.hpp"

namespace skillmaster {

enum class Mode { sampled, greedy };

struct EpisodeOptions {
  Mode mode = Mode::greedy;
  std::size_t retrieval_limit = kDefaultRetrievalLimit;
  bool with_retrieval = true;
};

// Acting phase only: retrieves once, then featurize + act until done.
// `rng` is only consulted in sampled mode.
Trajectory run_episode(const Environment& env, const PolicyParams& params, const SkillBank& bank,
                       const TaskSpec& spec, const EpisodeOptions& options, Rng* rng = nullptr);

// Acting phase with a fixed retrieved list (bypasses the bank).
Trajectory run_episode_with(const Environment& env, const PolicyParams& params, std::span<const Skill> retrieved,
                            const TaskSpec& spec, Mode mode, Rng* rng = nullptr);

// Scripted teacher rollout; `retrieved` drives its directive signals.
Trajectory run_oracle(const Environment& env, std::span<const Skill> retrieved, const TaskSpec& spec);

}  // namespace skillmaster
