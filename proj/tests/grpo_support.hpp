#pragma once

#include "skillmaster/dualadv_grpo.hpp"
#include "skillmaster/random.hpp"

namespace testsupport {

// Synthetic group: each trajectory has 1-6 acting records and one skill
// record, with choices sampled from `behavior`.
inline skillmaster::GroupRollout synthetic_group(skillmaster::Rng& rng, const skillmaster::PolicyParams& behavior,
                                                 std::size_t G) {
  using namespace skillmaster;
  GroupRollout g;
  g.prompt_id = "task@0";
  const auto F = behavior.acting.cols();
  const auto Fc = behavior.skill.cols();
  for (std::size_t j = 0; j < G; ++j) {
    Trajectory t;
    const std::size_t L = 1 + rng.below(6);
    for (std::size_t l = 0; l < L; ++l) {
      DecisionRecord r;
      r.phase = Phase::acting;
      r.features = Eigen::MatrixXd(1, F);
      for (Eigen::Index c = 0; c < F; ++c) r.features(0, c) = 2.0 * rng.uniform() - 1.0;
      r.probs = record_distribution(behavior, r);
      r.chosen = rng.categorical(r.probs);
      r.log_prob = std::log(r.probs[static_cast<Eigen::Index>(r.chosen)]);
      t.records.push_back(r);
    }
    DecisionRecord s;
    s.phase = Phase::skill_mastery;
    const auto n = static_cast<Eigen::Index>(1 + rng.below(behavior.skill.rows()));
    s.features = Eigen::MatrixXd(n, Fc);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index c = 0; c < Fc; ++c) s.features(a, c) = 2.0 * rng.uniform() - 1.0;
    }
    s.probs = record_distribution(behavior, s);
    s.chosen = rng.categorical(s.probs);
    s.log_prob = std::log(s.probs[static_cast<Eigen::Index>(s.chosen)]);
    t.records.push_back(s);
    t.r_env = static_cast<double>(rng.below(2));
    t.reward.r_env = t.r_env;
    t.reward.r_format = rng.below(4) == 0 ? -0.2 : 0.1;
    t.reward.r_utility = rng.below(2) == 0 ? 0.0 : 4.0 * rng.uniform() - 2.0;
    t.reward.r_skill = t.reward.r_format + t.reward.r_utility;
    g.trajectories.push_back(std::move(t));
  }
  return g;
}

inline skillmaster::PolicyParams random_params(skillmaster::Rng& rng, std::size_t a, std::size_t f, std::size_t c,
                                               std::size_t fc, double scale) {
  auto p = skillmaster::PolicyParams::zeros(a, f, fc, c);
  for (std::size_t i = 0; i < p.size(); ++i) p.at(i) = scale * (2.0 * rng.uniform() - 1.0);
  return p;
}

inline skillmaster::Assignments assignments_for(const std::vector<skillmaster::GroupRollout>& groups, double gamma,
                                                bool coupled = false) {
  using namespace skillmaster;
  Assignments out;
  for (const auto& g : groups) {
    const auto adv = coupled ? coupled_advantages(g) : dual_advantages(g);
    std::vector<std::vector<double>> per;
    for (std::size_t j = 0; j < g.trajectories.size(); ++j) {
      per.push_back(assign_token_advantages(g.trajectories[j], adv.act[j], adv.skill[j], gamma));
    }
    out.push_back(std::move(per));
  }
  return out;
}

}  // namespace testsupport
