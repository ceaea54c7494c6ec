#include "skillmaster/rollout.hpp"

#include <cmath>

#include "skillmaster/errors.hpp"

namespace skillmaster {

namespace {

Trajectory start(const Environment& env, std::span<const Skill> retrieved, const TaskSpec& spec) {
  Trajectory t;
  t.task = spec;
  t.description = env.describe(spec);
  t.retrieved.assign(retrieved.begin(), retrieved.end());
  return t;
}

void finish(Trajectory& t, const EnvState& s) {
  t.success = s.success;
  t.steps = s.step_index;
  t.r_env = s.reward_paid ? 1.0 : 0.0;
  t.reward.r_env = t.r_env;
}

}  // namespace

Trajectory run_episode_with(const Environment& env, const PolicyParams& params, std::span<const Skill> retrieved,
                            const TaskSpec& spec, Mode mode, Rng* rng) {
  if (mode == Mode::sampled && rng == nullptr) throw ProgrammingError("sampled rollout needs an rng");
  Trajectory t = start(env, retrieved, spec);
  EnvState s = env.reset(spec);
  while (!s.done) {
    const Eigen::VectorXd f = env.featurize(env.observe(s), retrieved, spec.family);
    const Eigen::VectorXd p = action_distribution(params, f);
    const std::size_t a = mode == Mode::greedy ? argmax(p) : rng->categorical(p);
    DecisionRecord r;
    r.phase = Phase::acting;
    r.features = f.transpose();
    r.chosen = a;
    r.log_prob = std::log(p[static_cast<Eigen::Index>(a)]);
    r.probs = p;
    t.records.push_back(std::move(r));
    t.trace.push_back(env.advance(s, a));
  }
  finish(t, s);
  return t;
}

Trajectory run_episode(const Environment& env, const PolicyParams& params, const SkillBank& bank,
                       const TaskSpec& spec, const EpisodeOptions& options, Rng* rng) {
  std::vector<Skill> retrieved;
  if (options.with_retrieval) retrieved = retrieve(bank, spec.family, options.retrieval_limit, env.schema());
  return run_episode_with(env, params, retrieved, spec, options.mode, rng);
}

Trajectory run_oracle(const Environment& env, std::span<const Skill> retrieved, const TaskSpec& spec) {
  Trajectory t = start(env, retrieved, spec);
  const DirectiveSignals sig = env.directive_signals(retrieved, spec.family);
  EnvState s = env.reset(spec);
  while (!s.done) t.trace.push_back(env.advance(s, env.oracle_action(s, sig)));
  finish(t, s);
  return t;
}

}  // namespace skillmaster
