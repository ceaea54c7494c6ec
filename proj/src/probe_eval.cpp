#include "skillmaster/probe_eval.hpp"

#include "skillmaster/errors.hpp"
#include "skillmaster/random.hpp"
#include "skillmaster/rollout.hpp"

namespace skillmaster {

namespace {

std::vector<TaskSpec> seeded_pick(const std::string& current_task_id, std::vector<TaskSpec> eligible,
                                  std::size_t K) {
  if (eligible.size() < K) {
    throw InsufficientProbes("need " + std::to_string(K) + " probes, pool has " + std::to_string(eligible.size()));
  }
  Rng rng(fnv1a64(current_task_id));
  rng.shuffle(std::span<TaskSpec>(eligible));
  eligible.resize(K);
  return eligible;
}

}  // namespace

std::vector<TaskSpec> select_probes(const std::string& current_task_id, const std::string& family,
                                    std::span<const TaskSpec> pool, std::size_t K) {
  std::vector<TaskSpec> eligible;
  for (const auto& t : pool) {
    if (t.family == family && t.task_id != current_task_id) eligible.push_back(t);
  }
  return seeded_pick(current_task_id, std::move(eligible), K);
}

std::vector<TaskSpec> select_random_probes(const std::string& current_task_id, std::span<const TaskSpec> pool,
                                           std::size_t K) {
  std::vector<TaskSpec> eligible;
  for (const auto& t : pool) {
    if (t.task_id != current_task_id) eligible.push_back(t);
  }
  return seeded_pick(current_task_id, std::move(eligible), K);
}

double probe_score(bool success, int steps, int M) {
  if (!success) return 0.0;
  return 1.0 + static_cast<double>(M - steps) / static_cast<double>(M);
}

UtilitySummary utility_reward(std::span<const double> deltas, double alpha) {
  UtilitySummary u;
  u.K = static_cast<int>(deltas.size());
  u.alpha = alpha;
  if (deltas.empty()) return u;
  double sum = 0.0;
  for (double d : deltas) {
    sum += d;
    if (d > 0.0) ++u.wins;
    if (d < 0.0) ++u.losses;
  }
  u.mean_delta = sum / static_cast<double>(u.K);
  u.r_utility = u.mean_delta + alpha * static_cast<double>(u.wins - u.losses) / static_cast<double>(u.K);
  return u;
}

MutationEvaluation evaluate_mutation(const Environment& env, const ToolCall& call, const SkillBank& bank,
                                     const PolicyParams& policy, std::span<const TaskSpec> probes, int M,
                                     double alpha, std::size_t retrieval_limit, int repeats) {
  if (!is_mutation(call)) throw ProgrammingError("keep_skill calls are never probe-evaluated");
  const SkillBank after = apply_mutation(bank, call).first;
  EpisodeOptions opts;
  opts.mode = Mode::greedy;
  opts.retrieval_limit = retrieval_limit;

  MutationEvaluation out;
  std::vector<double> deltas;
  for (const auto& probe : probes) {
    ProbeReport r;
    r.probe_task_id = probe.task_id;
    // Greedy rollouts are deterministic, so repeats only average identical
    // scores; they are kept for configurability.
    for (int k = 0; k < std::max(1, repeats); ++k) {
      const Trajectory b = run_episode(env, policy, bank, probe, opts);
      const Trajectory a = run_episode(env, policy, after, probe, opts);
      r.score_before += probe_score(b.success, b.steps, M);
      r.score_after += probe_score(a.success, a.steps, M);
      r.steps_before = b.steps;
      r.steps_after = a.steps;
      r.success_before = b.success;
      r.success_after = a.success;
      out.rollouts += 2;
    }
    r.score_before /= std::max(1, repeats);
    r.score_after /= std::max(1, repeats);
    r.delta = r.score_after - r.score_before;
    deltas.push_back(r.delta);
    out.reports.push_back(r);
  }
  out.summary = utility_reward(deltas, alpha);
  return out;
}

}  // namespace skillmaster
