#include "skillmaster/dualadv_grpo.hpp"

#include <algorithm>
#include <cmath>

#include "skillmaster/errors.hpp"

namespace skillmaster {

GroupStats group_stats(std::span<const double> r, bool sample_std) {
  if (r.size() < 2) throw GroupTooSmall("group statistics need at least 2 rewards");
  GroupStats s;
  for (double v : r) s.mu += v;
  s.mu /= static_cast<double>(r.size());
  double ss = 0.0;
  for (double v : r) ss += (v - s.mu) * (v - s.mu);
  s.sigma = std::sqrt(ss / static_cast<double>(sample_std ? r.size() - 1 : r.size()));
  return s;
}

std::vector<double> env_rewards(const GroupRollout& group) {
  std::vector<double> out;
  for (const auto& t : group.trajectories) out.push_back(t.reward.r_env);
  return out;
}

std::vector<double> skill_rewards(const GroupRollout& group) {
  std::vector<double> out;
  for (const auto& t : group.trajectories) out.push_back(t.reward.r_skill);
  return out;
}

namespace {

bool all_equal(std::span<const double> r) {
  return std::all_of(r.begin(), r.end(), [&](double v) { return v == r.front(); });
}

std::vector<double> normalize(std::span<const double> r, const GroupStats& s, double eps, bool degenerate) {
  std::vector<double> out(r.size(), 0.0);
  if (degenerate) return out;
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = (r[i] - s.mu) / (s.sigma + eps);
  return out;
}

}  // namespace

StreamAdvantages dual_advantages(const GroupRollout& group, double eps, bool sample_std) {
  const auto ra = env_rewards(group);
  const auto rs = skill_rewards(group);
  StreamAdvantages out;
  out.act = normalize(ra, group_stats(ra, sample_std), eps, all_equal(ra));
  out.skill = normalize(rs, group_stats(rs, sample_std), eps, all_equal(rs));
  return out;
}

StreamAdvantages coupled_advantages(const GroupRollout& group, double eps, bool sample_std) {
  const auto ra = env_rewards(group);
  const auto rs = skill_rewards(group);
  std::vector<double> pooled = ra;
  pooled.insert(pooled.end(), rs.begin(), rs.end());
  const GroupStats s = group_stats(pooled, sample_std);
  const bool degenerate = all_equal(pooled);
  StreamAdvantages out;
  out.act = normalize(ra, s, eps, degenerate);
  out.skill = normalize(rs, s, eps, degenerate);
  return out;
}

std::vector<double> assign_token_advantages(const Trajectory& t, double a_act, double a_skill, double gamma) {
  std::vector<double> out;
  out.reserve(t.records.size());
  for (const auto& r : t.records) out.push_back(r.phase == Phase::acting ? a_act : gamma * a_skill);
  return out;
}

LossAndGrad ppo_loss_and_grad(const PolicyParams& params, const PolicyParams& old_params,
                              const PolicyParams& ref_params, std::span<const GroupRollout> groups,
                              const Assignments& assignments, double clip_eps, double beta) {
  if (!params.same_shape(old_params) || !params.same_shape(ref_params)) {
    throw ShapeMismatch("params, old and reference shapes differ");
  }
  if (assignments.size() != groups.size()) throw ShapeMismatch("one assignment list per group expected");

  LossAndGrad out;
  out.grad = params.zeros_like();
  PolicyParams kl_grad = params.zeros_like();
  std::size_t n_traj = 0, n_records = 0;
  double surrogate = 0.0, kl = 0.0;

  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& trajs = groups[g].trajectories;
    if (assignments[g].size() != trajs.size()) throw ShapeMismatch("assignment count differs from group size");
    for (std::size_t j = 0; j < trajs.size(); ++j) {
      const auto& recs = trajs[j].records;
      const auto& adv = assignments[g][j];
      if (adv.size() != recs.size()) throw ShapeMismatch("advantage list length differs from record count");
      ++n_traj;
      if (recs.empty()) continue;
      const double inv_len = 1.0 / static_cast<double>(recs.size());
      double traj_obj = 0.0;
      for (std::size_t l = 0; l < recs.size(); ++l) {
        const auto lg = record_logprob_and_grad(params, recs[l]);
        const double old_lp = record_logprob_and_grad(old_params, recs[l]).log_prob;
        const double ratio = std::exp(lg.log_prob - old_lp);
        const double a = adv[l];
        const double unclipped = ratio * a;
        const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * a;
        if (unclipped <= clipped) {
          traj_obj += unclipped;
          // d(ratio)/d(theta) = ratio * grad log pi
          out.grad.add_scaled(lg.grad, -inv_len * a * ratio);
        } else {
          traj_obj += clipped;
          ++out.clipped;
        }
        kl += record_kl(params, ref_params, recs[l]);
        kl_grad.add_scaled(record_kl_grad(params, ref_params, recs[l]), 1.0);
        ++n_records;
      }
      surrogate -= inv_len * traj_obj;
    }
  }
  if (n_traj == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n_traj);
  out.surrogate = surrogate * inv_n;
  out.grad.acting *= inv_n;
  out.grad.skill *= inv_n;
  if (n_records > 0) {
    out.kl = kl / static_cast<double>(n_records);
    out.grad.add_scaled(kl_grad, beta / static_cast<double>(n_records));
  }
  out.loss = out.surrogate + beta * out.kl;
  return out;
}

}  // namespace skillmaster
