#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "skillmaster/errors.hpp"
#include "skillmaster/household_env.hpp"
#include "skillmaster/probe_eval.hpp"
#include "support.hpp"

using namespace skillmaster;

namespace {

// Independent restatement of the utility formula.
double oracle_utility(const std::vector<double>& d, double alpha) {
  double sum = 0.0;
  int w = 0, l = 0;
  for (double x : d) {
    sum += x;
    if (x > 0) ++w;
    if (x < 0) ++l;
  }
  const double k = static_cast<double>(d.size());
  return sum / k + alpha * (w - l) / k;
}

}  // namespace

TEST_CASE("probe score examples") {
  CHECK(probe_score(false, 7, 30) == 0.0);
  CHECK(probe_score(false, 30, 30) == 0.0);
  CHECK(probe_score(true, 30, 30) == 1.0);
  CHECK(std::abs(probe_score(true, 12, 30) - 1.6) < 1e-15);
  CHECK(probe_score(true, 0, 30) == 2.0);
}

TEST_CASE("utility examples") {
  const std::vector<double> zeros{0, 0, 0, 0};
  const auto z = utility_reward(zeros, 0.3);
  CHECK(z.r_utility == 0.0);
  CHECK(z.wins == 0);
  CHECK(z.losses == 0);

  const std::vector<double> up{0.6, 0.6, 0.6, 0.6};
  const auto u = utility_reward(up, 0.3);
  CHECK(std::abs(u.r_utility - 0.9) < 1e-12);
  CHECK(u.wins == 4);

  const std::vector<double> mixed{0.5, -0.5, 0.25, -0.25};
  const auto m = utility_reward(mixed, 0.3);
  CHECK(m.mean_delta == 0.0);
  CHECK(m.wins == 2);
  CHECK(m.losses == 2);
  CHECK(m.r_utility == 0.0);
}

TEST_CASE("utility properties on random deltas") {
  Rng rng(8);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t k = 1 + rng.below(8);
    const double alpha = rng.uniform();
    std::vector<double> d(k);
    for (auto& x : d) x = rng.below(4) == 0 ? 0.0 : 4.0 * rng.uniform() - 2.0;
    const auto s = utility_reward(d, alpha);
    CHECK(std::abs(s.r_utility - oracle_utility(d, alpha)) < 1e-12);
    CHECK(s.wins + s.losses <= static_cast<int>(k));
    CHECK(std::abs(s.r_utility) <= 2.0 + alpha + 1e-12);
    // The summary identity is exact.
    CHECK(s.r_utility == s.mean_delta + s.alpha * static_cast<double>(s.wins - s.losses) / s.K);

    std::vector<double> neg(d);
    for (auto& x : neg) x = -x;
    const auto n = utility_reward(neg, alpha);
    CHECK(n.wins == s.losses);
    CHECK(n.losses == s.wins);
    CHECK(std::abs(n.r_utility + s.r_utility) < 1e-12);

    std::vector<double> bumped(d);
    const std::size_t i = rng.below(k);
    bumped[i] = std::min(2.0, bumped[i] + rng.uniform());
    CHECK(utility_reward(bumped, alpha).r_utility >= s.r_utility - 1e-12);
  }
}

TEST_CASE("select_probes: deterministic, same family, excludes current") {
  const HouseholdEnv env(EnvConfig::household_defaults());
  const auto pool = env.enumerate_tasks(Split::probe_pool);
  const std::string current = pool[3].task_id;
  const auto a = select_probes(current, "heat", pool, 4);
  CHECK(a == select_probes(current, "heat", pool, 4));
  REQUIRE(a.size() == 4);
  std::set<std::string> ids;
  for (const auto& t : a) {
    CHECK(t.family == "heat");
    CHECK(t.task_id != current);
    ids.insert(t.task_id);
  }
  CHECK(ids.size() == 4);

  // The current task is skipped even when it is in the pool.
  std::string heat_id;
  for (const auto& t : pool) {
    if (t.family == "heat") heat_id = t.task_id;
  }
  for (const auto& t : select_probes(heat_id, "heat", pool, 23)) CHECK(t.task_id != heat_id);
  CHECK_THROWS_AS(select_probes(heat_id, "heat", pool, 24), InsufficientProbes);

  std::vector<TaskSpec> small;
  for (const auto& t : pool) {
    if (t.family == "cool" && small.size() < 3) small.push_back(t);
  }
  CHECK_THROWS_AS(select_probes("x", "cool", small, 4), InsufficientProbes);

  // Different current tasks usually give different selections.
  int differ = 0;
  for (std::size_t i = 0; i < 10; ++i) differ += select_probes(pool[i].task_id, "heat", pool, 4) != a;
  CHECK(differ >= 5);
}

TEST_CASE("select_random_probes ignores family") {
  const HouseholdEnv env(EnvConfig::household_defaults());
  const auto pool = env.enumerate_tasks(Split::probe_pool);
  std::set<std::string> families;
  for (int i = 0; i < 20; ++i) {
    const auto r = select_random_probes(pool[static_cast<std::size_t>(i)].task_id, pool, 4);
    CHECK(r.size() == 4);
    for (const auto& t : r) families.insert(t.family);
  }
  CHECK(families.size() > 1);
}

TEST_CASE("evaluate_mutation: keep is refused, no-op edits score zero, bank untouched") {
  const HouseholdEnv env(EnvConfig::household_defaults());
  const auto pool = env.enumerate_tasks(Split::probe_pool);
  const auto probes = select_probes("none", "heat", pool, 4);
  Rng rng(1);
  PolicyParams p = PolicyParams::zeros(env.num_actions(), env.num_features(),
                                       skill_feature_size(env.config().families.size()));
  for (std::size_t i = 0; i < p.size(); ++i) p.at(i) = rng.uniform() - 0.5;

  SkillBank bank;
  testsupport::add_skill(bank, testsupport::make_skill("sk-000001", "heat", 0, "Open Then Heat"));
  const SkillBank snapshot = bank;

  CHECK_THROWS_AS(evaluate_mutation(env, KeepSkill{"r"}, bank, p, probes, 30, 0.3), ProgrammingError);

  // A directive-free skill changes no feature, so paired rollouts match.
  const ProposeSkill plain{"heat", "Be Careful", "Work carefully and calmly.", "Always.", "None."};
  const auto ev = evaluate_mutation(env, plain, bank, p, probes, 30, 0.3);
  REQUIRE(ev.reports.size() == 4);
  CHECK(ev.rollouts == 8);
  for (const auto& r : ev.reports) {
    CHECK(r.delta == 0.0);
    CHECK(r.steps_before == r.steps_after);
    CHECK(r.delta == r.score_after - r.score_before);
    CHECK((r.success_before || r.score_before == 0.0));
  }
  CHECK(ev.summary.r_utility == 0.0);
  CHECK(bank == snapshot);

  CHECK_THROWS_AS(evaluate_mutation(env, UpdateSkill{"sk-000404", "T", "Keep holding it while you heat it.", "W", "R"},
                                    bank, p, probes, 30, 0.3),
                  UnknownSkillId);
}
