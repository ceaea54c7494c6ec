#include "skillmaster/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "skillmaster/errors.hpp"

namespace skillmaster {

// ---------------------------------------------------------------------------
// Config

void Ablations::set(const std::string& names) {
  for (const auto& raw : split_list(names)) {
    const std::string n = trim(raw);
    if (n == "none") {
      *this = Ablations{};
    } else if (n == "no_utility") {
      no_utility = true;
    } else if (n == "coupled_norm") {
      coupled_norm = true;
    } else if (n == "random_probes") {
      random_probes = true;
    } else if (n == "review_only") {
      review_only = true;
    } else if (n == "no_coldstart") {
      no_coldstart = true;
    } else {
      throw ConfigError("unknown ablation: " + n);
    }
  }
}

std::string Ablations::names() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (on) out += (out.empty() ? "" : ",") + std::string(name);
  };
  add(no_utility, "no_utility");
  add(coupled_norm, "coupled_norm");
  add(random_probes, "random_probes");
  add(review_only, "review_only");
  add(no_coldstart, "no_coldstart");
  return out.empty() ? "none" : out;
}

TrainConfig TrainConfig::from_kv(const KvConfig& kv) {
  TrainConfig c;
  c.env = EnvConfig::from_kv(kv);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));
  c.iterations = static_cast<int>(kv.get_int("iterations", c.iterations));
  c.G = static_cast<int>(kv.get_int("group_size", c.G));
  c.K = static_cast<int>(kv.get_int("probes", c.K));
  c.alpha = kv.get_double("alpha", c.alpha);
  c.gamma = kv.get_double("gamma", c.gamma);
  c.beta = kv.get_double("beta", c.beta);
  c.clip_eps = kv.get_double("clip_eps", c.clip_eps);
  c.stability_eps = kv.get_double("stability_eps", c.stability_eps);
  c.sample_std = kv.get_bool("sample_std", c.sample_std);
  c.lr = kv.get_double("lr", c.lr);
  c.retrieval_limit = static_cast<std::size_t>(kv.get_int("retrieval_limit", static_cast<long long>(c.retrieval_limit)));
  c.tasks_per_iteration = static_cast<int>(kv.get_int("tasks_per_iteration", c.tasks_per_iteration));
  c.probe_repeats = static_cast<int>(kv.get_int("probe_repeats", c.probe_repeats));
  c.bc_epochs = static_cast<int>(kv.get_int("bc.epochs", c.bc_epochs));
  c.bc_lr = kv.get_double("bc.lr", c.bc_lr);
  c.demos_per_family = static_cast<int>(kv.get_int("bc.demos_per_family", c.demos_per_family));
  c.seed_bank = kv.get_string("seed_bank", c.seed_bank);
  c.ablation.set(kv.get_string("ablation", "none"));
  c.ablation.bank_fraction = kv.get_double("bank_fraction", c.ablation.bank_fraction);
  c.checkpoint_every = static_cast<int>(kv.get_int("checkpoint_every", c.checkpoint_every));
  c.wall_clock = kv.get_bool("metrics.wall_clock", c.wall_clock);
  c.validate();
  return c;
}

KvConfig TrainConfig::to_kv() const {
  KvConfig kv;
  env.write_kv(kv);
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  kv.set("seed", std::to_string(seed));
  kv.set("iterations", std::to_string(iterations));
  kv.set("group_size", std::to_string(G));
  kv.set("probes", std::to_string(K));
  kv.set("alpha", num(alpha));
  kv.set("gamma", num(gamma));
  kv.set("beta", num(beta));
  kv.set("clip_eps", num(clip_eps));
  kv.set("stability_eps", num(stability_eps));
  kv.set("sample_std", sample_std ? "true" : "false");
  kv.set("lr", num(lr));
  kv.set("retrieval_limit", std::to_string(retrieval_limit));
  kv.set("tasks_per_iteration", std::to_string(tasks_per_iteration));
  kv.set("probe_repeats", std::to_string(probe_repeats));
  kv.set("bc.epochs", std::to_string(bc_epochs));
  kv.set("bc.lr", num(bc_lr));
  kv.set("bc.demos_per_family", std::to_string(demos_per_family));
  kv.set("seed_bank", seed_bank);
  kv.set("ablation", ablation.names());
  kv.set("bank_fraction", num(ablation.bank_fraction));
  kv.set("checkpoint_every", std::to_string(checkpoint_every));
  kv.set("metrics.wall_clock", wall_clock ? "true" : "false");
  return kv;
}

void TrainConfig::validate() const {
  if (G < 2) throw ConfigError("group_size must be at least 2");
  if (K < 1) throw ConfigError("probes must be at least 1");
  if (iterations < 0) throw ConfigError("iterations must be non-negative");
  if (ablation.bank_fraction < 0.0 || ablation.bank_fraction > 1.0) {
    throw ConfigError("bank_fraction must lie in [0, 1]");
  }
  if (retrieval_limit < 1) throw ConfigError("retrieval_limit must be positive");
  if (tasks_per_iteration < 1) throw ConfigError("tasks_per_iteration must be positive");
  if (gamma < 0.0 || beta < 0.0 || clip_eps <= 0.0 || stability_eps <= 0.0 || lr < 0.0) {
    throw ConfigError("gamma, beta, lr must be non-negative and clip_eps, stability_eps positive");
  }
  if (bc_epochs < 0 || demos_per_family < 1 || probe_repeats < 1) {
    throw ConfigError("bc.epochs, bc.demos_per_family and probe_repeats out of range");
  }
  if (env.tasks_train < 1) throw ConfigError("tasks.train must be positive");
  if (env.tasks_probe < K) throw ConfigError("tasks.probe_pool must be at least the probe count");
}

// ---------------------------------------------------------------------------
// Metrics and evaluation

std::string format_metrics_row(const MetricsRow& r) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%d,%d,%llu,%zu,%d,%.3f", r.iter, r.mean_r_env,
                r.success, r.mean_steps, r.mean_r_format, r.mean_r_utility, r.n_propose, r.n_update, r.n_keep,
                static_cast<unsigned long long>(r.bank_version), r.bank_size, r.probe_rollouts, r.wall_secs);
  return buf;
}

EvalReport evaluate(const Environment& env, const PolicyParams& params, const SkillBank& bank, Split split,
                    bool with_retrieval, std::size_t retrieval_limit) {
  EvalReport rep;
  rep.split = std::string(to_string(split));
  rep.with_retrieval = with_retrieval;
  EpisodeOptions opts;
  opts.mode = Mode::greedy;
  opts.retrieval_limit = retrieval_limit;
  opts.with_retrieval = with_retrieval;
  for (const auto& f : env.config().families) rep.families.push_back({f});
  double steps_total = 0.0;
  int successes = 0;
  for (const auto& task : env.enumerate_tasks(split)) {
    const Trajectory t = run_episode(env, params, bank, task, opts);
    auto& fr = rep.families[env.config().family_index(task.family)];
    ++fr.tasks;
    fr.successes += t.success ? 1 : 0;
    fr.mean_steps += t.steps;
    ++rep.tasks;
    successes += t.success ? 1 : 0;
    steps_total += t.steps;
  }
  for (auto& fr : rep.families) {
    if (fr.tasks == 0) continue;
    fr.success_rate = static_cast<double>(fr.successes) / fr.tasks;
    fr.mean_steps /= fr.tasks;
  }
  if (rep.tasks > 0) {
    rep.success_rate = static_cast<double>(successes) / rep.tasks;
    rep.mean_steps = steps_total / rep.tasks;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Seed banks

namespace {

Skill seed_skill(int n, const std::string& category, const std::string& title, const std::string& principle,
                 const std::string& when) {
  Skill s;
  char id[16];
  std::snprintf(id, sizeof id, "sk-%06d", n);
  s.id = id;
  s.category = category;
  s.title = title;
  s.principle = principle;
  s.when_to_apply = when;
  s.evidence_or_reason = "Seed skill.";
  s.directives = derive_directives(principle);
  return s;
}

}  // namespace

SkillBank builtin_seed_bank(const std::string& env_kind) {
  SkillBank b;
  if (env_kind == "household") {
    b.general = {
        seed_skill(1, "general", "Systematic Exploration",
                   "Visit each unexplored location once before revisiting any, and note every object you pass.",
                   "Looking for an object whose location is unknown."),
        seed_skill(2, "general", "Immediate Acquisition",
                   "Take a target object as soon as it is visible instead of coming back for it later.",
                   "A target object is in view."),
        seed_skill(3, "general", "Destination First Policy",
                   "Once a finished target is in hand, go straight to the destination and put it there.",
                   "Holding a target that needs no further processing."),
    };
    b.by_category["heat"] = {seed_skill(4, "heat", "Open Then Heat",
                                        "Open the microwave, place the food inside, then start heating.",
                                        "Any task that asks you to heat food.")};
    b.by_category["pick2"] = {seed_skill(5, "pick2", "Track Both Targets",
                                         "Deliver one target at a time and keep count until both are at the destination.",
                                         "Tasks that ask for two objects.")};
    b.by_category["look"] = {seed_skill(6, "look", "Use The Desk Lamp",
                                        "Find the object, bring it to the desk and switch on the lamp.",
                                        "Tasks that ask you to examine an object under light.")};
  } else if (env_kind == "shop") {
    b.general = {
        seed_skill(1, "general", "Match Every Attribute",
                   "Compare each attribute named in the request with the product page before buying.",
                   "A product page is open."),
    };
    b.by_category["apparel"] = {seed_skill(2, "apparel", "Check The Size",
                                           "Confirm the size on the product page matches the request.",
                                           "Buying clothing.")};
  } else {
    throw ConfigError("no builtin seed bank for env kind " + env_kind);
  }
  return b;
}

// ---------------------------------------------------------------------------
// Cold start

PolicyParams initial_params(const Environment& env) {
  return PolicyParams::zeros(env.num_actions(), env.num_features(), skill_feature_size(env.config().families.size()));
}

std::vector<Demo> make_demos(const Environment& env, int per_family, std::uint64_t seed) {
  const auto& cfg = env.config();
  std::vector<Demo> demos;
  for (std::size_t fi = 0; fi < cfg.families.size(); ++fi) {
    const std::string& family = cfg.families[fi];
    const auto op = env.operation_for(family);
    const auto prior = env.search_prior(family);
    for (int e = 0; e < per_family; ++e) {
      Rng rng(derive_seed(seed, fi * 100003 + static_cast<std::uint64_t>(e)));
      const std::uint64_t world =
          cfg.seed_train_base + fi * 1000 + static_cast<std::uint64_t>(e % std::max(1, cfg.tasks_train));
      const TaskSpec task = env.make_task(family, world);

      auto random_locations = [&]() {
        std::vector<std::string> locs = cfg.locations;
        rng.shuffle(std::span<std::string>(locs));
        locs.resize(1 + rng.below(std::min<std::size_t>(3, locs.size())));
        return locs;
      };
      std::vector<Skill> skills;
      auto add = [&](Directive d) {
        Skill s;
        s.id = "demo-" + std::to_string(skills.size());
        s.category = family;
        s.title = "demo";
        s.directives = {std::move(d)};
        skills.push_back(std::move(s));
      };
      if (op && rng.uniform() < 0.5) add({Directive::Kind::hold_while, {*op}});
      const double u = rng.uniform();
      if (!prior.empty() && u < 0.35) {
        add({Directive::Kind::prefer_locations, prior});
      } else if (u < 0.6) {
        add({Directive::Kind::prefer_locations, random_locations()});
      }
      if (rng.uniform() < 0.25) add({Directive::Kind::avoid_locations, random_locations()});

      const DirectiveSignals sig = env.directive_signals(skills, family);
      EnvState s = env.reset(task);
      while (!s.done) {
        const std::size_t a = env.oracle_action(s, sig);
        demos.push_back({env.featurize(env.observe(s), skills, family), a});
        env.advance(s, a);
      }
    }
  }
  return demos;
}

// ---------------------------------------------------------------------------
// Skill-mastery turn and scoring

SkillTurn skill_mastery_turn(const Environment& env, const PolicyParams& params, const Trajectory& trajectory,
                             const SkillBank& bank, Rng* rng) {
  const auto candidates = mine_edit_candidates(env, trajectory, trajectory.retrieved, bank);
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(candidates.size()), params.skill.cols());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    phi.row(static_cast<Eigen::Index>(i)) = candidates[i].features.transpose();
  }
  const Eigen::VectorXd p = skill_distribution(params, phi);
  const std::size_t k = rng ? rng->categorical(p) : argmax(p);
  SkillTurn turn;
  turn.call = candidates[k].call;
  turn.rule = candidates[k].rule;
  turn.num_candidates = candidates.size();
  turn.record.phase = Phase::skill_mastery;
  turn.record.features = std::move(phi);
  turn.record.chosen = k;
  turn.record.log_prob = std::log(p[static_cast<Eigen::Index>(k)]);
  turn.record.probs = p;
  return turn;
}

ScoredDecision score_skill_decision(const Environment& env, const ToolCall& call, const Trajectory& trajectory,
                                    const SkillBank& bank, const PolicyParams& rollout_params,
                                    const TrainConfig& config, std::span<const TaskSpec> probe_pool) {
  ScoredDecision out;
  out.reward.r_env = trajectory.r_env;
  const ParseOutcome outcome = parse_tool_call(render_wire(call));
  ValidationReport report;
  if (outcome.ok()) report = validate(outcome.call(), bank, env.schema());
  out.reward.r_format = format_reward(outcome, report);
  out.executable = outcome.ok() && report.executable();

  const bool probe = is_mutation(call) && out.executable && !config.ablation.no_utility &&
                     !config.ablation.review_only;
  if (probe) {
    const auto K = static_cast<std::size_t>(config.K);
    const auto probes = config.ablation.random_probes
                            ? select_random_probes(trajectory.task.task_id, probe_pool, K)
                            : select_probes(trajectory.task.task_id, trajectory.task.family, probe_pool, K);
    out.evaluation = evaluate_mutation(env, outcome.call(), bank, rollout_params, probes, env.max_steps(),
                                       config.alpha, config.retrieval_limit, config.probe_repeats);
    out.reward.r_utility = out.evaluation->summary.r_utility;
  }
  out.reward.r_skill = out.reward.r_format + out.reward.r_utility;
  return out;
}

GroupRollout collect_group(const Environment& env, const TaskSpec& task, const PolicyParams& params,
                           const SkillBank& bank, const TrainConfig& config, std::span<const TaskSpec> probe_pool,
                           std::uint64_t group_seed) {
  GroupRollout group;
  group.prompt_id = task.task_id + "@" + std::to_string(bank.version);
  EpisodeOptions opts;
  opts.mode = Mode::sampled;
  opts.retrieval_limit = config.retrieval_limit;
  for (int g = 0; g < config.G; ++g) {
    Rng rng(derive_seed(group_seed, static_cast<std::uint64_t>(g)));
    Trajectory t = run_episode(env, params, bank, task, opts, &rng);
    SkillTurn turn = skill_mastery_turn(env, params, t, bank, &rng);
    const ScoredDecision scored = score_skill_decision(env, turn.call, t, bank, params, config, probe_pool);
    t.records.push_back(std::move(turn.record));
    t.call = std::move(turn.call);
    t.rule_id = static_cast<int>(turn.rule);
    t.reward = scored.reward;
    t.probe_rollouts = scored.evaluation ? scored.evaluation->rollouts : 0;
    group.trajectories.push_back(std::move(t));
  }
  return group;
}

BankDiff commit_rule(const GroupRollout& group, SkillBank& bank, const BankSchema& schema, std::uint64_t iteration) {
  const Trajectory* best = nullptr;
  for (const auto& t : group.trajectories) {
    if (!t.call || !is_mutation(*t.call) || !(t.reward.r_utility > 0.0)) continue;
    if (best == nullptr || t.reward.r_utility > best->reward.r_utility) best = &t;
  }
  if (best == nullptr) return {};
  // An earlier group of the same iteration may already have changed the
  // bank; a call that no longer validates is dropped.
  if (!validate(*best->call, bank, schema).executable()) return {};
  auto [next, diff] = apply_mutation(bank, *best->call, iteration);
  bank = std::move(next);
  return diff;
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(TrainConfig config) : config_(std::move(config)), rng_(derive_seed(config_.seed, 0x7a11)) {
  config_.validate();
  env_ = make_environment(config_.env);
  train_tasks_ = env_->enumerate_tasks(Split::train);
  probe_pool_ = env_->enumerate_tasks(Split::probe_pool);
  params_ = initial_params(*env_);
  ref_ = params_;
}

void Trainer::initialize() {
  if (!config_.ablation.no_coldstart) {
    const auto demos = make_demos(*env_, config_.demos_per_family, derive_seed(config_.seed, 0xde70));
    params_ = behavior_clone(params_, demos, config_.bc_epochs, config_.bc_lr);
  }
  ref_ = params_;
  SkillBank seed = config_.seed_bank == "builtin" ? builtin_seed_bank(config_.env.kind)
                                                  : load_bank(config_.seed_bank, env_->schema());
  if (config_.ablation.bank_fraction < 1.0) {
    seed = subset_bank(seed, config_.ablation.bank_fraction, derive_seed(config_.seed, 0xba4c));
  }
  bank_ = std::move(seed);
  iteration_ = 0;
  rows_.clear();
}

std::vector<TaskSpec> Trainer::schedule(int iteration) {
  const auto& families = config_.env.families;
  std::vector<TaskSpec> out;
  for (int b = 0; b < config_.tasks_per_iteration; ++b) {
    const auto slot = static_cast<std::size_t>(iteration) * static_cast<std::size_t>(config_.tasks_per_iteration) +
                      static_cast<std::size_t>(b);
    const std::size_t fi = slot % families.size();
    const auto idx = rng_.below(static_cast<std::uint64_t>(config_.env.tasks_train));
    out.push_back(train_tasks_[fi * static_cast<std::size_t>(config_.env.tasks_train) + idx]);
  }
  return out;
}

MetricsRow Trainer::step() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<TaskSpec> tasks = schedule(iteration_);
  const PolicyParams old = params_;
  const SkillBank snapshot = bank_;

  std::vector<GroupRollout> groups;
  for (std::size_t b = 0; b < tasks.size(); ++b) {
    const std::uint64_t group_seed =
        derive_seed(config_.seed, mix64(static_cast<std::uint64_t>(iteration_) * 1009 + b + 1));
    groups.push_back(collect_group(*env_, tasks[b], old, snapshot, config_, probe_pool_, group_seed));
  }

  Assignments assignments;
  for (const auto& g : groups) {
    const StreamAdvantages adv = config_.ablation.coupled_norm
                                     ? coupled_advantages(g, config_.stability_eps, config_.sample_std)
                                     : dual_advantages(g, config_.stability_eps, config_.sample_std);
    std::vector<std::vector<double>> per_traj;
    for (std::size_t j = 0; j < g.trajectories.size(); ++j) {
      per_traj.push_back(assign_token_advantages(g.trajectories[j], adv.act[j], adv.skill[j], config_.gamma));
    }
    assignments.push_back(std::move(per_traj));
  }
  const LossAndGrad lg = ppo_loss_and_grad(params_, old, ref_, groups, assignments, config_.clip_eps, config_.beta);
  params_.add_scaled(lg.grad, -config_.lr);

  for (const auto& g : groups) commit_rule(g, bank_, env_->schema(), static_cast<std::uint64_t>(iteration_) + 1);

  MetricsRow row;
  row.iter = iteration_;
  int n = 0;
  for (const auto& g : groups) {
    for (const auto& t : g.trajectories) {
      ++n;
      row.mean_r_env += t.reward.r_env;
      row.success += t.success ? 1.0 : 0.0;
      row.mean_steps += t.steps;
      row.mean_r_format += t.reward.r_format;
      row.mean_r_utility += t.reward.r_utility;
      row.probe_rollouts += t.probe_rollouts;
      switch (tool_kind(*t.call)) {
        case ToolKind::propose: ++row.n_propose; break;
        case ToolKind::update: ++row.n_update; break;
        case ToolKind::keep: ++row.n_keep; break;
      }
    }
  }
  if (n > 0) {
    row.mean_r_env /= n;
    row.success /= n;
    row.mean_steps /= n;
    row.mean_r_format /= n;
    row.mean_r_utility /= n;
  }
  row.bank_version = bank_.version;
  row.bank_size = bank_.size();
  if (config_.wall_clock) {
    row.wall_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  rows_.push_back(row);
  last_groups_ = std::move(groups);
  ++iteration_;
  return row;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Everything except the iteration budget must match to resume.
std::string resume_key(const TrainConfig& c) {
  KvConfig kv = c.to_kv();
  kv.set("iterations", "-");
  kv.set("checkpoint_every", "-");
  return kv.dump();
}

}  // namespace

void Trainer::save_checkpoint(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  save_params(params_, dir / "params.txt");
  save_params(ref_, dir / "ref_params.txt");
  save_bank(bank_, dir / "bank.json");
  write_text(dir / "config.txt", config_.to_kv().dump());
  write_text(dir / "rng.txt", rng_.state() + "\n");
  std::string metrics = std::string(kMetricsHeader) + "\n";
  for (const auto& r : rows_) metrics += format_metrics_row(r) + "\n";
  write_text(dir / "metrics.csv", metrics);
  // Written last: a checkpoint without it is incomplete.
  write_text(dir / "state.txt", "iteration " + std::to_string(iteration_) + "\n");
}

void Trainer::resume(const std::filesystem::path& dir) {
  const TrainConfig saved = TrainConfig::from_kv(KvConfig::load(dir / "config.txt"));
  if (resume_key(saved) != resume_key(config_)) {
    throw ConfigError("checkpoint in " + dir.string() + " was written with a different config");
  }
  std::istringstream state(read_text(dir / "state.txt"));
  std::string tag;
  if (!(state >> tag >> iteration_) || tag != "iteration" || iteration_ < 0) {
    throw std::runtime_error("bad checkpoint state in " + dir.string());
  }
  params_ = load_params(dir / "params.txt");
  ref_ = load_params(dir / "ref_params.txt");
  if (!params_.same_shape(initial_params(*env_)) || !ref_.same_shape(params_)) {
    throw ShapeMismatch("checkpoint params do not match the environment");
  }
  bank_ = load_bank(dir / "bank.json", env_->schema());
  rng_.restore(read_text(dir / "rng.txt"));
  rows_.clear();
  std::istringstream metrics(read_text(dir / "metrics.csv"));
  std::string line;
  std::getline(metrics, line);
  while (std::getline(metrics, line)) {
    if (line.empty()) continue;
    MetricsRow r;
    unsigned long long version = 0;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf,%d,%d,%d,%llu,%zu,%d,%lf", &r.iter, &r.mean_r_env,
                    &r.success, &r.mean_steps, &r.mean_r_format, &r.mean_r_utility, &r.n_propose, &r.n_update,
                    &r.n_keep, &version, &r.bank_size, &r.probe_rollouts, &r.wall_secs) != 13) {
      throw std::runtime_error("bad metrics row in checkpoint: " + line);
    }
    r.bank_version = version;
    rows_.push_back(r);
  }
}

TrainingReport train(const TrainConfig& config, const TrainHooks& hooks) {
  Trainer trainer(config);
  if (hooks.resume_from) {
    trainer.resume(*hooks.resume_from);
  } else {
    trainer.initialize();
  }
  TrainingReport report;
  report.initial_eval = evaluate(trainer.env(), trainer.params(), trainer.bank(), Split::test, true,
                                 config.retrieval_limit);
  while (!trainer.finished()) {
    const MetricsRow row = trainer.step();
    if (hooks.on_row) hooks.on_row(row);
    if (hooks.checkpoint_dir && config.checkpoint_every > 0 && trainer.iteration() % config.checkpoint_every == 0) {
      trainer.save_checkpoint(*hooks.checkpoint_dir);
    }
  }
  if (hooks.checkpoint_dir) trainer.save_checkpoint(*hooks.checkpoint_dir);
  report.rows = trainer.rows();
  report.final_eval = evaluate(trainer.env(), trainer.params(), trainer.bank(), Split::test, true,
                               config.retrieval_limit);
  report.bank = trainer.bank();
  report.params = trainer.params();
  return report;
}

}  // namespace skillmaster
