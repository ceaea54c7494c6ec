#include "skillmaster/cli.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"

#include "skillmaster/errors.hpp"

namespace skillmaster {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

std::string lpad(const std::string& s, std::size_t width) {
  return s.size() >= width ? " " + s : std::string(width - s.size(), ' ') + s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Checkpoint {
  TrainConfig config;
  PolicyParams params;
  SkillBank bank;
};

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  Checkpoint c;
  c.config = TrainConfig::from_kv(KvConfig::load(dir / "config.txt"));
  c.params = load_params(dir / "params.txt");
  const auto env = make_environment(c.config.env);
  c.bank = load_bank(dir / "bank.json", env->schema());
  if (!c.params.same_shape(initial_params(*env))) throw ShapeMismatch("checkpoint params do not fit the environment");
  return c;
}

BankSchema schema_for(const std::string& env_kind) {
  EnvConfig cfg = env_kind == "shop" ? EnvConfig::shop_defaults() : EnvConfig::household_defaults();
  if (env_kind != "shop" && env_kind != "household") throw ConfigError("unknown env kind: " + env_kind);
  return make_environment(cfg)->schema();
}

}  // namespace

std::string render_eval_table(const EvalReport& r) {
  std::string out = "split=" + r.split + " retrieval=" + (r.with_retrieval ? "on" : "off") + "\n";
  out += pad("family", 14) + lpad("tasks", 6) + lpad("success", 9) + lpad("steps", 8) + "\n";
  for (const auto& f : r.families) {
    out += pad(f.family, 14) + lpad(std::to_string(f.tasks), 6) + lpad(fmt("%.3f", f.success_rate), 9) +
           lpad(fmt("%.2f", f.mean_steps), 8) + "\n";
  }
  out += pad("All", 14) + lpad(std::to_string(r.tasks), 6) + lpad(fmt("%.3f", r.success_rate), 9) +
         lpad(fmt("%.2f", r.mean_steps), 8) + "\n";
  return out;
}

std::string render_eval_delta(const EvalReport& with, const EvalReport& without) {
  std::string out = "split=" + with.split + " success with / without retrieval\n";
  out += pad("family", 14) + lpad("with", 8) + lpad("without", 9) + lpad("delta", 8) + lpad("steps_w", 9) +
         lpad("steps_wo", 10) + "\n";
  for (std::size_t i = 0; i < with.families.size(); ++i) {
    const auto& a = with.families[i];
    const auto& b = without.families[i];
    out += pad(a.family, 14) + lpad(fmt("%.3f", a.success_rate), 8) + lpad(fmt("%.3f", b.success_rate), 9) +
           lpad(fmt("%+.3f", a.success_rate - b.success_rate), 8) + lpad(fmt("%.2f", a.mean_steps), 9) +
           lpad(fmt("%.2f", b.mean_steps), 10) + "\n";
  }
  out += pad("All", 14) + lpad(fmt("%.3f", with.success_rate), 8) + lpad(fmt("%.3f", without.success_rate), 9) +
         lpad(fmt("%+.3f", with.success_rate - without.success_rate), 8) + lpad(fmt("%.2f", with.mean_steps), 9) +
         lpad(fmt("%.2f", without.mean_steps), 10) + "\n";
  return out;
}

std::string render_bank(const SkillBank& bank) {
  std::string out = "bank version " + std::to_string(bank.version) + ", " + std::to_string(bank.size()) + " skills\n";
  auto list = [&](const std::string& cat, const std::vector<Skill>& skills) {
    if (skills.empty()) return;
    out += "[" + cat + "]\n";
    for (const auto& s : skills) {
      out += "  " + s.id + "  " + s.title + " (rev " + std::to_string(s.revision) + ")\n";
      out += "      principle: " + s.principle + "\n";
      out += "      when: " + s.when_to_apply + "\n";
      for (const auto& d : s.directives) {
        std::string args;
        for (const auto& a : d.args) args += (args.empty() ? "" : ",") + a;
        out += "      directive: " + std::string(to_string(d.kind)) + "(" + args + ")\n";
      }
    }
  };
  list(kGeneralCategory, bank.general);
  for (const auto& [cat, skills] : bank.by_category) list(cat, skills);
  return out;
}

std::string render_bank_diff(const SkillBank& before, const SkillBank& after) {
  const auto diffs = diff_banks(before, after);
  if (diffs.empty() && before.version == after.version) return "no differences\n";
  std::string out;
  if (before.version != after.version) {
    out += "version " + std::to_string(before.version) + " -> " + std::to_string(after.version) + "\n";
  }
  for (const auto& d : diffs) {
    if (d.kind == BankDiff::Kind::added) {
      out += "added   " + *d.skill_id + " [" + d.after->category + "] " + d.after->title + "\n";
    } else if (d.kind == BankDiff::Kind::updated) {
      out += "updated " + *d.skill_id + " [" + d.after->category + "] \"" + d.before->title + "\" -> \"" +
             d.after->title + "\" (rev " + std::to_string(d.before->revision) + " -> " +
             std::to_string(d.after->revision) + ")\n";
    }
  }
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Skill-bank agent training toolkit", "skillmaster"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "Run the training loop");
  std::string config_path, out_dir = "run", resume_dir;
  std::optional<long long> seed, iterations, probes;
  std::optional<double> gamma, alpha, bank_fraction;
  std::optional<std::string> env_kind;
  std::vector<std::string> ablations;
  train_cmd->add_option("--config", config_path, "Flat key = value config file")->required();
  train_cmd->add_option("--out", out_dir, "Output directory (metrics.csv, checkpoint/, final_bank.json)");
  train_cmd->add_option("--seed", seed);
  train_cmd->add_option("--iterations", iterations);
  train_cmd->add_option("--gamma", gamma);
  train_cmd->add_option("--alpha", alpha);
  train_cmd->add_option("--probes", probes, "Probe count K");
  train_cmd->add_option("--ablation", ablations, "no_utility|coupled_norm|random_probes|review_only|no_coldstart");
  train_cmd->add_option("--bank-fraction", bank_fraction);
  train_cmd->add_option("--env", env_kind, "household|shop");
  train_cmd->add_option("--resume", resume_dir, "Checkpoint directory to continue from");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  std::string eval_ckpt, split_name = "test";
  bool no_retrieval = false, compare = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--split", split_name, "train|probe_pool|test");
  eval_cmd->add_flag("--no-retrieval", no_retrieval, "Pass no skills to the policy");
  eval_cmd->add_flag("--compare", compare, "Run with and without retrieval and print the per-family delta");

  // probe
  auto* probe_cmd = app.add_subcommand("probe", "Counterfactual evaluation of one mutation");
  std::string probe_ckpt, probe_bank, mutation_file, probe_task, probe_family;
  probe_cmd->add_option("--checkpoint", probe_ckpt)->required();
  probe_cmd->add_option("--bank", probe_bank, "Bank file (default: the checkpoint's)");
  probe_cmd->add_option("--mutation", mutation_file, "File holding one wire-format tool call")->required();
  probe_cmd->add_option("--task", probe_task, "Current task id (default: first train task of the family)");
  probe_cmd->add_option("--family", probe_family, "Probe family when the skill category is general");

  // bank
  auto* bank_cmd = app.add_subcommand("bank", "Inspect bank files");
  bank_cmd->require_subcommand(1);
  std::string bank_env = "household";
  bank_cmd->add_option("--env", bank_env, "Schema used for validation: household|shop");
  auto* show_cmd = bank_cmd->add_subcommand("show");
  std::string show_path;
  show_cmd->add_option("path", show_path)->required();
  auto* diff_cmd = bank_cmd->add_subcommand("diff");
  std::string diff_a, diff_b;
  diff_cmd->add_option("before", diff_a)->required();
  diff_cmd->add_option("after", diff_b)->required();
  auto* validate_cmd = bank_cmd->add_subcommand("validate");
  std::string validate_path;
  validate_cmd->add_option("path", validate_path)->required();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (train_cmd->parsed()) {
      if (!std::filesystem::exists(config_path)) {
        err << "error: config file not found: " << config_path << "\n";
        return 2;
      }
      KvConfig kv = KvConfig::load(config_path);
      if (env_kind) kv.set("env", *env_kind);
      if (seed) kv.set("seed", std::to_string(*seed));
      if (iterations) kv.set("iterations", std::to_string(*iterations));
      if (probes) kv.set("probes", std::to_string(*probes));
      auto num = [](double v) { return fmt("%.17g", v); };
      if (gamma) kv.set("gamma", num(*gamma));
      if (alpha) kv.set("alpha", num(*alpha));
      if (bank_fraction) kv.set("bank_fraction", num(*bank_fraction));
      if (!ablations.empty()) {
        std::string joined = kv.get_string("ablation", "none");
        for (const auto& a : ablations) joined += "," + a;
        kv.set("ablation", joined);
      }
      // Relative bank paths are taken from the config file's directory.
      const std::string bank = kv.get_string("seed_bank", "builtin");
      if (bank != "builtin" && std::filesystem::path(bank).is_relative()) {
        kv.set("seed_bank", (std::filesystem::path(config_path).parent_path() / bank).lexically_normal().string());
      }
      const TrainConfig config = TrainConfig::from_kv(kv);

      const std::filesystem::path dir(out_dir);
      std::filesystem::create_directories(dir);
      const auto metrics_path = dir / "metrics.csv";
      {
        std::ofstream m(metrics_path, std::ios::binary | std::ios::trunc);
        m << kMetricsHeader << "\n";
        if (!resume_dir.empty()) {
          // Carry over the rows the checkpoint already has.
          std::istringstream prior(read_file((std::filesystem::path(resume_dir) / "metrics.csv").string()));
          std::string line;
          std::getline(prior, line);
          while (std::getline(prior, line))
            if (!line.empty()) m << line << "\n";
        }
        if (!m) throw std::runtime_error("cannot write " + metrics_path.string());
      }
      std::ofstream metrics(metrics_path, std::ios::binary | std::ios::app);
      TrainHooks hooks;
      hooks.checkpoint_dir = dir / "checkpoint";
      if (!resume_dir.empty()) hooks.resume_from = std::filesystem::path(resume_dir);
      hooks.on_row = [&](const MetricsRow& row) {
        // One write per row so an interrupted run leaves whole lines only.
        const std::string line = format_metrics_row(row) + "\n";
        metrics.write(line.data(), static_cast<std::streamsize>(line.size()));
        metrics.flush();
      };
      std::ofstream(dir / "config.txt", std::ios::binary) << config.to_kv().dump();
      const TrainingReport report = train(config, hooks);
      save_bank(report.bank, dir / "final_bank.json");
      out << "initial " << render_eval_table(report.initial_eval);
      out << "final " << render_eval_table(report.final_eval);
      return 0;
    }

    if (eval_cmd->parsed()) {
      const Split split = split_from_string(split_name);
      const Checkpoint c = load_checkpoint(eval_ckpt);
      const auto env = make_environment(c.config.env);
      if (compare) {
        const EvalReport with = evaluate(*env, c.params, c.bank, split, true, c.config.retrieval_limit);
        const EvalReport without = evaluate(*env, c.params, c.bank, split, false, c.config.retrieval_limit);
        out << render_eval_table(with) << render_eval_table(without) << render_eval_delta(with, without);
      } else {
        out << render_eval_table(evaluate(*env, c.params, c.bank, split, !no_retrieval, c.config.retrieval_limit));
      }
      return 0;
    }

    if (probe_cmd->parsed()) {
      const Checkpoint c = load_checkpoint(probe_ckpt);
      const auto env = make_environment(c.config.env);
      const SkillBank bank = probe_bank.empty() ? c.bank : load_bank(probe_bank, env->schema());
      const ParseOutcome parsed = parse_tool_call(read_file(mutation_file));
      if (!parsed.ok()) {
        err << "parse failure: " << to_string(parsed.failure()) << "\n";
        return 2;
      }
      const ToolCall& call = parsed.call();
      if (!is_mutation(call)) {
        err << "keep_skill leaves the bank unchanged; there is nothing to probe\n";
        return 2;
      }
      const ValidationReport report = validate(call, bank, env->schema());
      if (!report.executable()) {
        for (auto f : report.flags) err << "validation: " << to_string(f) << "\n";
        return 2;
      }
      std::string family = probe_family;
      if (family.empty()) {
        if (const auto* p = std::get_if<ProposeSkill>(&call)) {
          family = p->category;
        } else {
          family = resolve_update_target(bank, std::get<UpdateSkill>(call).skill_id)->category;
        }
      }
      if (family == kGeneralCategory) {
        err << "general skill: pass --family to choose the probe family\n";
        return 2;
      }
      std::string task_id = probe_task;
      if (task_id.empty()) {
        for (const auto& t : env->enumerate_tasks(Split::train)) {
          if (t.family == family) {
            task_id = t.task_id;
            break;
          }
        }
      }
      const auto pool = env->enumerate_tasks(Split::probe_pool);
      const auto probes = select_probes(task_id, family, pool, static_cast<std::size_t>(c.config.K));
      const auto ev = evaluate_mutation(*env, call, bank, c.params, probes, env->max_steps(), c.config.alpha,
                                        c.config.retrieval_limit, c.config.probe_repeats);
      for (const auto& r : ev.reports) {
        out << r.probe_task_id << " before=" << fmt("%.4f", r.score_before) << " (" << r.steps_before
            << " steps, " << (r.success_before ? "success" : "failure") << ") after=" << fmt("%.4f", r.score_after)
            << " (" << r.steps_after << " steps, " << (r.success_after ? "success" : "failure")
            << ") delta=" << fmt("%+.4f", r.delta) << "\n";
      }
      const auto& u = ev.summary;
      out << "mean_delta=" << fmt("%.4f", u.mean_delta) << " wins=" << u.wins << " losses=" << u.losses
          << " K=" << u.K << " alpha=" << fmt("%.2f", u.alpha) << " r_utility=" << fmt("%.4f", u.r_utility) << "\n";
      return 0;
    }

    if (bank_cmd->parsed()) {
      const BankSchema schema = schema_for(bank_env);
      if (show_cmd->parsed()) {
        out << render_bank(load_bank(show_path, schema));
      } else if (diff_cmd->parsed()) {
        out << render_bank_diff(load_bank(diff_a, schema), load_bank(diff_b, schema));
      } else if (validate_cmd->parsed()) {
        const SkillBank b = load_bank(validate_path, schema);
        out << "ok: " << b.size() << " skills, version " << b.version << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace skillmaster
