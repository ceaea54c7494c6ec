#include "skillmaster/policy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "skillmaster/errors.hpp"

namespace skillmaster {

PolicyParams PolicyParams::zeros(std::size_t actions, std::size_t features, std::size_t skill_features,
                                 std::size_t candidates) {
  PolicyParams p;
  p.acting = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(actions), static_cast<Eigen::Index>(features));
  p.skill = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(candidates), static_cast<Eigen::Index>(skill_features));
  return p;
}

PolicyParams PolicyParams::zeros_like() const {
  PolicyParams p;
  p.acting = Eigen::MatrixXd::Zero(acting.rows(), acting.cols());
  p.skill = Eigen::MatrixXd::Zero(skill.rows(), skill.cols());
  return p;
}

bool PolicyParams::same_shape(const PolicyParams& o) const {
  return acting.rows() == o.acting.rows() && acting.cols() == o.acting.cols() &&
         skill.rows() == o.skill.rows() && skill.cols() == o.skill.cols();
}

bool PolicyParams::all_finite() const { return acting.allFinite() && skill.allFinite(); }

PolicyParams& PolicyParams::add_scaled(const PolicyParams& other, double scale) {
  if (!same_shape(other)) throw ShapeMismatch("add_scaled: parameter shapes differ");
  acting += scale * other.acting;
  skill += scale * other.skill;
  return *this;
}

double PolicyParams::dot(const PolicyParams& other) const {
  if (!same_shape(other)) throw ShapeMismatch("dot: parameter shapes differ");
  return acting.cwiseProduct(other.acting).sum() + skill.cwiseProduct(other.skill).sum();
}

std::size_t PolicyParams::size() const { return static_cast<std::size_t>(acting.size() + skill.size()); }

double& PolicyParams::at(std::size_t i) {
  const auto n = static_cast<std::size_t>(acting.size());
  return i < n ? acting.data()[i] : skill.data()[i - n];
}

double PolicyParams::at(std::size_t i) const {
  const auto n = static_cast<std::size_t>(acting.size());
  return i < n ? acting.data()[i] : skill.data()[i - n];
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

namespace {

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

void check_acting(const PolicyParams& params, const Eigen::VectorXd& f) {
  if (params.acting.cols() != f.size()) throw ShapeMismatch("feature length does not match acting weights");
}

Eigen::VectorXd skill_logits(const PolicyParams& params, const Eigen::MatrixXd& c) {
  if (c.rows() < 1 || c.rows() > params.skill.rows() || c.cols() != params.skill.cols()) {
    throw ShapeMismatch("candidate matrix does not match skill weights");
  }
  Eigen::VectorXd z(c.rows());
  for (Eigen::Index i = 0; i < c.rows(); ++i) z[i] = params.skill.row(i).dot(c.row(i));
  return z;
}

// d KL(softmax(z) || q) / dz.
Eigen::VectorXd kl_logit_grad(const Eigen::VectorXd& logp, const Eigen::VectorXd& logq) {
  const Eigen::VectorXd p = logp.array().exp();
  const double kl = (p.array() * (logp - logq).array()).sum();
  return p.array() * ((logp - logq).array() - kl);
}

}  // namespace

Eigen::VectorXd action_distribution(const PolicyParams& params, const Eigen::VectorXd& f) {
  check_acting(params, f);
  return softmax(params.acting * f);
}

LogProbGrad logprob_and_grad(const PolicyParams& params, const Eigen::VectorXd& f, std::size_t chosen) {
  check_acting(params, f);
  if (chosen >= static_cast<std::size_t>(params.acting.rows())) throw ShapeMismatch("chosen action out of range");
  const Eigen::VectorXd logits = params.acting * f;
  const Eigen::VectorXd logp = log_softmax(logits);
  Eigen::VectorXd coef = -logp.array().exp();
  coef[static_cast<Eigen::Index>(chosen)] += 1.0;
  LogProbGrad out;
  out.log_prob = logp[static_cast<Eigen::Index>(chosen)];
  out.grad = params.zeros_like();
  out.grad.acting = coef * f.transpose();
  return out;
}

double kl_divergence(const PolicyParams& params, const PolicyParams& ref, const Eigen::VectorXd& f) {
  check_acting(params, f);
  check_acting(ref, f);
  const Eigen::VectorXd logp = log_softmax(params.acting * f);
  const Eigen::VectorXd logq = log_softmax(ref.acting * f);
  return std::max(0.0, (logp.array().exp() * (logp - logq).array()).sum());
}

Eigen::VectorXd skill_distribution(const PolicyParams& params, const Eigen::MatrixXd& c) {
  return softmax(skill_logits(params, c));
}

LogProbGrad skill_logprob_and_grad(const PolicyParams& params, const Eigen::MatrixXd& c, std::size_t chosen) {
  const Eigen::VectorXd logp = log_softmax(skill_logits(params, c));
  if (chosen >= static_cast<std::size_t>(c.rows())) throw ShapeMismatch("chosen candidate out of range");
  LogProbGrad out;
  out.log_prob = logp[static_cast<Eigen::Index>(chosen)];
  out.grad = params.zeros_like();
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    const double coef = (i == static_cast<Eigen::Index>(chosen) ? 1.0 : 0.0) - std::exp(logp[i]);
    out.grad.skill.row(i) = coef * c.row(i);
  }
  return out;
}

double skill_kl_divergence(const PolicyParams& params, const PolicyParams& ref, const Eigen::MatrixXd& c) {
  const Eigen::VectorXd logp = log_softmax(skill_logits(params, c));
  const Eigen::VectorXd logq = log_softmax(skill_logits(ref, c));
  return std::max(0.0, (logp.array().exp() * (logp - logq).array()).sum());
}

Eigen::VectorXd record_distribution(const PolicyParams& params, const DecisionRecord& r) {
  if (r.phase == Phase::acting) return action_distribution(params, r.features.row(0).transpose());
  return skill_distribution(params, r.features);
}

LogProbGrad record_logprob_and_grad(const PolicyParams& params, const DecisionRecord& r) {
  if (r.phase == Phase::acting) return logprob_and_grad(params, r.features.row(0).transpose(), r.chosen);
  return skill_logprob_and_grad(params, r.features, r.chosen);
}

double record_kl(const PolicyParams& params, const PolicyParams& ref, const DecisionRecord& r) {
  if (r.phase == Phase::acting) return kl_divergence(params, ref, r.features.row(0).transpose());
  return skill_kl_divergence(params, ref, r.features);
}

PolicyParams record_kl_grad(const PolicyParams& params, const PolicyParams& ref, const DecisionRecord& r) {
  PolicyParams g = params.zeros_like();
  if (r.phase == Phase::acting) {
    const Eigen::VectorXd f = r.features.row(0).transpose();
    check_acting(params, f);
    const Eigen::VectorXd dz = kl_logit_grad(log_softmax(params.acting * f), log_softmax(ref.acting * f));
    g.acting = dz * f.transpose();
  } else {
    const Eigen::VectorXd dz =
        kl_logit_grad(log_softmax(skill_logits(params, r.features)), log_softmax(skill_logits(ref, r.features)));
    for (Eigen::Index i = 0; i < r.features.rows(); ++i) g.skill.row(i) = dz[i] * r.features.row(i);
  }
  return g;
}

std::size_t argmax(const Eigen::VectorXd& probs) {
  Eigen::Index best = 0;
  probs.maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

// ---------------------------------------------------------------------------
// Candidate mining

std::size_t skill_feature_size(std::size_t num_families) { return kNumRules + 1 + num_families + 1; }

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool has_hold_for(const Skill& s, const std::string& op) {
  return std::any_of(s.directives.begin(), s.directives.end(), [&](const Directive& d) {
    return d.kind == Directive::Kind::hold_while && !d.args.empty() && d.args.front() == op;
  });
}

bool has_location_directive(const Skill& s) {
  return std::any_of(s.directives.begin(), s.directives.end(), [](const Directive& d) {
    return d.kind != Directive::Kind::hold_while;
  });
}

Eigen::VectorXd candidate_features(const Environment& env, Rule rule, bool success, const std::string& family,
                                   bool targets_existing) {
  const auto& families = env.config().families;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(skill_feature_size(families.size())));
  f[static_cast<Eigen::Index>(rule)] = 1.0;
  f[kNumRules] = success ? 1.0 : 0.0;
  f[static_cast<Eigen::Index>(kNumRules + 1 + env.config().family_index(family))] = 1.0;
  f[f.size() - 1] = targets_existing ? 1.0 : 0.0;
  return f;
}

ToolCall make_edit(const SkillTemplate& t, const std::string& family, const Skill* target) {
  if (target != nullptr) return UpdateSkill{target->id, t.title, t.principle, t.when_to_apply, t.evidence};
  return ProposeSkill{family, t.title, t.principle, t.when_to_apply, t.evidence};
}

}  // namespace

std::vector<EditCandidate> mine_edit_candidates(const Environment& env, const Trajectory& traj,
                                                std::span<const Skill> retrieved, const SkillBank& bank) {
  const std::string& family = traj.task.family;
  std::vector<EditCandidate> out;

  // Resolve against the live bank: a retrieved copy may be stale.
  auto live = [&](const Skill& s) -> const Skill* { return bank.find(s.id); };

  const auto op = env.operation_for(family);
  if (op) {
    const auto failures = std::count_if(traj.trace.begin(), traj.trace.end(),
                                        [](const StepTrace& t) { return t.gated_failure; });
    if (failures >= env.gating_failure_threshold()) {
      const Skill* target = nullptr;
      for (const auto& s : retrieved) {
        const Skill* l = live(s);
        if (l == nullptr) continue;
        const bool names_op = l->category == family && lower(l->title).find(*op) != std::string::npos;
        if (has_hold_for(*l, *op) || names_op) {
          target = l;
          break;
        }
      }
      out.push_back({make_edit(env.hold_template(family), family, target), Rule::hold,
                     candidate_features(env, Rule::hold, traj.success, family, target != nullptr)});
    }
  }

  const auto prior = env.search_prior(family);
  if (!prior.empty()) {
    const auto& locs = env.config().locations;
    std::set<std::size_t> outside;
    for (const auto& t : traj.trace) {
      if (t.target_seen) break;
      if (std::find(prior.begin(), prior.end(), locs[t.location]) == prior.end()) outside.insert(t.location);
    }
    if (outside.size() >= 2) {
      const Skill* target = nullptr;
      for (const auto& s : retrieved) {
        const Skill* l = live(s);
        if (l != nullptr && has_location_directive(*l)) {
          target = l;
          break;
        }
      }
      out.push_back({make_edit(env.search_template(family), family, target), Rule::prefer,
                     candidate_features(env, Rule::prefer, traj.success, family, target != nullptr)});
    }
  }

  if (out.size() > kMaxCandidates - 1) out.resize(kMaxCandidates - 1);
  out.push_back({KeepSkill{"The retrieved skills already cover what this episode showed."}, Rule::keep,
                 candidate_features(env, Rule::keep, traj.success, family, false)});
  return out;
}

// ---------------------------------------------------------------------------
// Behavior cloning

double demo_loss(const PolicyParams& params, std::span<const Demo> demos) {
  double total = 0.0;
  for (const auto& d : demos) {
    total -= log_softmax(params.acting * d.features)[static_cast<Eigen::Index>(d.action)];
  }
  return demos.empty() ? 0.0 : total / static_cast<double>(demos.size());
}

double demo_agreement(const PolicyParams& params, std::span<const Demo> demos) {
  std::size_t hits = 0;
  for (const auto& d : demos) hits += argmax(params.acting * d.features) == d.action ? 1 : 0;
  return demos.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(demos.size());
}

PolicyParams behavior_clone(const PolicyParams& params, std::span<const Demo> demos, int epochs, double lr,
                            std::vector<double>* losses) {
  if (demos.empty()) throw std::invalid_argument("behavior_clone needs at least one demo");
  PolicyParams p = params;
  const double inv_n = 1.0 / static_cast<double>(demos.size());
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(p.acting.cols(), p.acting.cols());
  for (const auto& d : demos) {
    if (d.features.size() != p.acting.cols()) throw ShapeMismatch("demo feature length does not match");
    second.selfadjointView<Eigen::Lower>().rankUpdate(d.features, inv_n);
  }
  second = second.selfadjointView<Eigen::Lower>();
  // Jacobi scaling: descend in coordinates V = W D^{1/2}, D = diag(second).
  // The curvature bound is taken in those coordinates, so the loss stays
  // monotone.
  Eigen::VectorXd inv_d(second.rows());
  for (Eigen::Index i = 0; i < second.rows(); ++i) inv_d[i] = second(i, i) > 0.0 ? 1.0 / second(i, i) : 1.0;
  const Eigen::VectorXd s = inv_d.cwiseSqrt();
  const Eigen::MatrixXd scaled = s.asDiagonal() * second * s.asDiagonal();
  const double lambda =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(scaled, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const double step = lambda > 0.0 ? std::min(lr, 1.0 / (0.5 * lambda)) : lr;
  if (losses) losses->push_back(demo_loss(p, demos));
  for (int e = 0; e < epochs; ++e) {
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(p.acting.rows(), p.acting.cols());
    for (const auto& d : demos) {
      Eigen::VectorXd coef = softmax(p.acting * d.features);
      coef[static_cast<Eigen::Index>(d.action)] -= 1.0;
      grad.noalias() += coef * d.features.transpose();
    }
    p.acting -= step * inv_n * grad * inv_d.asDiagonal();
    if (losses) losses->push_back(demo_loss(p, demos));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Checkpoint

std::string serialize_params(const PolicyParams& params) {
  std::string out = "skillmaster-params 1\n";
  char buf[40];
  auto dump = [&](const char* name, const Eigen::MatrixXd& m) {
    out += std::string(name) + " " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
        out += (c ? " " : "") + std::string(buf);
      }
      out += "\n";
    }
  };
  dump("acting", params.acting);
  dump("skill", params.skill);
  return out;
}

PolicyParams parse_params(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "skillmaster-params" || version != 1) {
    throw std::runtime_error("not a params checkpoint");
  }
  auto read = [&](const char* name) {
    std::string tag;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> tag >> rows >> cols) || tag != name || rows < 0 || cols < 0) {
      throw std::runtime_error(std::string("params checkpoint: bad ") + name + " header");
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        std::string tok;
        if (!(in >> tok)) throw std::runtime_error("params checkpoint: truncated");
        m(r, c) = std::stod(tok);
      }
    }
    return m;
  };
  PolicyParams p;
  p.acting = read("acting");
  p.skill = read("skill");
  if (!p.all_finite()) throw std::runtime_error("params checkpoint: non-finite value");
  return p;
}

void save_params(const PolicyParams& params, const std::filesystem::path& path) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << serialize_params(params);
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

PolicyParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_params(ss.str());
}

}  // namespace skillmaster
