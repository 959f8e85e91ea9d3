#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "skillrank/domain.hpp"
#include "skillrank/rng.hpp"

namespace skillrank::world {

// Knobs for the synthetic ontology and traffic generator. Stands in for
// production traffic, so scale defaults favor desk runtime.
struct WorldConfig {
  int n_intents = 32;
  int n_skills = 24;
  int subs_min = 2;
  int subs_max = 4;
  int utterance_vocab = 50;
  int utt_len_min = 3;
  int utt_len_max = 8;
  std::uint64_t gold_rule_seed = 777;
  int context_len = 4;
  double p_conditional = 0.2;        // chance a non-first subscription carries a context gate
  double p_second_interpretation = 0.3;

  void validate() const {
    if (n_intents < 1 || n_skills < 1) throw DataError("world config: counts must be positive");
    if (subs_min < 1 || subs_min > subs_max)
      throw DataError("world config: need 1 <= subs_min <= subs_max");
    if (n_skills < subs_max + 10)
      throw DataError("world config: n_skills must be >= subs_max + 10 (augmentation headroom), got " +
                      std::to_string(n_skills) + " < " + std::to_string(subs_max + 10));
    if (utterance_vocab < 1) throw DataError("world config: utterance_vocab must be positive");
    if (utt_len_min < 1 || utt_len_min > utt_len_max)
      throw DataError("world config: need 1 <= utt_len_min <= utt_len_max");
    if (context_len < 1) throw DataError("world config: context_len must be positive");
    if (p_conditional < 0 || p_conditional > 1 || p_second_interpretation < 0 ||
        p_second_interpretation > 1)
      throw DataError("world config: probabilities must lie in [0,1]");
  }
};

// Subscription churn between training time and serving time.
struct DriftConfig {
  double p_unsubscribe = 0.1;
  double p_new_subscription = 0.04;
  std::uint64_t seed = 0;

  void validate() const {
    if (p_unsubscribe < 0 || p_unsubscribe > 1 || p_new_subscription < 0 ||
        p_new_subscription > 1)
      throw DataError("drift config: probabilities must lie in [0,1]");
  }
};

namespace detail {

inline std::string padded(const char* prefix, int i, int width) {
  std::string n = std::to_string(i);
  if (static_cast<int>(n.size()) < width) n.insert(0, width - n.size(), '0');
  return prefix + n;
}

inline int id_width(int count) {
  int w = 1, p = 10;
  while (count > p) {
    ++w;
    p *= 10;
  }
  return w;
}

}  // namespace detail

inline std::vector<std::string> skill_names(int n_skills) {
  std::vector<std::string> out;
  const int w = detail::id_width(n_skills);
  for (int i = 0; i < n_skills; ++i) out.push_back(detail::padded("skill_", i, w));
  return out;
}

inline std::vector<std::string> intent_names(int n_intents) {
  std::vector<std::string> out;
  const int w = detail::id_width(n_intents);
  for (int i = 0; i < n_intents; ++i) out.push_back(detail::padded("intent_", i, w));
  return out;
}

inline Ontology generate_ontology(const WorldConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(derive_seed(seed, "ontology"));
  Ontology ont;
  ont.skill_space = SkillSpace::of(skill_names(cfg.n_skills));
  for (const std::string& intent : intent_names(cfg.n_intents)) {
    const int k = rng.range(cfg.subs_min, cfg.subs_max);
    auto picks = rng.sample_indices(static_cast<std::size_t>(cfg.n_skills),
                                    static_cast<std::size_t>(k));
    std::sort(picks.begin(), picks.end());
    std::vector<Subscription> subs;
    for (std::size_t j = 0; j < picks.size(); ++j) {
      Subscription s;
      s.skill = ont.skill_space.skills[picks[j]];
      // the first subscriber stays unconditional so no intent can ever go dark
      if (j > 0 && rng.bernoulli(cfg.p_conditional))
        s.condition = Condition{rng.range(0, cfg.context_len - 1), rng.range(0, 1)};
      subs.push_back(std::move(s));
    }
    ont.subscriptions[intent] = std::move(subs);
  }
  ont.normalize();
  return ont;
}

// Exactly one hypothesis per (interpretation, accepting subscriber) pair;
// interpretation-major order, subscribers in stored (lexicographic) order.
inline std::vector<Hypothesis> propose_hypotheses(const Ontology& ont,
                                                  const std::vector<TokenId>& utterance,
                                                  const std::vector<InterpretationId>& interps,
                                                  const std::vector<int>& context) {
  std::vector<Hypothesis> out;
  for (const InterpretationId& interp : interps) {
    auto it = ont.subscriptions.find(interp.intent);
    if (it == ont.subscriptions.end())
      throw DataError("propose_hypotheses: unknown intent '" + interp.intent + "'");
    for (const Subscription& sub : it->second) {
      if (!sub.accepts(context)) continue;
      Hypothesis h;
      h.utterance = utterance;
      h.interpretation = interp;
      h.skill = sub.skill;
      h.context = context;
      out.push_back(std::move(h));
    }
  }
  return out;
}

// Hidden deterministic labeling rule. Each skill owns a frozen random
// projection over (mean token embedding, context signals); the golden
// hypothesis is the per-instance argmax. Keyed on the utterance and the
// context through the projection, so the label is learnable from features
// but not a constant skill ranking.
class GoldRule {
 public:
  GoldRule(const WorldConfig& cfg, const SkillSpace& skills)
      : feat_dim_(kTokenDim + cfg.context_len), skills_(skills.skills) {
    Rng rng(derive_seed(cfg.gold_rule_seed, "gold-rule"));
    token_table_.resize(static_cast<std::size_t>(cfg.utterance_vocab) * kTokenDim);
    for (double& v : token_table_) v = rng.uniform(-1.0, 1.0);
    proj_.resize(skills_.size() * static_cast<std::size_t>(feat_dim_));
    for (double& v : proj_) v = rng.uniform(-1.0, 1.0);
  }

  double score(const Hypothesis& h) const {
    std::vector<double> feat(static_cast<std::size_t>(feat_dim_), 0.0);
    for (TokenId t : h.utterance)
      for (int d = 0; d < kTokenDim; ++d)
        feat[d] += token_table_[static_cast<std::size_t>(t) * kTokenDim + d];
    if (!h.utterance.empty())
      for (int d = 0; d < kTokenDim; ++d) feat[d] /= static_cast<double>(h.utterance.size());
    for (std::size_t c = 0; c < h.context.size(); ++c)
      feat[kTokenDim + c] = static_cast<double>(h.context[c]);
    const auto row = std::lower_bound(skills_.begin(), skills_.end(), h.skill);
    if (row == skills_.end() || *row != h.skill)
      throw DataError("gold rule: unknown skill '" + h.skill + "'");
    const double* p = proj_.data() +
                      static_cast<std::size_t>(row - skills_.begin()) * feat_dim_;
    double s = 0.0;
    for (int d = 0; d < feat_dim_; ++d) s += p[d] * feat[d];
    return s;
  }

  std::size_t gold_index(const std::vector<Hypothesis>& hyps) const {
    std::size_t best = 0;
    double best_score = score(hyps[0]);
    for (std::size_t i = 1; i < hyps.size(); ++i) {
      const double s = score(hyps[i]);
      if (s > best_score) {  // ties keep the lowest index
        best = i;
        best_score = s;
      }
    }
    return best;
  }

  // the skill the rule would pick if every known skill were a candidate
  std::string global_best_skill(const std::vector<TokenId>& utterance,
                                const std::vector<int>& context) const {
    Hypothesis probe;
    probe.utterance = utterance;
    probe.context = context;
    std::size_t best = 0;
    double best_score = 0;
    for (std::size_t i = 0; i < skills_.size(); ++i) {
      probe.skill = skills_[i];
      const double s = score(probe);
      if (i == 0 || s > best_score) {
        best = i;
        best_score = s;
      }
    }
    return skills_[best];
  }

 private:
  static constexpr int kTokenDim = 8;
  int feat_dim_;
  std::vector<std::string> skills_;
  std::vector<double> token_table_;
  std::vector<double> proj_;
};

inline Dataset sample_dataset(const Ontology& ont, const WorldConfig& cfg, int n_instances,
                              std::uint64_t seed, const std::string& provenance = "sampled") {
  cfg.validate();
  if (n_instances < 1) throw DataError("sample_dataset: n_instances must be >= 1");
  Rng rng(derive_seed(seed, "sample"));
  GoldRule rule(cfg, ont.skill_space);
  const auto intents = intent_names(cfg.n_intents);

  Dataset ds;
  ds.skill_space = ont.skill_space;
  ds.context_len = cfg.context_len;
  ds.provenance = provenance;
  const int width = detail::id_width(n_instances);

  for (int i = 0; i < n_instances; ++i) {
    std::vector<Hypothesis> hyps;
    std::vector<int> context;
    int attempts = 0;
    while (true) {
      if (++attempts > 1000)
        throw DataError("sample_dataset: cannot build a >=2-hypothesis instance under this config");
      const int len = rng.range(cfg.utt_len_min, cfg.utt_len_max);
      std::vector<TokenId> utterance(static_cast<std::size_t>(len));
      for (TokenId& t : utterance) t = static_cast<TokenId>(rng.index(cfg.utterance_vocab));
      context.assign(static_cast<std::size_t>(cfg.context_len), 0);
      for (int& c : context) c = rng.range(0, 1);

      // A request is only routable when the skill the rule globally favors
      // is actually reachable through some subscription, so instances are
      // built around that skill; everything downstream (gold margins,
      // insertion behavior) inherits this global consistency.
      const std::string target = rule.global_best_skill(utterance, context);
      std::vector<const std::string*> eligible;
      for (const auto& [intent, subs] : ont.subscriptions)
        for (const Subscription& sub : subs)
          if (sub.skill == target && sub.accepts(context)) {
            eligible.push_back(&intent);
            break;
          }
      if (eligible.empty()) continue;  // unreachable request, resample

      std::vector<InterpretationId> interps;
      auto make_interp = [&](const std::string& intent) {
        InterpretationId interp;
        interp.intent = intent;
        const int n_slots = rng.range(0, 2);
        auto slot_picks = rng.sample_indices(8, static_cast<std::size_t>(n_slots));
        for (std::size_t sp : slot_picks)
          interp.slots.emplace_back("sl_" + std::to_string(sp),
                                    "v_" + std::to_string(rng.index(12)));
        std::sort(interp.slots.begin(), interp.slots.end());
        return interp;
      };
      const std::string primary = *eligible[rng.index(eligible.size())];
      interps.push_back(make_interp(primary));
      if (rng.bernoulli(cfg.p_second_interpretation)) {
        const std::string& second = intents[rng.index(intents.size())];
        if (second != primary) {
          interps.push_back(make_interp(second));
          if (rng.bernoulli(0.5)) std::swap(interps[0], interps[1]);
        }
      }
      hyps = propose_hypotheses(ont, utterance, interps, context);
      if (hyps.size() >= 2) break;
    }
    RoutingInstance inst;
    inst.id = detail::padded("inst_", i, width);
    inst.gold_index = rule.gold_index(hyps);
    inst.hypotheses = std::move(hyps);
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

// Removes existing edges and adds brand-new always-on edges, never leaving
// an intent without subscribers. Additions consider pairs absent from the
// input ontology, so a removed edge is not resurrected in the same pass.
inline Ontology drift_ontology(const Ontology& ont, const DriftConfig& drift) {
  drift.validate();
  Rng rng(derive_seed(drift.seed, "drift"));
  Ontology out;
  out.skill_space = ont.skill_space;
  for (const auto& [intent, subs] : ont.subscriptions) {
    std::vector<bool> removed(subs.size(), false);
    std::size_t kept = subs.size();
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (rng.bernoulli(drift.p_unsubscribe)) {
        removed[i] = true;
        --kept;
      }
    }
    if (kept == 0) {
      removed[0] = false;  // last-subscriber guard: retain the first edge
      kept = 1;
    }
    std::vector<Subscription> next;
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (!removed[i]) next.push_back(subs[i]);

    for (const std::string& skill : ont.skill_space.skills) {
      const bool existing = std::any_of(subs.begin(), subs.end(),
                                        [&](const Subscription& s) { return s.skill == skill; });
      if (!existing && rng.bernoulli(drift.p_new_subscription))
        next.push_back(Subscription{skill, std::nullopt});
    }
    out.subscriptions[intent] = std::move(next);
  }
  out.normalize();
  return out;
}

struct RegenerateResult {
  Dataset dataset;
  std::size_t dropped = 0;  // instances whose golden candidate no longer exists
};

// Re-proposes every instance against the drifted ontology, keeping the
// utterance, interpretations, context and golden (interpretation, skill)
// fixed. Instances whose golden candidate is no longer proposable are
// dropped and counted.
inline RegenerateResult regenerate_under_drift(const Dataset& ds, const Ontology& drifted) {
  RegenerateResult result;
  result.dataset.skill_space = drifted.skill_space;
  result.dataset.context_len = ds.context_len;
  result.dataset.provenance = "test2-drifted";
  for (const RoutingInstance& inst : ds.instances) {
    std::vector<InterpretationId> interps;
    for (const auto& group : group_by_interpretation(inst))
      interps.push_back(inst.hypotheses[group.front()].interpretation);
    const Hypothesis& golden = inst.golden();
    auto hyps = propose_hypotheses(drifted, inst.hypotheses.front().utterance, interps,
                                   inst.hypotheses.front().context);
    std::size_t gold = hyps.size();
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      if (hyps[i].skill == golden.skill && hyps[i].interpretation == golden.interpretation) {
        gold = i;
        break;
      }
    }
    if (gold == hyps.size()) {
      ++result.dropped;
      continue;
    }
    RoutingInstance next;
    next.id = inst.id;
    next.hypotheses = std::move(hyps);
    next.gold_index = gold;
    result.dataset.instances.push_back(std::move(next));
  }
  return result;
}

}  // namespace skillrank::world
