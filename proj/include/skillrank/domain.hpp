#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace skillrank {

// Invalid or inconsistent data (bad files, unknown ids, broken invariants).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using TokenId = std::int32_t;

// An NLU interpretation: an intent plus named slots. Two interpretations
// are equal iff the intent and the name-sorted slot list are equal, so
// slot order never matters.
struct InterpretationId {
  std::string intent;
  std::vector<std::pair<std::string, std::string>> slots;

  std::vector<std::pair<std::string, std::string>> normalized_slots() const {
    auto s = slots;
    std::sort(s.begin(), s.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return s;
  }

  // canonical text form; doubles as a hash/equality key
  std::string key() const {
    std::string k = intent;
    for (const auto& [name, value] : normalized_slots()) {
      k += '\x1f';
      k += name;
      k += '\x1e';
      k += value;
    }
    return k;
  }

  friend bool operator==(const InterpretationId& a, const InterpretationId& b) {
    return a.intent == b.intent && a.normalized_slots() == b.normalized_slots();
  }
};

// One routing candidate: the utterance, its interpretation, the proposed
// skill, and the request's contextual signals.
struct Hypothesis {
  std::vector<TokenId> utterance;
  InterpretationId interpretation;
  std::string skill;
  std::vector<int> context;

  // candidate identity is (interpretation, skill)
  bool same_candidate(const Hypothesis& o) const {
    return skill == o.skill && interpretation == o.interpretation;
  }
};

struct RoutingInstance {
  std::string id;
  std::vector<Hypothesis> hypotheses;
  std::size_t gold_index = 0;

  const Hypothesis& golden() const { return hypotheses.at(gold_index); }
};

struct SkillSpace {
  std::vector<std::string> skills;  // sorted, unique

  static SkillSpace of(std::vector<std::string> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return SkillSpace{std::move(ids)};
  }

  bool contains(const std::string& s) const {
    return std::binary_search(skills.begin(), skills.end(), s);
  }

  std::size_t size() const { return skills.size(); }
};

// contextual gate on a subscription, e.g. "signal 0 must be 1"
struct Condition {
  int signal_index = 0;
  int required_value = 0;

  bool accepts(std::span<const int> context) const {
    return signal_index >= 0 && static_cast<std::size_t>(signal_index) < context.size() &&
           context[signal_index] == required_value;
  }
};

struct Subscription {
  std::string skill;
  std::optional<Condition> condition;  // nullopt = always subscribed

  bool accepts(std::span<const int> context) const {
    return !condition || condition->accepts(context);
  }
};

// The skill <-> intent subscription table; the object that drifts.
// Subscriptions within an intent are kept sorted by skill id so that
// hypothesis proposal order is reproducible.
struct Ontology {
  SkillSpace skill_space;
  std::map<std::string, std::vector<Subscription>> subscriptions;

  void normalize() {
    for (auto& [intent, subs] : subscriptions)
      std::sort(subs.begin(), subs.end(),
                [](const Subscription& a, const Subscription& b) { return a.skill < b.skill; });
  }
};

struct Dataset {
  std::vector<RoutingInstance> instances;
  SkillSpace skill_space;
  int context_len = 0;
  std::string provenance;
};

struct Violation {
  std::string instance_id;  // empty for dataset-level problems
  std::string reason;
};

// Every invariant violation in one pass; empty report iff the dataset is
// valid. Violations are data, not errors: the input is never mutated.
inline std::vector<Violation> validate_dataset(const Dataset& ds) {
  std::vector<Violation> out;
  if (ds.skill_space.skills.empty()) out.push_back({"", "skill space non-empty violated"});
  for (std::size_t i = 1; i < ds.skill_space.skills.size(); ++i)
    if (ds.skill_space.skills[i - 1] == ds.skill_space.skills[i])
      out.push_back({"", "duplicate skill id '" + ds.skill_space.skills[i] + "' in skill space"});

  for (const RoutingInstance& inst : ds.instances) {
    auto flag = [&](const std::string& reason) { out.push_back({inst.id, reason}); };
    if (inst.hypotheses.empty()) {
      flag("empty hypothesis list");
      continue;
    }
    if (inst.gold_index >= inst.hypotheses.size()) flag("gold index out of range");
    std::unordered_set<std::string> candidates;
    const auto& utter0 = inst.hypotheses.front().utterance;
    for (const Hypothesis& h : inst.hypotheses) {
      if (h.utterance != utter0) flag("hypotheses do not share the same utterance");
      if (!ds.skill_space.contains(h.skill)) flag("unknown skill '" + h.skill + "'");
      if (static_cast<int>(h.context.size()) != ds.context_len)
        flag("context length " + std::to_string(h.context.size()) + " != configured " +
             std::to_string(ds.context_len));
      if (h.interpretation.intent.empty()) flag("empty intent");
      auto slots = h.interpretation.normalized_slots();
      for (std::size_t s = 1; s < slots.size(); ++s)
        if (slots[s - 1].first == slots[s].first)
          flag("duplicate slot name '" + slots[s].first + "'");
      if (!candidates.insert(h.interpretation.key() + '\x1d' + h.skill).second)
        flag("duplicate candidate (interpretation '" + h.interpretation.intent + "', skill '" +
             h.skill + "')");
    }
  }
  return out;
}

inline std::vector<Violation> validate_ontology(const Ontology& ont) {
  std::vector<Violation> out;
  if (ont.skill_space.skills.empty()) out.push_back({"", "skill space non-empty violated"});
  for (const auto& [intent, subs] : ont.subscriptions) {
    if (subs.empty()) out.push_back({intent, "intent has no subscriptions"});
    for (const Subscription& sub : subs)
      if (!ont.skill_space.contains(sub.skill))
        out.push_back({intent, "subscribed skill '" + sub.skill + "' not in skill space"});
  }
  return out;
}

// hypothesis indices grouped by interpretation, groups in first-appearance order
inline std::vector<std::vector<std::size_t>> group_by_interpretation(const RoutingInstance& inst) {
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < inst.hypotheses.size(); ++i) {
    const std::string k = inst.hypotheses[i].interpretation.key();
    auto it = std::find(keys.begin(), keys.end(), k);
    if (it == keys.end()) {
      keys.push_back(k);
      groups.push_back({i});
    } else {
      groups[static_cast<std::size_t>(it - keys.begin())].push_back(i);
    }
  }
  return groups;
}

struct DatasetStats {
  std::size_t instances = 0;
  double mean_hypotheses = 0.0;
  double mean_groups = 0.0;
};

inline DatasetStats dataset_stats(const Dataset& ds) {
  DatasetStats st;
  st.instances = ds.instances.size();
  if (ds.instances.empty()) return st;
  double hyp = 0, grp = 0;
  for (const auto& inst : ds.instances) {
    hyp += static_cast<double>(inst.hypotheses.size());
    grp += static_cast<double>(group_by_interpretation(inst).size());
  }
  st.mean_hypotheses = hyp / static_cast<double>(ds.instances.size());
  st.mean_groups = grp / static_cast<double>(ds.instances.size());
  return st;
}

}  // namespace skillrank
