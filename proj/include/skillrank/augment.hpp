#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "skillrank/domain.hpp"
#include "skillrank/rng.hpp"

namespace skillrank::aug {

struct AugmentConfig {
  int m = 3;               // noise hypotheses per interpretation group
  std::uint64_t seed = 0;
  // shortage behavior when fewer than m replacement skills exist:
  // cap silently at the available count
  enum class CapMode { silent } cap_mode = CapMode::silent;

  void validate() const {
    if (m < 0) throw DataError("augment config: m must be >= 0");
  }
};

// One noise hypothesis for a group: copy a random existing member and
// replace its skill with one not proposed by the group and not already
// used as noise. Returns false when no legal replacement skill is left.
inline bool draw_noise(Rng& rng, const std::vector<const Hypothesis*>& group,
                       const SkillSpace& skills, std::unordered_set<std::string>& taken,
                       Hypothesis& out) {
  std::vector<const std::string*> candidates;
  candidates.reserve(skills.size());
  for (const std::string& s : skills.skills)
    if (!taken.count(s)) candidates.push_back(&s);
  if (candidates.empty()) return false;
  const Hypothesis& donor = *group[rng.index(group.size())];
  const std::string& replacement = *candidates[rng.index(candidates.size())];
  out = donor;
  out.skill = replacement;
  taken.insert(replacement);
  return true;
}

// Noise injection for one instance: per interpretation group, up to m
// distinct noise hypotheses, appended after the originals in group order.
// The golden hypothesis is untouched and gold_index follows it.
inline RoutingInstance augment_instance(const RoutingInstance& inst, const SkillSpace& skills,
                                        const AugmentConfig& cfg) {
  cfg.validate();
  if (cfg.m == 0) return inst;
  Rng rng(derive_seed(cfg.seed, "augment"));

  RoutingInstance out = inst;
  for (const auto& group_idx : group_by_interpretation(inst)) {
    std::vector<const Hypothesis*> group;
    std::unordered_set<std::string> taken;  // proposed by the group or already used as noise
    for (std::size_t i : group_idx) {
      group.push_back(&inst.hypotheses[i]);
      taken.insert(inst.hypotheses[i].skill);
    }
    for (int k = 0; k < cfg.m; ++k) {
      Hypothesis noise;
      if (!draw_noise(rng, group, skills, taken, noise)) break;  // silent cap
      out.hypotheses.push_back(std::move(noise));
    }
  }
  return out;
}

// Static one-shot augmentation of a whole training set with per-instance
// derived seeds.
inline Dataset augment_dataset(const Dataset& ds, const AugmentConfig& cfg) {
  cfg.validate();
  Dataset out;
  out.skill_space = ds.skill_space;
  out.context_len = ds.context_len;
  out.provenance = "train2-augmented";
  out.instances.reserve(ds.instances.size());
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    AugmentConfig per = cfg;
    per.seed = derive_seed(cfg.seed, "instance", i);
    out.instances.push_back(augment_instance(ds.instances[i], ds.skill_space, per));
  }
  return out;
}

}  // namespace skillrank::aug
