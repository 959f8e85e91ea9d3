#pragma once

#include <string>
#include <vector>

#include "skillrank/domain.hpp"

namespace testutil {

inline skillrank::Hypothesis hyp(std::vector<skillrank::TokenId> utterance, std::string intent,
                                 std::string skill, std::vector<int> context = {1, 0, 0, 0},
                                 std::vector<std::pair<std::string, std::string>> slots = {}) {
  skillrank::Hypothesis h;
  h.utterance = std::move(utterance);
  h.interpretation.intent = std::move(intent);
  h.interpretation.slots = std::move(slots);
  h.skill = std::move(skill);
  h.context = std::move(context);
  return h;
}

inline skillrank::RoutingInstance instance(std::string id,
                                           std::vector<skillrank::Hypothesis> hyps,
                                           std::size_t gold) {
  skillrank::RoutingInstance inst;
  inst.id = std::move(id);
  inst.hypotheses = std::move(hyps);
  inst.gold_index = gold;
  return inst;
}

inline skillrank::Dataset tiny_dataset() {
  using skillrank::SkillSpace;
  skillrank::Dataset ds;
  ds.skill_space = SkillSpace::of({"skill_a", "skill_b", "skill_c"});
  ds.context_len = 4;
  ds.provenance = "test";
  ds.instances.push_back(instance(
      "i0", {hyp({1, 2, 3}, "play_music", "skill_a"), hyp({1, 2, 3}, "play_music", "skill_b")},
      0));
  ds.instances.push_back(instance(
      "i1",
      {hyp({4, 5}, "get_weather", "skill_b", {0, 1, 0, 0}, {{"city", "rome"}}),
       hyp({4, 5}, "get_weather", "skill_c", {0, 1, 0, 0}, {{"city", "rome"}}),
       hyp({4, 5}, "set_alarm", "skill_c", {0, 1, 0, 0})},
      1));
  ds.instances.push_back(instance(
      "i2", {hyp({9}, "play_music", "skill_c"), hyp({9}, "play_music", "skill_a")}, 1));
  return ds;
}

}  // namespace testutil
