#include <catch_amalgamated.hpp>

#include <set>

#include "skillrank/augment.hpp"
#include "skillrank/dataset_io.hpp"
#include "skillrank/world.hpp"
#include "test_util.hpp"

using namespace skillrank;
using aug::AugmentConfig;

namespace {

// independent cardinality oracle: what augmentation must add per instance
std::size_t expected_noise_count(const RoutingInstance& inst, const SkillSpace& skills, int m) {
  std::size_t total = 0;
  for (const auto& group : group_by_interpretation(inst)) {
    std::set<std::string> proposed;
    for (std::size_t i : group) proposed.insert(inst.hypotheses[i].skill);
    total += std::min<std::size_t>(m, skills.size() - proposed.size());
  }
  return total;
}

void check_exclusion(const RoutingInstance& before, const RoutingInstance& after) {
  // group noise by interpretation and compare against the original groups
  auto groups_before = group_by_interpretation(before);
  std::set<std::string> seen_pairs;
  for (const auto& h : after.hypotheses) {
    const std::string pair = h.interpretation.key() + '\x1d' + h.skill;
    REQUIRE(seen_pairs.insert(pair).second);  // no duplicate candidates anywhere
  }
  for (std::size_t gi = 0; gi < groups_before.size(); ++gi) {
    std::set<std::string> original;
    for (std::size_t i : groups_before[gi]) original.insert(before.hypotheses[i].skill);
    const auto& interp = before.hypotheses[groups_before[gi].front()].interpretation;
    for (std::size_t i = before.hypotheses.size(); i < after.hypotheses.size(); ++i) {
      const auto& h = after.hypotheses[i];
      if (!(h.interpretation == interp)) continue;
      CHECK_FALSE(original.count(h.skill));  // noise never reuses a proposed skill
    }
  }
}

}  // namespace

TEST_CASE("augment_instance") {
  auto ds = testutil::tiny_dataset();

  SECTION("m = 0 is the identity") {
    const auto& inst = ds.instances[1];
    auto out = aug::augment_instance(inst, ds.skill_space, {.m = 0, .seed = 1});
    CHECK(out.hypotheses.size() == inst.hypotheses.size());
    CHECK(out.gold_index == inst.gold_index);
  }

  SECTION("two groups with ample skills get m noise hypotheses each") {
    SkillSpace wide = SkillSpace::of({"skill_a", "skill_b", "skill_c", "s1", "s2", "s3", "s4",
                                      "s5", "s6", "s7", "s8"});
    const auto& inst = ds.instances[1];  // groups of sizes 2 and 1
    auto out = aug::augment_instance(inst, wide, {.m = 3, .seed = 9});
    CHECK(out.hypotheses.size() == inst.hypotheses.size() + 6);
    check_exclusion(inst, out);
    // originals stay in place, in order
    for (std::size_t i = 0; i < inst.hypotheses.size(); ++i) {
      CHECK(out.hypotheses[i].skill == inst.hypotheses[i].skill);
      CHECK(out.hypotheses[i].interpretation == inst.hypotheses[i].interpretation);
    }
  }

  SECTION("a group already proposing 4 of 5 skills caps at one noise hypothesis") {
    SkillSpace five = SkillSpace::of({"s1", "s2", "s3", "s4", "s5"});
    RoutingInstance inst = testutil::instance(
        "cap",
        {testutil::hyp({1}, "i", "s1"), testutil::hyp({1}, "i", "s2"),
         testutil::hyp({1}, "i", "s3"), testutil::hyp({1}, "i", "s4")},
        0);
    auto out = aug::augment_instance(inst, five, {.m = 3, .seed = 2});
    REQUIRE(out.hypotheses.size() == 5);
    CHECK(out.hypotheses.back().skill == "s5");
  }

  SECTION("negative m is rejected") {
    CHECK_THROWS_AS(aug::augment_instance(ds.instances[0], ds.skill_space, {.m = -1, .seed = 0}),
                    DataError);
  }
}

TEST_CASE("augment_dataset") {
  auto wcfg = world::WorldConfig{};
  wcfg.n_intents = 10;
  wcfg.n_skills = 18;
  wcfg.subs_min = 2;
  wcfg.subs_max = 5;
  auto ont = world::generate_ontology(wcfg, 31);
  auto ds = world::sample_dataset(ont, wcfg, 400, 32, "train1");

  SECTION("m = 0 changes only the provenance") {
    auto out = aug::augment_dataset(ds, {.m = 0, .seed = 3});
    CHECK(out.provenance == "train2-augmented");
    auto relabeled = out;
    relabeled.provenance = ds.provenance;
    CHECK(io::dataset_to_jsonl(relabeled) == io::dataset_to_jsonl(ds));
  }

  SECTION("augmented output is valid and preserves every golden hypothesis verbatim") {
    auto out = aug::augment_dataset(ds, {.m = 3, .seed = 4});
    CHECK(validate_dataset(out).empty());
    REQUIRE(out.instances.size() == ds.instances.size());
    for (std::size_t i = 0; i < ds.instances.size(); ++i) {
      const Hypothesis& before = ds.instances[i].golden();
      const Hypothesis& after = out.instances[i].golden();
      CHECK(after.skill == before.skill);
      CHECK(after.interpretation == before.interpretation);
      CHECK(after.utterance == before.utterance);
      CHECK(after.context == before.context);
    }
  }

  SECTION("determinism: equal config gives byte-equal output") {
    auto a = aug::augment_dataset(ds, {.m = 3, .seed = 5});
    auto b = aug::augment_dataset(ds, {.m = 3, .seed = 5});
    CHECK(io::dataset_to_jsonl(a) == io::dataset_to_jsonl(b));
    auto c = aug::augment_dataset(ds, {.m = 3, .seed = 6});
    CHECK(io::dataset_to_jsonl(a) != io::dataset_to_jsonl(c));
  }

  SECTION("cardinality and exclusion invariants hold across m") {
    for (int m : {0, 1, 3, 5}) {
      auto out = aug::augment_dataset(ds, {.m = m, .seed = 7});
      for (std::size_t i = 0; i < ds.instances.size(); ++i) {
        REQUIRE(out.instances[i].hypotheses.size() ==
                ds.instances[i].hypotheses.size() +
                    expected_noise_count(ds.instances[i], ds.skill_space, m));
        check_exclusion(ds.instances[i], out.instances[i]);
      }
    }
  }
}
