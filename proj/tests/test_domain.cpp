#include <catch_amalgamated.hpp>

#include <filesystem>

#include "skillrank/dataset_io.hpp"
#include "skillrank/domain.hpp"
#include "skillrank/rng.hpp"
#include "test_util.hpp"

using namespace skillrank;
namespace fs = std::filesystem;
using testutil::hyp;
using testutil::instance;

namespace {

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / "skillrank_domain_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("interpretation equality ignores slot order") {
  InterpretationId a{"intent", {{"x", "1"}, {"y", "2"}}};
  InterpretationId b{"intent", {{"y", "2"}, {"x", "1"}}};
  InterpretationId c{"intent", {{"y", "2"}, {"x", "9"}}};
  CHECK(a == b);
  CHECK(a.key() == b.key());
  CHECK_FALSE(a == c);

  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    InterpretationId base{"i"};
    const int n = rng.range(0, 5);
    for (int s = 0; s < n; ++s)
      base.slots.emplace_back("slot_" + std::to_string(s), "v" + std::to_string(rng.range(0, 9)));
    InterpretationId shuffled = base;
    rng.shuffle(shuffled.slots);
    CHECK(base == shuffled);
    CHECK(base.key() == shuffled.key());
  }
}

TEST_CASE("validate_dataset") {
  SECTION("well-formed dataset yields an empty report") {
    CHECK(validate_dataset(testutil::tiny_dataset()).empty());
  }

  SECTION("gold index == |hypotheses| is flagged") {
    auto ds = testutil::tiny_dataset();
    ds.instances[0].gold_index = ds.instances[0].hypotheses.size();
    auto report = validate_dataset(ds);
    REQUIRE(report.size() == 1);
    CHECK(report[0].instance_id == "i0");
    CHECK(report[0].reason == "gold index out of range");
  }

  SECTION("duplicate (interpretation, skill) candidate is flagged") {
    auto ds = testutil::tiny_dataset();
    ds.instances[1].hypotheses.push_back(ds.instances[1].hypotheses[0]);
    auto report = validate_dataset(ds);
    REQUIRE(report.size() == 1);
    CHECK(report[0].instance_id == "i1");
    CHECK(report[0].reason.find("duplicate candidate") != std::string::npos);
  }

  SECTION("duplicate slot names and empty intents are flagged") {
    auto ds = testutil::tiny_dataset();
    ds.instances[0].hypotheses[0].interpretation.slots = {{"a", "1"}, {"a", "2"}};
    ds.instances[0].hypotheses[1].interpretation.intent = "";
    auto report = validate_dataset(ds);
    REQUIRE(report.size() == 2);
  }

  SECTION("mixed utterances, foreign skills and bad context lengths are flagged") {
    auto ds = testutil::tiny_dataset();
    ds.instances[2].hypotheses[1].utterance = {7, 7};
    ds.instances[2].hypotheses[1].skill = "not_a_skill";
    ds.instances[2].hypotheses[1].context = {1};
    auto report = validate_dataset(ds);
    CHECK(report.size() == 3);
  }

  SECTION("validation is pure: equal inputs give equal reports") {
    auto ds = testutil::tiny_dataset();
    ds.instances[0].gold_index = 99;
    auto r1 = validate_dataset(ds);
    auto r2 = validate_dataset(ds);
    REQUIRE(r1.size() == r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) {
      CHECK(r1[i].instance_id == r2[i].instance_id);
      CHECK(r1[i].reason == r2[i].reason);
    }
  }
}

TEST_CASE("group_by_interpretation keeps first-appearance order") {
  auto ds = testutil::tiny_dataset();
  auto groups = group_by_interpretation(ds.instances[1]);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0] == std::vector<std::size_t>{0, 1});
  CHECK(groups[1] == std::vector<std::size_t>{2});
}

TEST_CASE("dataset round-trip is byte-identical") {
  const auto dir = temp_dir();
  const auto path1 = dir / "rt1.jsonl";
  const auto path2 = dir / "rt2.jsonl";
  auto ds = testutil::tiny_dataset();

  io::write_dataset(ds, path1);
  Dataset back = io::read_dataset(path1);
  io::write_dataset(back, path2);

  CHECK(io::read_file(path1) == io::read_file(path2));
  CHECK(io::read_file(io::header_path(path1)) == io::read_file(io::header_path(path2)));
  CHECK(back.instances.size() == ds.instances.size());
  CHECK(back.provenance == "test");
  CHECK(back.context_len == 4);
  CHECK(validate_dataset(back).empty());
}

TEST_CASE("dataset read errors") {
  const auto dir = temp_dir();

  SECTION("line missing gold_index names the line and field") {
    const auto path = dir / "broken.jsonl";
    io::write_file_atomic(io::header_path(path),
                          R"({"skills": ["s1"], "context_len": 4, "provenance": "x"})");
    io::write_file_atomic(
        path,
        R"({"id": "a", "utterance": [1], "hypotheses": [{"intent": "i", "slots": [], "skill": "s1", "context": [0,0,0,0]}]})"
        "\n");
    CHECK_THROWS_WITH(io::read_dataset(path),
                      Catch::Matchers::ContainsSubstring("line 1") &&
                          Catch::Matchers::ContainsSubstring("gold_index"));
  }

  SECTION("unknown skill is rejected") {
    const auto path = dir / "unknown.jsonl";
    io::write_file_atomic(io::header_path(path),
                          R"({"skills": ["s1"], "context_len": 4, "provenance": "x"})");
    io::write_file_atomic(
        path,
        R"({"id": "a", "utterance": [1], "gold_index": 0, "hypotheses": [{"intent": "i", "slots": [], "skill": "mystery", "context": [0,0,0,0]}]})"
        "\n");
    CHECK_THROWS_WITH(io::read_dataset(path), Catch::Matchers::ContainsSubstring("mystery"));
  }

  SECTION("empty data with an empty skill space is rejected") {
    const auto path = dir / "empty.jsonl";
    io::write_file_atomic(io::header_path(path),
                          R"({"skills": [], "context_len": 4, "provenance": "x"})");
    io::write_file_atomic(path, "");
    CHECK_THROWS_WITH(io::read_dataset(path),
                      Catch::Matchers::ContainsSubstring("skill space non-empty"));
  }

  SECTION("malformed json names the line") {
    const auto path = dir / "garbage.jsonl";
    io::write_file_atomic(io::header_path(path),
                          R"({"skills": ["s1"], "context_len": 4, "provenance": "x"})");
    io::write_file_atomic(path, "{nope\n");
    CHECK_THROWS_WITH(io::read_dataset(path), Catch::Matchers::ContainsSubstring("line 1"));
  }

  SECTION("missing header file") {
    CHECK_THROWS_AS(io::read_dataset(dir / "missing.jsonl"), DataError);
  }
}

TEST_CASE("ontology io round-trip and validation") {
  Ontology ont;
  ont.skill_space = SkillSpace::of({"skill_a", "skill_b"});
  ont.subscriptions["play"] = {{"skill_b", std::nullopt}, {"skill_a", Condition{0, 1}}};
  ont.subscriptions["stop"] = {{"skill_a", std::nullopt}};
  ont.normalize();

  const auto dir = temp_dir();
  const auto path = dir / "ontology.json";
  io::write_ontology(ont, path);
  Ontology back = io::read_ontology(path);

  CHECK(back.skill_space.skills == ont.skill_space.skills);
  REQUIRE(back.subscriptions.count("play") == 1);
  CHECK(back.subscriptions["play"].size() == 2);
  CHECK(back.subscriptions["play"][0].skill == "skill_a");  // lexicographic order
  REQUIRE(back.subscriptions["play"][0].condition.has_value());
  CHECK(back.subscriptions["play"][0].condition->signal_index == 0);
  CHECK(back.subscriptions["play"][1].condition == std::nullopt);

  const std::string first = io::ontology_to_json(ont);
  CHECK(io::ontology_to_json(back) == first);

  SECTION("subscription to a foreign skill is rejected on read") {
    Ontology bad = ont;
    bad.subscriptions["play"].push_back({"ghost_skill", std::nullopt});
    const auto bad_path = dir / "bad_ontology.json";
    io::write_file_atomic(bad_path, io::ontology_to_json(bad));
    CHECK_THROWS_WITH(io::read_ontology(bad_path),
                      Catch::Matchers::ContainsSubstring("ghost_skill"));
  }
}

TEST_CASE("condition gating") {
  Condition cond{1, 1};
  std::vector<int> yes{0, 1, 0, 0}, no{0, 0, 0, 0};
  CHECK(cond.accepts(yes));
  CHECK_FALSE(cond.accepts(no));
  Subscription unconditional{"s", std::nullopt};
  CHECK(unconditional.accepts(no));
}
