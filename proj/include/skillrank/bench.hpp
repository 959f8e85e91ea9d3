#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "skillrank/augment.hpp"
#include "skillrank/domain.hpp"
#include "skillrank/ranker.hpp"
#include "skillrank/rng.hpp"

namespace skillrank::bench {

// One list perturbation: either a removal ratio or an insertion count.
struct PerturbationSpec {
  enum class Kind { removal, insertion };
  Kind kind = Kind::removal;
  double removal_ratio = 0.0;
  int insertion_count = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (kind == Kind::removal && (removal_ratio < 0.0 || removal_ratio > 0.5))
      throw DataError("perturbation: removal ratio must lie in [0, 0.5]");
    if (kind == Kind::insertion && (insertion_count < 0 || insertion_count > 10))
      throw DataError("perturbation: insertion count must lie in {0..10}");
  }

  std::string label() const {
    if (kind == Kind::removal) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "removal@%.3f", removal_ratio);
      return buf;
    }
    return "insert@" + std::to_string(insertion_count);
  }
};

// Accuracy against an arbitrary router: top_of(instance) -> top index.
template <class RouteFn>
double accuracy_with(RouteFn&& top_of, const Dataset& ds) {
  if (ds.instances.empty()) throw DataError("accuracy: empty dataset");
  std::size_t hits = 0;
  for (const RoutingInstance& inst : ds.instances)
    if (top_of(inst) == inst.gold_index) ++hits;
  return static_cast<double>(hits) / static_cast<double>(ds.instances.size());
}

// Fraction of instances whose top-ranked hypothesis is the golden one.
inline double accuracy(const ranker::ModelVariant& model, const Dataset& ds, int threads = 0) {
  if (ds.instances.empty()) throw DataError("accuracy: empty dataset");
  const int t =
      std::max(1, threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency()));
  std::atomic<std::size_t> hits{0};
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      ranker::Engine eng(model);
      std::size_t local = 0;
      constexpr std::size_t kChunk = 64;
      for (std::size_t lo = next.fetch_add(kChunk); lo < ds.instances.size();
           lo = next.fetch_add(kChunk)) {
        const std::size_t hi = std::min(ds.instances.size(), lo + kChunk);
        for (std::size_t i = lo; i < hi; ++i) {
          const RoutingInstance& inst = ds.instances[i];
          eng.reset();
          auto vals = eng.graph().values(eng.scores(inst.hypotheses));
          if (ranker::argmax_lowest(vals) == inst.gold_index) ++local;
        }
      }
      hits += local;
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  if (t == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return static_cast<double>(hits.load()) / static_cast<double>(ds.instances.size());
}

// Removes floor(ratio * (n-1)) uniformly chosen non-golden hypotheses; the
// golden one is always retained and the remaining order is preserved.
inline RoutingInstance perturb_removal(const RoutingInstance& inst, double ratio,
                                       std::uint64_t seed) {
  if (ratio < 0.0 || ratio > 1.0) throw DataError("perturb_removal: ratio must lie in [0, 1]");
  const std::size_t n = inst.hypotheses.size();
  const std::size_t k =
      static_cast<std::size_t>(ratio * static_cast<double>(n - 1));
  if (k == 0) return inst;

  std::vector<std::size_t> non_gold;
  for (std::size_t i = 0; i < n; ++i)
    if (i != inst.gold_index) non_gold.push_back(i);

  Rng rng(derive_seed(seed, "removal"));
  auto picks = rng.sample_indices(non_gold.size(), k);
  std::vector<bool> drop(n, false);
  for (std::size_t p : picks) drop[non_gold[p]] = true;

  RoutingInstance out;
  out.id = inst.id;
  for (std::size_t i = 0; i < n; ++i) {
    if (drop[i]) continue;
    if (i == inst.gold_index) out.gold_index = out.hypotheses.size();
    out.hypotheses.push_back(inst.hypotheses[i]);
  }
  return out;
}

// Inserts k noise hypotheses built by the augmentation single-noise rule
// (random group, random donor, skill not proposed by that group, no
// duplicates) at uniformly random list positions. Errors if fewer than k
// legal noise hypotheses exist.
inline RoutingInstance perturb_insertion(const RoutingInstance& inst, int k,
                                         const SkillSpace& skills, std::uint64_t seed) {
  if (k < 0) throw DataError("perturb_insertion: k must be >= 0");
  if (k == 0) return inst;

  const auto groups = group_by_interpretation(inst);
  std::vector<std::vector<const Hypothesis*>> members(groups.size());
  std::vector<std::unordered_set<std::string>> taken(groups.size());
  std::size_t legal = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t i : groups[g]) {
      members[g].push_back(&inst.hypotheses[i]);
      taken[g].insert(inst.hypotheses[i].skill);
    }
    legal += skills.size() - taken[g].size();
  }
  if (static_cast<std::size_t>(k) > legal)
    throw DataError("perturb_insertion: only " + std::to_string(legal) +
                    " legal noise hypotheses exist, requested " + std::to_string(k));

  Rng rng(derive_seed(seed, "insertion"));
  RoutingInstance out = inst;
  for (int step = 0; step < k; ++step) {
    std::vector<std::size_t> open;
    for (std::size_t g = 0; g < groups.size(); ++g)
      if (taken[g].size() < skills.size()) open.push_back(g);
    const std::size_t g = open[rng.index(open.size())];
    Hypothesis noise;
    aug::draw_noise(rng, members[g], skills, taken[g], noise);
    const std::size_t pos = rng.index(out.hypotheses.size() + 1);
    out.hypotheses.insert(out.hypotheses.begin() + static_cast<std::ptrdiff_t>(pos),
                          std::move(noise));
    if (pos <= out.gold_index) ++out.gold_index;
  }
  return out;
}

// Applies one perturbation across a dataset with per-instance derived
// seeds; the result depends only on (dataset, spec), never on the model
// being evaluated.
inline Dataset perturb_dataset(const Dataset& ds, const PerturbationSpec& spec) {
  spec.validate();
  Dataset out;
  out.skill_space = ds.skill_space;
  out.context_len = ds.context_len;
  out.provenance = ds.provenance + "+" + spec.label();
  out.instances.reserve(ds.instances.size());
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    const std::uint64_t s = derive_seed(spec.seed, "perturb", i);
    if (spec.kind == PerturbationSpec::Kind::removal)
      out.instances.push_back(perturb_removal(ds.instances[i], spec.removal_ratio, s));
    else
      out.instances.push_back(
          perturb_insertion(ds.instances[i], spec.insertion_count, ds.skill_space, s));
  }
  return out;
}

// ----- the 12-variant grid -----

struct TestCondition {
  std::string name;
  const Dataset* data = nullptr;
  std::optional<PerturbationSpec> perturb;
};

struct GridConfig {
  ranker::TrainConfig train;
  std::uint64_t seed = 0;  // per-variant training seeds derive from this
  int threads = 0;         // concurrent grid cells; 0 = hardware concurrency
};

// encoder-major, then loss, then augmentation: twelve cells, baseline first
inline std::vector<ranker::VariantSpec> grid_variants() {
  std::vector<ranker::VariantSpec> out;
  for (ranker::Encoder enc :
       {ranker::Encoder::sequence, ranker::Encoder::attention, ranker::Encoder::aggregation})
    for (ranker::Loss loss : {ranker::Loss::bce, ranker::Loss::mce})
      for (bool augmented : {false, true}) out.push_back({enc, loss, augmented});
  return out;
}

struct ReportCell {
  ranker::VariantSpec variant;
  std::string condition;
  double accuracy = 0.0;
  double delta_pp = 0.0;  // percentage points against the baseline cell
};

struct EvaluationReport {
  std::vector<std::string> conditions;
  std::vector<ranker::VariantSpec> variants;
  std::vector<ReportCell> cells;  // condition-major, variant order within
  std::string baseline_condition;
  double baseline_accuracy = 0.0;
  std::uint64_t seed = 0;

  const ReportCell& cell(const ranker::VariantSpec& v, const std::string& condition) const {
    for (const ReportCell& c : cells)
      if (c.condition == condition && c.variant.encoder == v.encoder &&
          c.variant.loss == v.loss && c.variant.augmented == v.augmented)
        return c;
    throw DataError("report: no cell for " + v.label() + " on '" + condition + "'");
  }
};

struct GridResult {
  EvaluationReport report;
  std::vector<ranker::ModelVariant> models;  // parallel to report.variants
};

// Trains all twelve variants (augmented cells on train2, the rest on
// train1) with identical training config and per-variant derived seeds,
// then evaluates every variant on every condition. Perturbed datasets are
// materialized once, so each variant sees byte-identical inputs. The
// baseline is (sequence, BCE, no augmentation) on the first condition,
// which must be the unperturbed offline test.
inline GridResult run_grid(const Dataset& train1, const Dataset& train2,
                           const std::vector<TestCondition>& tests, const GridConfig& cfg) {
  if (tests.empty()) throw DataError("run_grid: no test conditions");
  if (tests.front().perturb.has_value())
    throw DataError("run_grid: the first condition must be the unperturbed offline test");

  // materialize every perturbed condition once
  std::vector<Dataset> storage;
  std::vector<const Dataset*> eval_sets;
  storage.reserve(tests.size());
  for (const TestCondition& t : tests) {
    if (!t.data) throw DataError("run_grid: condition '" + t.name + "' has no dataset");
    if (t.perturb) {
      storage.push_back(perturb_dataset(*t.data, *t.perturb));
      eval_sets.push_back(&storage.back());
    } else {
      eval_sets.push_back(t.data);
    }
  }

  const auto variants = grid_variants();
  std::vector<ranker::ModelVariant> models(variants.size());
  std::vector<std::vector<double>> acc(variants.size(),
                                       std::vector<double>(tests.size(), 0.0));
  std::vector<std::string> failures(variants.size());

  const int workers = std::max(
      1, cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  auto run_cell = [&](std::size_t vi) {
    try {
      ranker::TrainConfig tc = cfg.train;
      tc.seed = derive_seed(cfg.seed, "variant", vi);
      if (workers > 1) tc.threads = 1;  // cells already run concurrently
      const Dataset& data = variants[vi].augmented ? train2 : train1;
      models[vi] = ranker::train(variants[vi], data, tc).model;
      for (std::size_t ci = 0; ci < eval_sets.size(); ++ci)
        acc[vi][ci] = accuracy(models[vi], *eval_sets[ci], 1);
    } catch (const std::exception& e) {
      failures[vi] = e.what();
    }
  };
  if (workers == 1) {
    for (std::size_t vi = 0; vi < variants.size(); ++vi) run_cell(vi);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t vi = next.fetch_add(1); vi < variants.size(); vi = next.fetch_add(1))
          run_cell(vi);
      });
    for (auto& th : pool) th.join();
  }
  for (std::size_t vi = 0; vi < variants.size(); ++vi)
    if (!failures[vi].empty())
      throw DataError("run_grid: training failed for variant " + variants[vi].label() + ": " +
                      failures[vi]);

  GridResult result;
  EvaluationReport& rep = result.report;
  rep.variants = variants;
  rep.seed = cfg.seed;
  for (const TestCondition& t : tests) rep.conditions.push_back(t.name);
  rep.baseline_condition = tests.front().name;
  rep.baseline_accuracy = acc[0][0];  // (sequence, bce, no-aug) on the offline test
  for (std::size_t ci = 0; ci < tests.size(); ++ci)
    for (std::size_t vi = 0; vi < variants.size(); ++vi)
      rep.cells.push_back({variants[vi], tests[ci].name, acc[vi][ci],
                           (acc[vi][ci] - rep.baseline_accuracy) * 100.0});
  result.models = std::move(models);
  return result;
}

// Per-cell median across several runs of the same grid layout; deltas are
// recomputed against the median baseline cell.
inline EvaluationReport median_reports(const std::vector<EvaluationReport>& reports) {
  if (reports.empty()) throw DataError("median_reports: no reports");
  const EvaluationReport& first = reports.front();
  for (const auto& r : reports)
    if (r.conditions != first.conditions || r.cells.size() != first.cells.size())
      throw DataError("median_reports: reports have different layouts");

  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };

  EvaluationReport out = first;
  std::vector<double> samples;
  for (std::size_t i = 0; i < out.cells.size(); ++i) {
    samples.clear();
    for (const auto& r : reports) samples.push_back(r.cells[i].accuracy);
    out.cells[i].accuracy = median(samples);
  }
  out.baseline_accuracy =
      out.cell(out.variants.front(), out.baseline_condition).accuracy;
  for (auto& c : out.cells) c.delta_pp = (c.accuracy - out.baseline_accuracy) * 100.0;
  return out;
}

}  // namespace skillrank::bench
