// skillrank command-line laboratory: synthetic data generation, noise
// augmentation, ranker training, perturbation benchmarks and grid reports.
//
// Every subcommand reads one JSON config (strict: unknown keys are
// rejected), derives all randomness from explicit seeds, and writes a
// manifest with input/output checksums sufficient to reproduce the run.
// Passing a manifest as --config replays its embedded config.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "skillrank/augment.hpp"
#include "skillrank/bench.hpp"
#include "skillrank/checkpoint.hpp"
#include "skillrank/dataset_io.hpp"
#include "skillrank/report.hpp"
#include "skillrank/world.hpp"

namespace fs = std::filesystem;
using namespace skillrank;
using io::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string format = "text";
};

void require_keys(const ordered_json& j, const std::vector<std::string>& allowed,
                  const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw DataError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
T get_or(const ordered_json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("config key '") + key + "': " + e.what());
  }
}

// --config may point at a plain config or at a manifest from a previous
// run; a manifest replays its embedded config.
ordered_json load_config(const CommonArgs& args, const std::string& subcommand) {
  ordered_json j = ordered_json::object();
  if (!args.config_path.empty()) {
    try {
      j = ordered_json::parse(io::read_file(args.config_path));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(args.config_path + ": " + e.what());
    }
  }
  if (j.contains("subcommand")) {  // manifest replay
    if (j.at("subcommand").get<std::string>() != subcommand)
      throw DataError("manifest was recorded for subcommand '" +
                      j.at("subcommand").get<std::string>() + "', not '" + subcommand + "'");
    j = j.at("config");
  }
  if (args.seed_set) j["seed"] = args.seed;
  if (!args.out_dir.empty()) j["out"] = args.out_dir;
  return j;
}

void write_manifest(const std::string& subcommand, const ordered_json& config,
                    const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs,
                    const fs::path& out_dir) {
  ordered_json m;
  m["subcommand"] = subcommand;
  m["config"] = config;
  ordered_json in = ordered_json::object();
  for (const auto& p : inputs) in[p.string()] = io::sha256_file(p);
  m["inputs"] = std::move(in);
  ordered_json out = ordered_json::object();
  for (const auto& p : outputs) out[p.string()] = io::sha256_file(p);
  m["outputs"] = std::move(out);
  io::write_file_atomic(out_dir / ("manifest_" + subcommand + ".json"), m.dump(2) + "\n");
}

world::WorldConfig world_from_json(const ordered_json& j) {
  require_keys(j,
               {"n_intents", "n_skills", "subs_min", "subs_max", "utterance_vocab",
                "utt_len_min", "utt_len_max", "gold_rule_seed", "context_len", "p_conditional",
                "p_second_interpretation"},
               "world config");
  world::WorldConfig cfg;
  cfg.n_intents = get_or(j, "n_intents", cfg.n_intents);
  cfg.n_skills = get_or(j, "n_skills", cfg.n_skills);
  cfg.subs_min = get_or(j, "subs_min", cfg.subs_min);
  cfg.subs_max = get_or(j, "subs_max", cfg.subs_max);
  cfg.utterance_vocab = get_or(j, "utterance_vocab", cfg.utterance_vocab);
  cfg.utt_len_min = get_or(j, "utt_len_min", cfg.utt_len_min);
  cfg.utt_len_max = get_or(j, "utt_len_max", cfg.utt_len_max);
  cfg.gold_rule_seed = get_or(j, "gold_rule_seed", cfg.gold_rule_seed);
  cfg.context_len = get_or(j, "context_len", cfg.context_len);
  cfg.p_conditional = get_or(j, "p_conditional", cfg.p_conditional);
  cfg.p_second_interpretation = get_or(j, "p_second_interpretation", cfg.p_second_interpretation);
  return cfg;
}

world::DriftConfig drift_from_json(const ordered_json& j, std::uint64_t default_seed) {
  require_keys(j, {"p_unsubscribe", "p_new_subscription", "seed"}, "drift config");
  world::DriftConfig cfg;
  cfg.p_unsubscribe = get_or(j, "p_unsubscribe", cfg.p_unsubscribe);
  cfg.p_new_subscription = get_or(j, "p_new_subscription", cfg.p_new_subscription);
  cfg.seed = get_or(j, "seed", default_seed);
  return cfg;
}

ranker::Dims dims_from_json(const ordered_json& j) {
  require_keys(j, {"d_tok", "d_int", "d_slot", "d_skill", "d_ctx", "d_e", "d_h", "d_f", "heads",
                   "d_k"},
               "dims config");
  ranker::Dims d;
  d.d_tok = get_or(j, "d_tok", d.d_tok);
  d.d_int = get_or(j, "d_int", d.d_int);
  d.d_slot = get_or(j, "d_slot", d.d_slot);
  d.d_skill = get_or(j, "d_skill", d.d_skill);
  d.d_ctx = get_or(j, "d_ctx", d.d_ctx);
  d.d_e = get_or(j, "d_e", d.d_e);
  d.d_h = get_or(j, "d_h", d.d_h);
  d.d_f = get_or(j, "d_f", d.d_f);
  d.heads = get_or(j, "heads", d.heads);
  d.d_k = get_or(j, "d_k", d.d_k);
  return d;
}

ranker::TrainConfig train_from_json(const ordered_json& j, std::uint64_t default_seed) {
  require_keys(j,
               {"epochs", "batch_size", "seed", "lr", "beta1", "beta2", "eps", "dims",
                "utterance_vocab", "shuffle_hypotheses", "grad_groups", "threads"},
               "train config");
  ranker::TrainConfig cfg;
  cfg.epochs = get_or(j, "epochs", 15);
  cfg.batch_size = get_or(j, "batch_size", 256);
  cfg.seed = get_or(j, "seed", default_seed);
  cfg.adam.lr = get_or(j, "lr", cfg.adam.lr);
  cfg.adam.beta1 = get_or(j, "beta1", cfg.adam.beta1);
  cfg.adam.beta2 = get_or(j, "beta2", cfg.adam.beta2);
  cfg.adam.eps = get_or(j, "eps", cfg.adam.eps);
  if (j.contains("dims")) cfg.dims = dims_from_json(j.at("dims"));
  cfg.utterance_vocab = get_or(j, "utterance_vocab", 0);
  cfg.shuffle_hypotheses = get_or(j, "shuffle_hypotheses", false);
  cfg.grad_groups = get_or(j, "grad_groups", cfg.grad_groups);
  cfg.threads = get_or(j, "threads", 0);
  return cfg;
}

fs::path out_dir_of(const ordered_json& cfg, const char* fallback) {
  const fs::path dir = get_or<std::string>(cfg, "out", fallback);
  fs::create_directories(dir);
  return dir;
}

void print_stats(const char* name, const Dataset& ds) {
  const auto st = dataset_stats(ds);
  std::printf("%-16s %8zu instances  %5.2f hypotheses/instance  %4.2f interpretations/instance\n",
              name, st.instances, st.mean_hypotheses, st.mean_groups);
}

// gen-data: ontology + train1/test1 + drifted ontology + drifted test2
int cmd_gen_data(const CommonArgs& args) {
  ordered_json cfg = load_config(args, "gen-data");
  require_keys(cfg, {"world", "drift", "n_train", "n_test", "seed", "out"}, "gen-data config");
  const auto wcfg = world_from_json(cfg.contains("world") ? cfg.at("world") : ordered_json::object());
  const std::uint64_t seed = get_or<std::uint64_t>(cfg, "seed", 1);
  const auto dcfg = drift_from_json(cfg.contains("drift") ? cfg.at("drift") : ordered_json::object(),
                                    derive_seed(seed, "drift"));
  const int n_train = get_or(cfg, "n_train", 50000);
  const int n_test = get_or(cfg, "n_test", 5000);
  const fs::path dir = out_dir_of(cfg, "data");

  const auto ontology = world::generate_ontology(wcfg, derive_seed(seed, "ontology"));
  const auto train1 = world::sample_dataset(ontology, wcfg, n_train, derive_seed(seed, "train1"),
                                            "train1");
  const auto test1 =
      world::sample_dataset(ontology, wcfg, n_test, derive_seed(seed, "test1"), "test1");
  const auto drifted = world::drift_ontology(ontology, dcfg);
  const auto regen = world::regenerate_under_drift(test1, drifted);

  io::write_ontology(ontology, dir / "ontology.json");
  io::write_ontology(drifted, dir / "ontology_drifted.json");
  io::write_dataset(train1, dir / "train1.jsonl");
  io::write_dataset(test1, dir / "test1.jsonl");
  io::write_dataset(regen.dataset, dir / "test2.jsonl");

  print_stats("train1", train1);
  print_stats("test1", test1);
  print_stats("test2-drifted", regen.dataset);
  std::printf("%-16s %8zu instances dropped (golden no longer proposable)\n", "drift",
              regen.dropped);

  write_manifest("gen-data", cfg, {},
                 {dir / "ontology.json", dir / "ontology_drifted.json", dir / "train1.jsonl",
                  dir / "train1.header.json", dir / "test1.jsonl", dir / "test1.header.json",
                  dir / "test2.jsonl", dir / "test2.header.json"},
                 dir);
  return kExitOk;
}

// augment: train1 -> train2 with m noise hypotheses per interpretation group
int cmd_augment(const CommonArgs& args) {
  ordered_json cfg = load_config(args, "augment");
  require_keys(cfg, {"in", "m", "seed", "out"}, "augment config");
  const fs::path in = get_or<std::string>(cfg, "in", "data/train1.jsonl");
  const int m = get_or(cfg, "m", 3);
  const std::uint64_t seed = get_or<std::uint64_t>(cfg, "seed", 1);
  const fs::path dir = out_dir_of(cfg, in.parent_path().string().c_str());

  auto train1 = io::read_dataset(in);
  auto train2 = aug::augment_dataset(train1, {.m = m, .seed = seed});
  train2.provenance = "train2-augmented(m=" + std::to_string(m) + ")";
  const fs::path out_path = dir / "train2.jsonl";
  io::write_dataset(train2, out_path);

  print_stats("train2", train2);
  write_manifest("augment", cfg, {in, io::header_path(in)},
                 {out_path, io::header_path(out_path)}, dir);
  return kExitOk;
}

// train: one variant on one dataset
int cmd_train(const CommonArgs& args) {
  ordered_json cfg = load_config(args, "train");
  require_keys(cfg, {"in", "encoder", "loss", "augmented", "train", "seed", "out"},
               "train config");
  const fs::path in = get_or<std::string>(cfg, "in", "data/train1.jsonl");
  const std::uint64_t seed = get_or<std::uint64_t>(cfg, "seed", 1);
  ranker::VariantSpec spec;
  spec.encoder = ranker::encoder_from_string(get_or<std::string>(cfg, "encoder", "sequence"));
  spec.loss = ranker::loss_from_string(get_or<std::string>(cfg, "loss", "bce"));
  spec.augmented = get_or(cfg, "augmented", false);
  auto tcfg = train_from_json(cfg.contains("train") ? cfg.at("train") : ordered_json::object(),
                              seed);
  const fs::path dir = out_dir_of(cfg, "models");

  const auto data = io::read_dataset(in);
  const auto violations = validate_dataset(data);
  if (!violations.empty())
    throw DataError("invalid dataset: " + violations.front().instance_id + ": " +
                    violations.front().reason);

  auto result = ranker::train(spec, data, tcfg);
  const fs::path model_path = dir / ("model_" + spec.label() + ".json");
  io::save_model(result.model, model_path);

  std::printf("trained %s on %zu instances: epoch loss %.5f -> %.5f\n", spec.label().c_str(),
              data.instances.size(), result.epoch_loss.front(), result.epoch_loss.back());
  ordered_json curve = result.epoch_loss;
  io::write_file_atomic(dir / ("loss_" + spec.label() + ".json"), curve.dump() + "\n");

  write_manifest("train", cfg, {in, io::header_path(in)},
                 {model_path, dir / ("loss_" + spec.label() + ".json")}, dir);
  return kExitOk;
}

bench::PerturbationSpec perturb_from_json(const ordered_json& j, std::uint64_t default_seed) {
  require_keys(j, {"kind", "ratio", "count", "seed"}, "perturb config");
  bench::PerturbationSpec spec;
  const std::string kind = get_or<std::string>(j, "kind", "removal");
  if (kind == "removal") {
    spec.kind = bench::PerturbationSpec::Kind::removal;
    spec.removal_ratio = get_or(j, "ratio", 0.0);
  } else if (kind == "insertion") {
    spec.kind = bench::PerturbationSpec::Kind::insertion;
    spec.insertion_count = get_or(j, "count", 0);
  } else {
    throw DataError("perturb config: unknown kind '" + kind + "'");
  }
  spec.seed = get_or(j, "seed", default_seed);
  spec.validate();
  return spec;
}

// eval: accuracy of a checkpoint on a dataset, optionally perturbed
int cmd_eval(const CommonArgs& args) {
  ordered_json cfg = load_config(args, "eval");
  require_keys(cfg, {"model", "data", "perturb", "seed", "out", "threads"}, "eval config");
  const fs::path model_path = get_or<std::string>(cfg, "model", "models/model_sequence+bce.json");
  const fs::path data_path = get_or<std::string>(cfg, "data", "data/test1.jsonl");
  const std::uint64_t seed = get_or<std::uint64_t>(cfg, "seed", 1);
  const fs::path dir = out_dir_of(cfg, "eval");

  const auto model = io::load_model(model_path);
  auto data = io::read_dataset(data_path);
  std::string condition = data.provenance;
  if (cfg.contains("perturb")) {
    const auto spec = perturb_from_json(cfg.at("perturb"), derive_seed(seed, "perturb"));
    data = bench::perturb_dataset(data, spec);
    condition = data.provenance;
  }
  const double acc = bench::accuracy(model, data, get_or(cfg, "threads", 0));
  std::printf("%s on %s: accuracy %.4f\n", model.spec.label().c_str(), condition.c_str(), acc);

  ordered_json out;
  out["model"] = model.spec.label();
  out["condition"] = condition;
  out["instances"] = data.instances.size();
  out["accuracy"] = acc;
  io::write_file_atomic(dir / "eval.json", out.dump(2) + "\n");
  write_manifest("eval", cfg, {model_path, data_path, io::header_path(data_path)},
                 {dir / "eval.json"}, dir);
  return kExitOk;
}

// perturb: write a perturbed copy of a dataset for audits
int cmd_perturb(const CommonArgs& args) {
  ordered_json cfg = load_config(args, "perturb");
  require_keys(cfg, {"in", "kind", "ratio", "count", "seed", "out"}, "perturb config");
  const fs::path in = get_or<std::string>(cfg, "in", "data/test1.jsonl");
  const std::uint64_t seed = get_or<std::uint64_t>(cfg, "seed", 1);
  ordered_json pj = ordered_json::object();
  for (const char* key : {"kind", "ratio", "count", "seed"})
    if (cfg.contains(key)) pj[key] = cfg.at(key);
  const auto spec = perturb_from_json(pj, seed);
  const fs::path dir = out_dir_of(cfg, in.parent_path().string().c_str());

  const auto data = io::read_dataset(in);
  const auto out = bench::perturb_dataset(data, spec);
  const fs::path out_path = dir / (in.stem().string() + "_" + spec.label() + ".jsonl");
  io::write_dataset(out, out_path);
  print_stats(out.provenance.c_str(), out);
  write_manifest("perturb", cfg, {in, io::header_path(in)},
                 {out_path, io::header_path(out_path)}, dir);
  return kExitOk;
}

// grid: 12 variants x all robustness conditions, with optional multi-seed medians
int cmd_grid(const CommonArgs& args) {
  ordered_json cfg = load_config(args, "grid");
  require_keys(cfg,
               {"train1", "train2", "test1", "test2", "removal_ratios", "insertion_counts",
                "train", "seed", "seeds", "out", "threads"},
               "grid config");
  const fs::path train1_path = get_or<std::string>(cfg, "train1", "data/train1.jsonl");
  const fs::path train2_path = get_or<std::string>(cfg, "train2", "data/train2.jsonl");
  const fs::path test1_path = get_or<std::string>(cfg, "test1", "data/test1.jsonl");
  const fs::path test2_path = get_or<std::string>(cfg, "test2", "data/test2.jsonl");
  const std::uint64_t seed = get_or<std::uint64_t>(cfg, "seed", 1);
  std::vector<std::uint64_t> seeds =
      get_or<std::vector<std::uint64_t>>(cfg, "seeds", {seed});
  const auto ratios =
      get_or<std::vector<double>>(cfg, "removal_ratios", {0.0, 0.125, 0.25, 0.375, 0.5});
  std::vector<int> default_counts;
  for (int k = 0; k <= 10; ++k) default_counts.push_back(k);
  const auto counts = get_or<std::vector<int>>(cfg, "insertion_counts", default_counts);
  const fs::path dir = out_dir_of(cfg, "grid");

  const auto train1 = io::read_dataset(train1_path);
  const auto train2 = io::read_dataset(train2_path);
  const auto test1 = io::read_dataset(test1_path);
  const auto test2 = io::read_dataset(test2_path);

  std::vector<fs::path> outputs;
  std::vector<io::ordered_json> seed_reports;
  std::vector<bench::EvaluationReport> reports;
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    bench::GridConfig gcfg;
    gcfg.seed = seeds[si];
    gcfg.train = train_from_json(cfg.contains("train") ? cfg.at("train") : ordered_json::object(),
                                 seeds[si]);
    gcfg.threads = get_or(cfg, "threads", 0);

    std::vector<bench::TestCondition> tests;
    tests.push_back({"test1", &test1, std::nullopt});
    tests.push_back({"test2-drifted", &test2, std::nullopt});
    for (double r : ratios) {
      bench::PerturbationSpec spec;
      spec.kind = bench::PerturbationSpec::Kind::removal;
      spec.removal_ratio = r;
      spec.seed = derive_seed(seeds[si], "removal", static_cast<std::uint64_t>(r * 1000));
      tests.push_back({spec.label(), &test1, spec});
    }
    for (int k : counts) {
      bench::PerturbationSpec spec;
      spec.kind = bench::PerturbationSpec::Kind::insertion;
      spec.insertion_count = k;
      spec.seed = derive_seed(seeds[si], "insertion", static_cast<std::uint64_t>(k));
      tests.push_back({spec.label(), &test1, spec});
    }

    auto result = bench::run_grid(train1, train2, tests, gcfg);
    reports.push_back(result.report);

    const std::string tag = seeds.size() > 1 ? "_seed" + std::to_string(si) : "";
    for (std::size_t vi = 0; vi < result.models.size(); ++vi) {
      const fs::path p =
          dir / ("model_" + result.report.variants[vi].label() + tag + ".json");
      io::save_model(result.models[vi], p);
      outputs.push_back(p);
    }
    if (seeds.size() > 1) {
      const fs::path p = dir / ("report" + tag + ".json");
      io::write_file_atomic(p, io::report_to_json(result.report).dump(2) + "\n");
      outputs.push_back(p);
    }
  }

  auto final_report = seeds.size() > 1 ? bench::median_reports(reports) : reports.front();
  ordered_json meta;
  meta["seeds"] = seeds;
  meta["median_of"] = seeds.size();
  io::write_file_atomic(dir / "report.json",
                        io::report_to_json(final_report, meta).dump(2) + "\n");
  io::write_file_atomic(dir / "report.csv", io::render_csv(final_report));
  outputs.push_back(dir / "report.json");
  outputs.push_back(dir / "report.csv");
  std::fputs(io::render_text(final_report).c_str(), stdout);

  write_manifest("grid", cfg,
                 {train1_path, train2_path, test1_path, test2_path}, outputs, dir);
  return kExitOk;
}

// report: re-render a stored report
int cmd_report(const CommonArgs& args) {
  ordered_json cfg = load_config(args, "report");
  require_keys(cfg, {"report", "format", "seed", "out"}, "report config");
  const fs::path in = get_or<std::string>(cfg, "report", "grid/report.json");
  const std::string format = !args.format.empty() ? args.format
                                                  : get_or<std::string>(cfg, "format", "text");
  ordered_json j;
  try {
    j = ordered_json::parse(io::read_file(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(in.string() + ": " + e.what());
  }
  const auto rep = io::report_from_json(j);
  if (format == "csv")
    std::fputs(io::render_csv(rep).c_str(), stdout);
  else if (format == "json")
    std::fputs((io::report_to_json(rep).dump(2) + "\n").c_str(), stdout);
  else if (format == "text")
    std::fputs(io::render_text(rep).c_str(), stdout);
  else
    throw CLI::ValidationError("--format", "must be csv, json or text");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale robustness laboratory for list-wise skill routing"};
  app.require_subcommand(1);

  CommonArgs args;
  int (*handler)(const CommonArgs&) = nullptr;

  auto add_common = [&](CLI::App* sub, int (*fn)(const CommonArgs&)) {
    sub->add_option("--config", args.config_path, "JSON config or manifest to replay");
    sub->add_option("--out", args.out_dir, "output directory (overrides config)");
    sub->add_option("--seed", args.seed, "global seed (overrides config)")
        ->each([&](const std::string&) { args.seed_set = true; });
    sub->callback([&, fn] { handler = fn; });
    return sub;
  };

  add_common(app.add_subcommand("gen-data", "generate ontology and datasets"), cmd_gen_data);
  add_common(app.add_subcommand("augment", "inject noise hypotheses into a training set"),
             cmd_augment);
  add_common(app.add_subcommand("train", "train one model variant"), cmd_train);
  add_common(app.add_subcommand("eval", "evaluate a checkpoint on a dataset"), cmd_eval);
  add_common(app.add_subcommand("perturb", "write a perturbed dataset"), cmd_perturb);
  add_common(app.add_subcommand("grid", "train and evaluate the 12-variant grid"), cmd_grid);
  auto* report_cmd =
      add_common(app.add_subcommand("report", "re-render a stored report"), cmd_report);
  report_cmd->add_option("--format", args.format, "csv, json or text");

  try {
    app.parse(argc, argv);
    return handler ? handler(args) : kExitUsage;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return kExitOk;  // --help
    std::fprintf(stderr, "%s\n", e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
