#pragma once

#include <cstdio>
#include <string>

#include <json.hpp>

#include "skillrank/bench.hpp"
#include "skillrank/dataset_io.hpp"

namespace skillrank::io {

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline ordered_json report_to_json(const bench::EvaluationReport& rep,
                                   ordered_json metadata = ordered_json::object()) {
  ordered_json j;
  j["baseline"] = {{"condition", rep.baseline_condition},
                   {"encoder", "sequence"},
                   {"loss", "bce"},
                   {"augmented", false},
                   {"accuracy", rep.baseline_accuracy}};
  j["conditions"] = rep.conditions;
  ordered_json variants = ordered_json::array();
  for (const auto& v : rep.variants)
    variants.push_back({{"encoder", ranker::to_string(v.encoder)},
                        {"loss", ranker::to_string(v.loss)},
                        {"augmented", v.augmented}});
  j["variants"] = std::move(variants);
  ordered_json cells = ordered_json::array();
  for (const auto& c : rep.cells)
    cells.push_back({{"condition", c.condition},
                     {"encoder", ranker::to_string(c.variant.encoder)},
                     {"loss", ranker::to_string(c.variant.loss)},
                     {"augmented", c.variant.augmented},
                     {"accuracy", c.accuracy},
                     {"delta_pp", c.delta_pp}});
  j["cells"] = std::move(cells);
  j["seed"] = rep.seed;
  j["metadata"] = std::move(metadata);
  return j;
}

inline bench::EvaluationReport report_from_json(const ordered_json& j) {
  const std::string where = "report";
  bench::EvaluationReport rep;
  const auto base = detail::field<ordered_json>(j, "baseline", where);
  rep.baseline_condition = detail::field<std::string>(base, "condition", where);
  rep.baseline_accuracy = detail::field<double>(base, "accuracy", where);
  rep.conditions = detail::field<std::vector<std::string>>(j, "conditions", where);
  for (const auto& v : detail::field<ordered_json>(j, "variants", where))
    rep.variants.push_back(
        {ranker::encoder_from_string(detail::field<std::string>(v, "encoder", where)),
         ranker::loss_from_string(detail::field<std::string>(v, "loss", where)),
         detail::field<bool>(v, "augmented", where)});
  for (const auto& c : detail::field<ordered_json>(j, "cells", where)) {
    bench::ReportCell cell;
    cell.condition = detail::field<std::string>(c, "condition", where);
    cell.variant = {ranker::encoder_from_string(detail::field<std::string>(c, "encoder", where)),
                    ranker::loss_from_string(detail::field<std::string>(c, "loss", where)),
                    detail::field<bool>(c, "augmented", where)};
    cell.accuracy = detail::field<double>(c, "accuracy", where);
    cell.delta_pp = detail::field<double>(c, "delta_pp", where);
    rep.cells.push_back(std::move(cell));
  }
  if (j.contains("seed")) rep.seed = j.at("seed").get<std::uint64_t>();
  return rep;
}

// Flat cells, one row per (condition, variant); accuracies carry enough
// digits to recompute the deltas exactly.
inline std::string render_csv(const bench::EvaluationReport& rep) {
  std::string out = "condition,encoder,loss,augmented,accuracy,delta_pp\n";
  for (const auto& c : rep.cells) {
    out += c.condition;
    out += ',';
    out += ranker::to_string(c.variant.encoder);
    out += ',';
    out += ranker::to_string(c.variant.loss);
    out += ',';
    out += c.variant.augmented ? "true" : "false";
    out += ',';
    out += fmt("%.12f", c.accuracy);
    out += ',';
    out += fmt("%.12f", c.delta_pp);
    out += '\n';
  }
  return out;
}

inline std::string fmt_row(const std::string& head, const std::vector<std::string>& cells) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-24s", head.c_str());
  std::string out = buf;
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%16s", c.c_str());
    out += buf;
  }
  out += "\n";
  return out;
}

// Aligned tables of percentage-point deltas against the baseline cell,
// one table per condition family (offline/online, removal sweep,
// insertion sweep).
inline std::string render_text(const bench::EvaluationReport& rep) {
  auto family = [](const std::string& name) {
    if (name.rfind("removal@", 0) == 0) return 1;
    if (name.rfind("insert@", 0) == 0) return 2;
    return 0;
  };
  static const char* kTitles[3] = {"overall evaluation", "hypothesis removal sweep",
                                   "hypothesis insertion sweep"};
  std::string out;
  for (int fam = 0; fam < 3; ++fam) {
    std::vector<std::string> cols;
    for (const auto& c : rep.conditions)
      if (family(c) == fam) cols.push_back(c);
    if (cols.empty()) continue;

    out += kTitles[fam];
    out += " (delta vs baseline, percentage points)\n";
    out += fmt_row("variant", cols);
    out += std::string(24 + cols.size() * 16, '-') + "\n";
    for (const auto& v : rep.variants) {
      std::vector<std::string> vals;
      for (const auto& c : cols) vals.push_back(fmt("%+.2f", rep.cell(v, c).delta_pp));
      out += fmt_row(v.label(), vals);
    }
    out += "\n";
  }
  out += "baseline: sequence+bce on '" + rep.baseline_condition +
         "', accuracy " + fmt("%.4f", rep.baseline_accuracy) + "\n";
  return out;
}

}  // namespace skillrank::io
