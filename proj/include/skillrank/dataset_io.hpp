#pragma once

#include <filesystem>
#include <sstream>
#include <string>

#include <json.hpp>

#include "skillrank/domain.hpp"
#include "skillrank/io_util.hpp"

namespace skillrank::io {

using ordered_json = nlohmann::ordered_json;

// Datasets are stored as JSON lines (one RoutingInstance per line) next to
// a sidecar header carrying the skill space, context length and provenance.
inline std::filesystem::path header_path(const std::filesystem::path& data_path) {
  std::filesystem::path p = data_path;
  p.replace_extension(".header.json");
  return p;
}

namespace detail {

inline ordered_json hypothesis_to_json(const Hypothesis& h) {
  ordered_json slots = ordered_json::array();
  for (const auto& [name, value] : h.interpretation.normalized_slots())
    slots.push_back(ordered_json::array({name, value}));
  ordered_json j;
  j["intent"] = h.interpretation.intent;
  j["slots"] = std::move(slots);
  j["skill"] = h.skill;
  j["context"] = h.context;
  return j;
}

template <class T>
T field(const ordered_json& j, const char* name, const std::string& where) {
  if (!j.contains(name)) throw DataError(where + ": missing field '" + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": field '" + name + "': " + e.what());
  }
}

inline Hypothesis hypothesis_from_json(const ordered_json& j, const std::string& where,
                                       const std::vector<TokenId>& utterance) {
  Hypothesis h;
  h.utterance = utterance;
  h.interpretation.intent = field<std::string>(j, "intent", where);
  for (const auto& s : field<ordered_json>(j, "slots", where)) {
    if (!s.is_array() || s.size() != 2)
      throw DataError(where + ": field 'slots': entries must be [name, value] pairs");
    h.interpretation.slots.emplace_back(s[0].get<std::string>(), s[1].get<std::string>());
  }
  h.skill = field<std::string>(j, "skill", where);
  h.context = field<std::vector<int>>(j, "context", where);
  return h;
}

}  // namespace detail

inline std::string dataset_to_jsonl(const Dataset& ds) {
  std::string out;
  for (const RoutingInstance& inst : ds.instances) {
    ordered_json j;
    j["id"] = inst.id;
    j["utterance"] = inst.hypotheses.empty() ? std::vector<TokenId>{} : inst.hypotheses[0].utterance;
    j["gold_index"] = inst.gold_index;
    ordered_json hyps = ordered_json::array();
    for (const Hypothesis& h : inst.hypotheses) hyps.push_back(detail::hypothesis_to_json(h));
    j["hypotheses"] = std::move(hyps);
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  ordered_json header;
  header["skills"] = ds.skill_space.skills;
  header["context_len"] = ds.context_len;
  header["provenance"] = ds.provenance;
  write_file_atomic(header_path(path), header.dump(2) + "\n");
  write_file_atomic(path, dataset_to_jsonl(ds));
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  const std::filesystem::path hpath = header_path(path);
  if (!std::filesystem::exists(hpath)) throw DataError("header file not found: " + hpath.string());
  Dataset ds;
  {
    ordered_json header;
    try {
      header = ordered_json::parse(read_file(hpath));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(hpath.string() + ": " + e.what());
    }
    const std::string where = hpath.filename().string();
    ds.skill_space = SkillSpace::of(detail::field<std::vector<std::string>>(header, "skills", where));
    ds.context_len = detail::field<int>(header, "context_len", where);
    ds.provenance = detail::field<std::string>(header, "provenance", where);
  }
  if (ds.skill_space.skills.empty())
    throw DataError(hpath.string() + ": skill space non-empty violated");

  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    RoutingInstance inst;
    inst.id = detail::field<std::string>(j, "id", where);
    const auto utterance = detail::field<std::vector<TokenId>>(j, "utterance", where);
    const auto gold = detail::field<std::int64_t>(j, "gold_index", where);
    const auto hyps = detail::field<ordered_json>(j, "hypotheses", where);
    if (!hyps.is_array() || hyps.empty())
      throw DataError(where + ": field 'hypotheses': must be a non-empty array");
    for (const auto& hj : hyps)
      inst.hypotheses.push_back(detail::hypothesis_from_json(hj, where, utterance));
    if (gold < 0 || static_cast<std::size_t>(gold) >= inst.hypotheses.size())
      throw DataError(where + ": field 'gold_index': out of range");
    inst.gold_index = static_cast<std::size_t>(gold);
    for (const Hypothesis& h : inst.hypotheses)
      if (!ds.skill_space.contains(h.skill))
        throw DataError(where + ": unknown skill '" + h.skill + "'");
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

// Ontology file: a skills list plus intent -> [{skill, condition}] with
// condition either null or {signal_index, required_value}.
inline std::string ontology_to_json(const Ontology& ont) {
  ordered_json j;
  j["skills"] = ont.skill_space.skills;
  ordered_json subs = ordered_json::object();
  for (const auto& [intent, list] : ont.subscriptions) {  // std::map: sorted intents
    ordered_json arr = ordered_json::array();
    for (const Subscription& s : list) {
      ordered_json e;
      e["skill"] = s.skill;
      if (s.condition) {
        e["condition"] = {{"signal_index", s.condition->signal_index},
                          {"required_value", s.condition->required_value}};
      } else {
        e["condition"] = nullptr;
      }
      arr.push_back(std::move(e));
    }
    subs[intent] = std::move(arr);
  }
  j["subscriptions"] = std::move(subs);
  return j.dump(2) + "\n";
}

inline void write_ontology(const Ontology& ont, const std::filesystem::path& path) {
  write_file_atomic(path, ontology_to_json(ont));
}

inline Ontology read_ontology(const std::filesystem::path& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  const std::string where = path.filename().string();
  Ontology ont;
  ont.skill_space = SkillSpace::of(detail::field<std::vector<std::string>>(j, "skills", where));
  const auto subs = detail::field<ordered_json>(j, "subscriptions", where);
  for (const auto& [intent, arr] : subs.items()) {
    std::vector<Subscription> list;
    for (const auto& e : arr) {
      Subscription s;
      s.skill = detail::field<std::string>(e, "skill", where + ", intent '" + intent + "'");
      if (e.contains("condition") && !e.at("condition").is_null()) {
        const auto& c = e.at("condition");
        s.condition = Condition{detail::field<int>(c, "signal_index", where),
                                detail::field<int>(c, "required_value", where)};
      }
      list.push_back(std::move(s));
    }
    ont.subscriptions[intent] = std::move(list);
  }
  ont.normalize();
  const auto violations = validate_ontology(ont);
  if (!violations.empty())
    throw DataError(where + ": " + violations.front().instance_id + ": " +
                    violations.front().reason);
  return ont;
}

}  // namespace skillrank::io
