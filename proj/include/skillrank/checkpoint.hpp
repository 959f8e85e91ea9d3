#pragma once

#include <filesystem>

#include <json.hpp>

#include "skillrank/dataset_io.hpp"
#include "skillrank/ranker.hpp"

namespace skillrank::io {

// Model checkpoint: a JSON variant descriptor plus every parameter tensor
// as shape + flat 64-bit values. nlohmann serializes doubles with the
// shortest representation that round-trips exactly, so save/load is
// lossless.
inline ordered_json model_to_json(const ranker::ModelVariant& m) {
  ordered_json j;
  j["version"] = 1;
  ordered_json desc;
  desc["encoder"] = ranker::to_string(m.spec.encoder);
  desc["loss"] = ranker::to_string(m.spec.loss);
  desc["augmented"] = m.spec.augmented;
  desc["seed"] = m.seed;
  desc["dims"] = {{"d_tok", m.dims.d_tok},   {"d_int", m.dims.d_int},
                  {"d_slot", m.dims.d_slot}, {"d_skill", m.dims.d_skill},
                  {"d_ctx", m.dims.d_ctx},   {"d_e", m.dims.d_e},
                  {"d_h", m.dims.d_h},       {"d_f", m.dims.d_f},
                  {"heads", m.dims.heads},   {"d_k", m.dims.d_k}};
  desc["vocab"] = {{"n_tokens", m.vocab.n_tokens},
                   {"context_len", m.vocab.context_len},
                   {"intents", m.vocab.intents},
                   {"slot_names", m.vocab.slot_names},
                   {"skills", m.vocab.skills}};
  j["model"] = std::move(desc);
  ordered_json params = ordered_json::array();
  for (std::size_t i = 0; i < m.params.tensors.size(); ++i) {
    ordered_json p;
    p["name"] = m.params.names[i];
    p["shape"] = m.params.tensors[i].shape;
    p["values"] = m.params.tensors[i].values;
    params.push_back(std::move(p));
  }
  j["params"] = std::move(params);
  return j;
}

inline void save_model(const ranker::ModelVariant& m, const std::filesystem::path& path) {
  write_file_atomic(path, model_to_json(m).dump() + "\n");
}

inline ranker::ModelVariant load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("checkpoint not found: " + path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  const std::string where = path.filename().string();
  if (detail::field<int>(j, "version", where) != 1)
    throw DataError(where + ": unsupported checkpoint version");
  const auto desc = detail::field<ordered_json>(j, "model", where);

  ranker::ModelVariant m;
  m.spec.encoder = ranker::encoder_from_string(detail::field<std::string>(desc, "encoder", where));
  m.spec.loss = ranker::loss_from_string(detail::field<std::string>(desc, "loss", where));
  m.spec.augmented = detail::field<bool>(desc, "augmented", where);
  m.seed = detail::field<std::uint64_t>(desc, "seed", where);
  const auto dims = detail::field<ordered_json>(desc, "dims", where);
  m.dims.d_tok = detail::field<int>(dims, "d_tok", where);
  m.dims.d_int = detail::field<int>(dims, "d_int", where);
  m.dims.d_slot = detail::field<int>(dims, "d_slot", where);
  m.dims.d_skill = detail::field<int>(dims, "d_skill", where);
  m.dims.d_ctx = detail::field<int>(dims, "d_ctx", where);
  m.dims.d_e = detail::field<int>(dims, "d_e", where);
  m.dims.d_h = detail::field<int>(dims, "d_h", where);
  m.dims.d_f = detail::field<int>(dims, "d_f", where);
  m.dims.heads = detail::field<int>(dims, "heads", where);
  m.dims.d_k = detail::field<int>(dims, "d_k", where);
  const auto vocab = detail::field<ordered_json>(desc, "vocab", where);
  m.vocab.n_tokens = detail::field<int>(vocab, "n_tokens", where);
  m.vocab.context_len = detail::field<int>(vocab, "context_len", where);
  m.vocab.intents = detail::field<std::vector<std::string>>(vocab, "intents", where);
  m.vocab.slot_names = detail::field<std::vector<std::string>>(vocab, "slot_names", where);
  m.vocab.skills = detail::field<std::vector<std::string>>(vocab, "skills", where);

  for (const auto& p : detail::field<ordered_json>(j, "params", where)) {
    const auto name = detail::field<std::string>(p, "name", where);
    auto shape = detail::field<std::vector<std::size_t>>(p, "shape", where);
    auto values = detail::field<std::vector<double>>(p, "values", where);
    try {
      m.params.add(name, nc::Tensor(std::move(shape), std::move(values)));
    } catch (const std::invalid_argument& e) {
      throw DataError(where + ": parameter '" + name + "': " + e.what());
    }
  }

  // the parameter inventory must match what this variant requires
  auto expected = ranker::detail::param_shapes(m.spec, m.dims, m.vocab);
  if (expected.size() != m.params.tensors.size())
    throw DataError(where + ": parameter count mismatch");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i].first != m.params.names[i])
      throw DataError(where + ": unexpected parameter '" + m.params.names[i] + "'");
    if (expected[i].second != m.params.tensors[i].shape)
      throw DataError(where + ": parameter '" + m.params.names[i] + "' has the wrong shape");
  }
  return m;
}

}  // namespace skillrank::io
