#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "skillrank/adam.hpp"
#include "skillrank/domain.hpp"
#include "skillrank/graph.hpp"
#include "skillrank/rng.hpp"

namespace skillrank::ranker {

using nc::Graph;
using nc::Tensor;

enum class Encoder { sequence, attention, aggregation };
enum class Loss { bce, mce };

inline const char* to_string(Encoder e) {
  switch (e) {
    case Encoder::sequence: return "sequence";
    case Encoder::attention: return "attention";
    case Encoder::aggregation: return "aggregation";
  }
  return "?";
}

inline const char* to_string(Loss l) { return l == Loss::bce ? "bce" : "mce"; }

inline Encoder encoder_from_string(const std::string& s) {
  if (s == "sequence") return Encoder::sequence;
  if (s == "attention") return Encoder::attention;
  if (s == "aggregation") return Encoder::aggregation;
  throw DataError("unknown encoder kind '" + s + "'");
}

inline Loss loss_from_string(const std::string& s) {
  if (s == "bce") return Loss::bce;
  if (s == "mce") return Loss::mce;
  throw DataError("unknown loss kind '" + s + "'");
}

// Desk-scale defaults; d_k applies to the attention encoder, d_h to the
// sequence encoder.
struct Dims {
  int d_tok = 16;
  int d_int = 16;
  int d_slot = 16;
  int d_skill = 16;
  int d_ctx = 4;
  int d_e = 32;
  int d_h = 32;
  int d_f = 64;
  int heads = 2;
  int d_k = 16;

  int embed_input_width() const { return d_tok + d_int + d_slot + d_skill + d_ctx; }
};

inline int context_width(Encoder kind, const Dims& d) {
  switch (kind) {
    case Encoder::sequence: return 2 * d.d_h;
    case Encoder::attention: return d.d_e;
    case Encoder::aggregation: return d.d_e;
  }
  return 0;
}

// string -> embedding-row translation; rows exist for the whole skill
// space, including skills never seen in training.
struct VocabMaps {
  int n_tokens = 0;
  int context_len = 0;
  std::vector<std::string> intents;
  std::vector<std::string> slot_names;
  std::vector<std::string> skills;

  static VocabMaps from_dataset(const Dataset& ds, int utterance_vocab = 0) {
    VocabMaps v;
    v.context_len = ds.context_len;
    v.skills = ds.skill_space.skills;
    std::vector<std::string> intents, slots;
    TokenId max_token = -1;
    for (const auto& inst : ds.instances) {
      for (const auto& h : inst.hypotheses) {
        intents.push_back(h.interpretation.intent);
        for (const auto& [name, value] : h.interpretation.slots) slots.push_back(name);
        for (TokenId t : h.utterance) max_token = std::max(max_token, t);
      }
    }
    std::sort(intents.begin(), intents.end());
    intents.erase(std::unique(intents.begin(), intents.end()), intents.end());
    std::sort(slots.begin(), slots.end());
    slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
    v.intents = std::move(intents);
    v.slot_names = std::move(slots);
    v.n_tokens = utterance_vocab > 0 ? utterance_vocab : static_cast<int>(max_token) + 1;
    if (max_token >= v.n_tokens)
      throw DataError("utterance token " + std::to_string(max_token) +
                      " exceeds configured vocabulary " + std::to_string(v.n_tokens));
    return v;
  }

  static int lookup(const std::vector<std::string>& table, const std::string& id,
                    const char* what) {
    auto it = std::lower_bound(table.begin(), table.end(), id);
    if (it == table.end() || *it != id)
      throw DataError(std::string(what) + " id out of range: '" + id + "'");
    return static_cast<int>(it - table.begin());
  }

  int intent_row(const std::string& s) const { return lookup(intents, s, "intent"); }
  int slot_row(const std::string& s) const { return lookup(slot_names, s, "slot"); }
  int skill_row(const std::string& s) const { return lookup(skills, s, "skill"); }
};

struct ParamSet {
  std::vector<std::string> names;
  std::vector<Tensor> tensors;

  int add(std::string name, Tensor t) {
    names.push_back(std::move(name));
    tensors.push_back(std::move(t));
    return static_cast<int>(tensors.size()) - 1;
  }

  int find(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    return -1;
  }

  Tensor& at(std::string_view name) {
    const int i = find(name);
    if (i < 0) throw DataError("unknown parameter '" + std::string(name) + "'");
    return tensors[static_cast<std::size_t>(i)];
  }

  const Tensor& at(std::string_view name) const {
    return const_cast<ParamSet*>(this)->at(name);
  }

  std::size_t value_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }
};

struct VariantSpec {
  Encoder encoder = Encoder::sequence;
  Loss loss = Loss::bce;
  bool augmented = false;

  std::string label() const {
    std::string s = std::string(to_string(encoder)) + "+" + to_string(loss);
    if (augmented) s += "+aug";
    return s;
  }
};

// One grid cell: encoder x loss x augmentation flag plus everything
// learned and the tables needed to score new hypothesis lists.
struct ModelVariant {
  VariantSpec spec;
  Dims dims;
  std::uint64_t seed = 0;
  VocabMaps vocab;
  ParamSet params;
};

namespace detail {

inline std::vector<std::pair<std::string, std::vector<std::size_t>>> param_shapes(
    const VariantSpec& spec, const Dims& d, const VocabMaps& v) {
  auto sz = [](int a, int b) {
    return std::vector<std::size_t>{static_cast<std::size_t>(a), static_cast<std::size_t>(b)};
  };
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  out.emplace_back("embed.token", sz(std::max(1, v.n_tokens), d.d_tok));
  out.emplace_back("embed.intent", sz(std::max<int>(1, v.intents.size()), d.d_int));
  out.emplace_back("embed.slot", sz(std::max<int>(1, v.slot_names.size()), d.d_slot));
  out.emplace_back("embed.skill", sz(std::max<int>(1, v.skills.size()), d.d_skill));
  out.emplace_back("embed.ctx_proj", sz(v.context_len, d.d_ctx));
  out.emplace_back("embed.joint_w", sz(d.embed_input_width(), d.d_e));
  out.emplace_back("embed.joint_b", sz(1, d.d_e));
  switch (spec.encoder) {
    case Encoder::sequence:
      for (const char* dir : {"fwd", "bwd"}) {
        out.emplace_back(std::string("seq.") + dir + ".wx", sz(d.d_e, 4 * d.d_h));
        out.emplace_back(std::string("seq.") + dir + ".wh", sz(d.d_h, 4 * d.d_h));
        out.emplace_back(std::string("seq.") + dir + ".b", sz(1, 4 * d.d_h));
      }
      break;
    case Encoder::attention:
      for (int h = 0; h < d.heads; ++h) {
        out.emplace_back("attn.h" + std::to_string(h) + ".wq", sz(d.d_e, d.d_k));
        out.emplace_back("attn.h" + std::to_string(h) + ".wk", sz(d.d_e, d.d_k));
      }
      if (d.heads > 1) out.emplace_back("attn.wo", sz(d.heads * d.d_e, d.d_e));
      break;
    case Encoder::aggregation:
      break;  // no learned parameters
  }
  const int r = d.d_e + context_width(spec.encoder, d);
  out.emplace_back("head.w1", sz(r, d.d_f));
  out.emplace_back("head.b1", sz(1, d.d_f));
  out.emplace_back("head.w2", sz(d.d_f, 1));
  out.emplace_back("head.b2", sz(1, 1));
  return out;
}

}  // namespace detail

inline ModelVariant init_model(const VariantSpec& spec, const Dims& dims, VocabMaps vocab,
                               std::uint64_t seed) {
  ModelVariant m;
  m.spec = spec;
  m.dims = dims;
  m.seed = seed;
  m.vocab = std::move(vocab);
  Rng rng(derive_seed(seed, "init"));
  for (auto& [name, shape] : detail::param_shapes(spec, dims, m.vocab))
    m.params.add(name, Tensor::uniform(shape, rng, -0.1, 0.1));
  return m;
}

// A Graph bound to one model's parameters; reusable across instances via
// reset(). Not thread-safe: one Engine per thread.
class Engine {
 public:
  explicit Engine(const ModelVariant& model) : model_(&model) {
    ids_.reserve(model.params.tensors.size());
    for (const Tensor& t : model.params.tensors) ids_.push_back(g_.register_param(&t));
  }

  Graph& graph() { return g_; }
  const ModelVariant& model() const { return *model_; }
  void reset() { g_.reset(); }

  Graph::Ref p(std::string_view name) {
    const int i = model_->params.find(name);
    if (i < 0) throw DataError("unknown parameter '" + std::string(name) + "'");
    return g_.param(ids_[static_cast<std::size_t>(i)]);
  }

  std::span<const double> param_grad(std::size_t index) const {
    return g_.param_grad(ids_[index]);
  }

  // hypothesis -> fixed-size embedding node [1 x d_e]
  Graph::Ref embed(const Hypothesis& h) {
    const Dims& d = model_->dims;
    const VocabMaps& v = model_->vocab;

    scratch_rows_.clear();
    for (TokenId t : h.utterance) {
      if (t < 0 || t >= v.n_tokens)
        throw DataError("token id out of range: " + std::to_string(t));
      scratch_rows_.push_back(t);
    }
    if (scratch_rows_.empty()) throw DataError("empty utterance");
    Graph::Ref tok = g_.mean_rows(g_.gather_rows(p("embed.token"), scratch_rows_));

    Graph::Ref intent = g_.slice_row(p("embed.intent"), v.intent_row(h.interpretation.intent));

    Graph::Ref slot;
    if (h.interpretation.slots.empty()) {
      slot = g_.zeros(1, static_cast<std::size_t>(d.d_slot));
    } else {
      scratch_rows_.clear();
      for (const auto& [name, value] : h.interpretation.slots)
        scratch_rows_.push_back(v.slot_row(name));
      slot = g_.mean_rows(g_.gather_rows(p("embed.slot"), scratch_rows_));
    }

    Graph::Ref skill = g_.slice_row(p("embed.skill"), v.skill_row(h.skill));

    scratch_ctx_.assign(h.context.begin(), h.context.end());
    if (static_cast<int>(scratch_ctx_.size()) != v.context_len)
      throw DataError("context length mismatch");
    Graph::Ref ctx =
        g_.matmul(g_.input(scratch_ctx_.data(), 1, scratch_ctx_.size()), p("embed.ctx_proj"));

    Graph::Ref cat = g_.concat_cols(g_.concat_cols(g_.concat_cols(g_.concat_cols(tok, intent), slot), skill), ctx);
    return g_.tanh(g_.add(g_.matmul(cat, p("embed.joint_w")), p("embed.joint_b")));
  }

  // stacked embeddings for a hypothesis list: [n x d_e]
  Graph::Ref embed_all(std::span<const Hypothesis> hyps) {
    std::vector<Graph::Ref> rows;
    rows.reserve(hyps.size());
    for (const Hypothesis& h : hyps) rows.push_back(embed(h));
    return g_.stack_rows(rows);
  }

  // cross-hypothesis context per encoder kind: [n x context_width]
  Graph::Ref encode(Graph::Ref E) {
    switch (model_->spec.encoder) {
      case Encoder::sequence: return encode_sequence(E);
      case Encoder::attention: return encode_attention(E);
      case Encoder::aggregation: return encode_aggregation(E);
    }
    throw DataError("unknown encoder kind");
  }

  // forward and backward recurrences; c_i = fwd_i ++ bwd_i
  Graph::Ref encode_sequence(Graph::Ref E) {
    const std::size_t n = g_.rows(E);
    auto fwd = lstm_direction(E, "seq.fwd", false);
    auto bwd = lstm_direction(E, "seq.bwd", true);
    std::vector<Graph::Ref> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) rows.push_back(g_.concat_cols(fwd[i], bwd[i]));
    return g_.stack_rows(rows);
  }

  // scaled dot-product affinities; values are the raw embeddings. A single
  // head is the literal weighted sum; multiple heads concatenate and
  // project back to d_e.
  Graph::Ref encode_attention(Graph::Ref E) {
    const Dims& d = model_->dims;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(d.d_k));
    std::vector<Graph::Ref> heads;
    for (int h = 0; h < d.heads; ++h) {
      const std::string base = "attn.h" + std::to_string(h);
      Graph::Ref q = g_.matmul(E, p(base + ".wq"));
      Graph::Ref k = g_.matmul(E, p(base + ".wk"));
      Graph::Ref scores = g_.scale(g_.matmul_nt(q, k), inv_sqrt_dk);
      heads.push_back(g_.matmul(g_.softmax_row(scores), E));
    }
    if (heads.size() == 1) return heads[0];
    Graph::Ref cat = heads[0];
    for (std::size_t h = 1; h < heads.size(); ++h) cat = g_.concat_cols(cat, heads[h]);
    return g_.matmul(cat, p("attn.wo"));
  }

  // mean of the embeddings, broadcast to every hypothesis
  Graph::Ref encode_aggregation(Graph::Ref E) { return g_.mean_rows(E); }

  // two-layer head over r_i = e_i ++ c_i; context may be a single
  // broadcast row (aggregation)
  Graph::Ref score(Graph::Ref E, Graph::Ref C) {
    Graph::Ref r = g_.concat_cols(E, C);
    Graph::Ref h = g_.tanh(g_.add(g_.matmul(r, p("head.w1")), p("head.b1")));
    return g_.add(g_.matmul(h, p("head.w2")), p("head.b2"));  // [n x 1]
  }

  Graph::Ref scores(std::span<const Hypothesis> hyps) {
    if (hyps.empty()) throw DataError("scores: empty hypothesis list");
    Graph::Ref E = embed_all(hyps);
    return score(E, encode(E));
  }

  Graph::Ref loss(std::span<const Hypothesis> hyps, std::size_t gold) {
    Graph::Ref o = scores(hyps);
    return loss_from_scores(o, gold);
  }

  Graph::Ref loss_from_scores(Graph::Ref o, std::size_t gold) {
    const std::size_t n = g_.rows(o);
    if (gold >= n) throw DataError("loss: gold index out of range");
    Graph::Ref ok = g_.slice_row(o, static_cast<std::int32_t>(gold));
    if (model_->spec.loss == Loss::bce) {
      // -(1/n)[log sig(o_k) + sum_{j != k} log(1 - sig(o_j))], in softplus form
      Graph::Ref total = g_.scale(g_.mean_rows(g_.softplus(o)), static_cast<double>(n));
      Graph::Ref pos = g_.softplus(g_.scale(ok, -1.0));
      Graph::Ref fix = g_.softplus(ok);
      return g_.scale(g_.add_scaled(g_.add(pos, total), fix, -1.0), 1.0 / static_cast<double>(n));
    }
    // -o_k + log sum_j exp(o_j), max-subtracted
    Graph::Ref lse = g_.logsumexp_row(g_.transpose(o));
    return g_.add_scaled(lse, ok, -1.0);
  }

 private:
  std::vector<Graph::Ref> lstm_direction(Graph::Ref E, const std::string& prefix, bool reversed) {
    const Dims& d = model_->dims;
    const std::size_t n = g_.rows(E);
    const std::size_t dh = static_cast<std::size_t>(d.d_h);
    Graph::Ref wx = p(prefix + ".wx");
    Graph::Ref wh = p(prefix + ".wh");
    Graph::Ref b = p(prefix + ".b");
    Graph::Ref h = g_.zeros(1, dh);
    Graph::Ref c = g_.zeros(1, dh);
    std::vector<Graph::Ref> out(n);
    for (std::size_t step = 0; step < n; ++step) {
      const std::size_t i = reversed ? n - 1 - step : step;
      Graph::Ref x = g_.slice_row(E, static_cast<std::int32_t>(i));
      Graph::Ref z = g_.add(g_.add(g_.matmul(x, wx), g_.matmul(h, wh)), b);
      Graph::Ref ig = g_.sigmoid(g_.slice_cols(z, 0, dh));
      Graph::Ref fg = g_.sigmoid(g_.slice_cols(z, dh, 2 * dh));
      Graph::Ref gg = g_.tanh(g_.slice_cols(z, 2 * dh, 3 * dh));
      Graph::Ref og = g_.sigmoid(g_.slice_cols(z, 3 * dh, 4 * dh));
      c = g_.add(g_.mul(fg, c), g_.mul(ig, gg));
      h = g_.mul(og, g_.tanh(c));
      out[i] = h;
    }
    return out;
  }

  const ModelVariant* model_;
  Graph g_;
  std::vector<Graph::ParamId> ids_;
  std::vector<std::int32_t> scratch_rows_;
  std::vector<double> scratch_ctx_;
};

// ----- value-level API -----

inline std::vector<double> embed_hypothesis(const ModelVariant& m, const Hypothesis& h) {
  Engine e(m);
  auto v = e.graph().values(e.embed(h));
  return {v.begin(), v.end()};
}

using Matrix = std::vector<std::vector<double>>;

namespace detail {

inline Graph::Ref matrix_input(Graph& g, const Matrix& rows) {
  if (rows.empty()) throw DataError("encode: empty embedding list");
  std::vector<double> flat;
  flat.reserve(rows.size() * rows[0].size());
  for (const auto& r : rows) {
    if (r.size() != rows[0].size()) throw DataError("encode: ragged embedding list");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return g.input(flat.data(), rows.size(), rows[0].size());
}

inline Matrix matrix_values(const Graph& g, Graph::Ref r) {
  const std::size_t rows = g.rows(r), cols = g.cols(r);
  auto v = g.values(r);
  Matrix out(rows, std::vector<double>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i][j] = v[i * cols + j];
  return out;
}

}  // namespace detail

// context vectors per hypothesis: [n][2*d_h]
inline Matrix encode_context_sequence(const ModelVariant& m, const Matrix& embeds) {
  Engine e(m);
  return detail::matrix_values(e.graph(),
                               e.encode_sequence(detail::matrix_input(e.graph(), embeds)));
}

// context vectors per hypothesis: [n][d_e]
inline Matrix encode_context_attention(const ModelVariant& m, const Matrix& embeds) {
  Engine e(m);
  return detail::matrix_values(e.graph(),
                               e.encode_attention(detail::matrix_input(e.graph(), embeds)));
}

// single mean vector, broadcast by the caller
inline std::vector<double> encode_context_aggregation(const Matrix& embeds) {
  Graph g;
  auto v = g.values(g.mean_rows(detail::matrix_input(g, embeds)));
  return {v.begin(), v.end()};
}

// ranking scores from explicit embedding/context matrices
inline std::vector<double> score_hypotheses(const ModelVariant& m, const Matrix& embeds,
                                            const Matrix& contexts) {
  Engine e(m);
  auto o = e.score(detail::matrix_input(e.graph(), embeds),
                   detail::matrix_input(e.graph(), contexts));
  auto v = e.graph().values(o);
  return {v.begin(), v.end()};
}

inline std::size_t argmax_lowest(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

struct RouteResult {
  std::vector<double> scores;
  std::size_t top = 0;
};

// embed -> encode -> score -> argmax (lowest index wins ties)
inline RouteResult route(const ModelVariant& m, std::span<const Hypothesis> hyps) {
  Engine e(m);
  auto v = e.graph().values(e.scores(hyps));
  RouteResult r;
  r.scores.assign(v.begin(), v.end());
  r.top = argmax_lowest(r.scores);
  return r;
}

inline double stable_softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// -(1/n)[log sig(o_k) + sum_{j != k} log(1 - sig(o_j))]
inline double bce_loss(std::span<const double> scores, std::size_t gold) {
  if (gold >= scores.size()) throw DataError("bce_loss: gold index out of range");
  double total = stable_softplus(-scores[gold]);
  for (std::size_t j = 0; j < scores.size(); ++j)
    if (j != gold) total += stable_softplus(scores[j]);
  return total / static_cast<double>(scores.size());
}

// -o_k + log sum_j exp(o_j)
inline double mce_loss(std::span<const double> scores, std::size_t gold) {
  if (gold >= scores.size()) throw DataError("mce_loss: gold index out of range");
  double m = scores[0];
  for (double s : scores) m = std::max(m, s);
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - m);
  return -scores[gold] + m + std::log(sum);
}

// ----- training -----

struct TrainConfig {
  int epochs = 15;
  int batch_size = 256;
  std::uint64_t seed = 0;
  nc::AdamConfig adam{};
  Dims dims{};
  int utterance_vocab = 0;        // 0 = derive from the training data
  bool shuffle_hypotheses = false;  // order-sensitivity studies
  int grad_groups = 8;            // fixed accumulation groups, independent of thread count
  int threads = 0;                // 0 = hardware concurrency
};

struct TrainResult {
  ModelVariant model;
  std::vector<double> epoch_loss;  // mean training loss per epoch
};

// Deterministic minibatch training: fixed shuffles, fixed gradient
// accumulation order over grad_groups, Adam updates. Identical
// (spec, dataset, config) inputs give bit-identical parameters.
inline TrainResult train(const VariantSpec& spec, const Dataset& ds, const TrainConfig& cfg) {
  if (ds.instances.empty()) throw DataError("train: empty dataset");
  if (cfg.epochs < 1 || cfg.batch_size < 1) throw DataError("train: bad epochs/batch_size");

  TrainResult result;
  result.model = init_model(spec, cfg.dims, VocabMaps::from_dataset(ds, cfg.utterance_vocab),
                            cfg.seed);
  ModelVariant& model = result.model;

  const int groups = std::max(1, cfg.grad_groups);
  const int threads = std::min(groups, cfg.threads > 0
                                           ? cfg.threads
                                           : static_cast<int>(std::thread::hardware_concurrency()));

  std::vector<std::unique_ptr<Engine>> engines;
  for (int w = 0; w < groups; ++w) engines.push_back(std::make_unique<Engine>(model));

  auto adam_state = nc::AdamState::init(model.params.tensors, cfg.adam);
  std::vector<std::vector<double>> grad_buf(model.params.tensors.size());
  for (std::size_t t = 0; t < grad_buf.size(); ++t)
    grad_buf[t].assign(model.params.tensors[t].size(), 0.0);

  std::vector<std::size_t> order(ds.instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const std::size_t n = ds.instances.size();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t bsz = std::min<std::size_t>(cfg.batch_size, n - start);
      const std::size_t per = (bsz + groups - 1) / groups;

      std::vector<double> group_sum(static_cast<std::size_t>(groups), 0.0);
      auto run_group = [&](int gi) {
        const std::size_t lo = start + static_cast<std::size_t>(gi) * per;
        const std::size_t hi = std::min(start + bsz, lo + per);
        if (lo >= hi) return;
        Engine& eng = *engines[static_cast<std::size_t>(gi)];
        eng.reset();
        Graph::Ref sum{-1};
        for (std::size_t x = lo; x < hi; ++x) {
          const RoutingInstance& inst = ds.instances[order[x]];
          Graph::Ref l{-1};
          if (cfg.shuffle_hypotheses) {
            Rng hr(derive_seed(cfg.seed, "hyp-shuffle",
                               static_cast<std::uint64_t>(epoch) * n + order[x]));
            std::vector<std::size_t> perm(inst.hypotheses.size());
            for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
            hr.shuffle(perm);
            std::vector<Hypothesis> hyps;
            hyps.reserve(perm.size());
            std::size_t gold = 0;
            for (std::size_t i = 0; i < perm.size(); ++i) {
              if (perm[i] == inst.gold_index) gold = i;
              hyps.push_back(inst.hypotheses[perm[i]]);
            }
            l = eng.loss(hyps, gold);
          } else {
            l = eng.loss(inst.hypotheses, inst.gold_index);
          }
          sum = sum.valid() ? eng.graph().add(sum, l) : l;
        }
        eng.graph().backward(sum);
        group_sum[static_cast<std::size_t>(gi)] = eng.graph().scalar(sum);
      };

      if (threads <= 1) {
        for (int gi = 0; gi < groups; ++gi) run_group(gi);
      } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        for (int t = 0; t < threads; ++t)
          pool.emplace_back([&] {
            try {
              for (int gi = next.fetch_add(1); gi < groups; gi = next.fetch_add(1)) run_group(gi);
            } catch (...) {
              std::lock_guard lock(failure_mutex);
              if (!failure) failure = std::current_exception();
            }
          });
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
      }

      // fixed group order keeps the reduction deterministic under any thread count
      const double inv_b = 1.0 / static_cast<double>(bsz);
      for (std::size_t t = 0; t < grad_buf.size(); ++t) {
        auto& buf = grad_buf[t];
        std::fill(buf.begin(), buf.end(), 0.0);
        for (int gi = 0; gi < groups; ++gi) {
          auto gspan = engines[static_cast<std::size_t>(gi)]->param_grad(t);
          for (std::size_t j = 0; j < gspan.size(); ++j) buf[j] += gspan[j];
        }
        for (double& x : buf) x *= inv_b;
      }
      std::vector<std::span<const double>> gspans;
      gspans.reserve(grad_buf.size());
      for (auto& buf : grad_buf) gspans.emplace_back(buf);
      nc::adam_step(model.params.tensors, gspans, adam_state);

      for (double s : group_sum) epoch_loss_sum += s;
    }
    result.epoch_loss.push_back(epoch_loss_sum / static_cast<double>(n));
  }
  return result;
}

}  // namespace skillrank::ranker
