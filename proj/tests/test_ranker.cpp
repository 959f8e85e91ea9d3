#include <catch_amalgamated.hpp>

#include <cmath>

#include "skillrank/gradcheck.hpp"
#include "skillrank/ranker.hpp"
#include "skillrank/rng.hpp"
#include "test_util.hpp"

using namespace skillrank;
using namespace skillrank::ranker;
using Catch::Approx;

namespace {

VocabMaps tiny_vocab() {
  VocabMaps v;
  v.n_tokens = 10;
  v.context_len = 4;
  v.intents = {"ask", "play"};
  v.slot_names = {"sl_a", "sl_b"};
  v.skills = {"sk_x", "sk_y", "sk_z"};
  return v;
}

ModelVariant tiny_model(Encoder enc, Loss loss = Loss::bce, std::uint64_t seed = 3,
                        Dims dims = {}) {
  return init_model({enc, loss, false}, dims, tiny_vocab(), seed);
}

void zero_params(ModelVariant& m) {
  for (auto& t : m.params.tensors) std::fill(t.values.begin(), t.values.end(), 0.0);
}

Hypothesis random_hyp(Rng& rng, const VocabMaps& v, int utt_len) {
  Hypothesis h;
  for (int i = 0; i < utt_len; ++i)
    h.utterance.push_back(static_cast<TokenId>(rng.index(v.n_tokens)));
  h.interpretation.intent = v.intents[rng.index(v.intents.size())];
  if (rng.bernoulli(0.5))
    h.interpretation.slots.emplace_back(v.slot_names[rng.index(v.slot_names.size())], "v");
  h.skill = v.skills[rng.index(v.skills.size())];
  h.context = {rng.range(0, 1), rng.range(0, 1), rng.range(0, 1), rng.range(0, 1)};
  return h;
}

std::vector<Hypothesis> random_list(Rng& rng, const VocabMaps& v, std::size_t n) {
  std::vector<Hypothesis> hyps;
  const int len = rng.range(2, 6);
  for (std::size_t i = 0; i < n; ++i) {
    Hypothesis h = random_hyp(rng, v, len);
    if (!hyps.empty()) {
      h.utterance = hyps[0].utterance;  // instances share one utterance
      h.context = hyps[0].context;
    }
    hyps.push_back(std::move(h));
  }
  return hyps;
}

}  // namespace

TEST_CASE("embed_hypothesis") {
  auto m = tiny_model(Encoder::aggregation);
  Rng rng(1);
  auto h = random_hyp(rng, m.vocab, 3);

  SECTION("deterministic: identical hypotheses embed identically") {
    CHECK(embed_hypothesis(m, h) == embed_hypothesis(m, h));
  }

  SECTION("all-zero parameters give the zero vector") {
    auto z = m;
    zero_params(z);
    for (double x : embed_hypothesis(z, h)) CHECK(x == 0.0);
  }

  SECTION("fixed output length regardless of utterance length") {
    auto short_h = random_hyp(rng, m.vocab, 3);
    auto long_h = random_hyp(rng, m.vocab, 12);
    CHECK(embed_hypothesis(m, short_h).size() == static_cast<std::size_t>(m.dims.d_e));
    CHECK(embed_hypothesis(m, long_h).size() == static_cast<std::size_t>(m.dims.d_e));
  }

  SECTION("out-of-range ids are rejected") {
    auto bad = h;
    bad.utterance[0] = 99;
    CHECK_THROWS_AS(embed_hypothesis(m, bad), DataError);
    auto bad2 = h;
    bad2.skill = "unknown";
    CHECK_THROWS_AS(embed_hypothesis(m, bad2), DataError);
    auto bad3 = h;
    bad3.interpretation.intent = "unheard";
    CHECK_THROWS_AS(embed_hypothesis(m, bad3), DataError);
  }
}

TEST_CASE("sequence encoder") {
  Dims dims;
  dims.d_e = 4;
  dims.d_h = 2;

  SECTION("all-zero weights and biases give all-zero context vectors") {
    auto m = tiny_model(Encoder::sequence, Loss::bce, 3, dims);
    zero_params(m);
    Matrix embeds{{0.5, -0.5, 0.2, 0.1}, {1.0, 0.0, -1.0, 0.3}};
    for (const auto& row : encode_context_sequence(m, embeds))
      for (double x : row) CHECK(x == 0.0);
  }

  SECTION("n=1 context matches a hand-evaluated single LSTM step") {
    auto m = tiny_model(Encoder::sequence, Loss::bce, 7, dims);
    const std::vector<double> e{0.3, -0.2, 0.8, -0.5};
    auto out = encode_context_sequence(m, {e});
    REQUIRE(out.size() == 1);
    REQUIRE(out[0].size() == 4);  // 2 * d_h

    // textbook recurrence from zero state, evaluated in plain scalars
    auto one_step = [&](const char* prefix) {
      const auto& wx = m.params.at(std::string("seq.") + prefix + ".wx");
      const auto& b = m.params.at(std::string("seq.") + prefix + ".b");
      const int dh = dims.d_h;
      std::vector<double> z(4 * dh);
      for (int j = 0; j < 4 * dh; ++j) {
        double s = b.values[j];
        for (int p = 0; p < dims.d_e; ++p) s += e[p] * wx.values[p * 4 * dh + j];
        z[j] = s;  // h_prev = 0, so wh contributes nothing
      }
      auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
      std::vector<double> h(dh);
      for (int u = 0; u < dh; ++u) {
        const double ig = sig(z[u]), fg = sig(z[dh + u]);
        const double gg = std::tanh(z[2 * dh + u]), og = sig(z[3 * dh + u]);
        const double c = fg * 0.0 + ig * gg;
        h[u] = og * std::tanh(c);
      }
      return h;
    };
    auto hf = one_step("fwd");
    auto hb = one_step("bwd");
    for (int u = 0; u < 2; ++u) {
      CHECK(out[0][u] == Approx(hf[u]).margin(1e-12));
      CHECK(out[0][2 + u] == Approx(hb[u]).margin(1e-12));
    }
  }

  SECTION("mirror property: reversing the input swaps the directional halves") {
    auto m = tiny_model(Encoder::sequence, Loss::bce, 11, dims);
    // same property, stated with swapped directional weights
    auto swapped = m;
    for (const char* part : {".wx", ".wh", ".b"}) {
      std::swap(swapped.params.at(std::string("seq.fwd") + part),
                swapped.params.at(std::string("seq.bwd") + part));
    }
    Rng rng(17);
    Matrix embeds;
    for (int i = 0; i < 5; ++i) {
      std::vector<double> row(4);
      for (double& x : row) x = rng.uniform(-1, 1);
      embeds.push_back(row);
    }
    Matrix reversed(embeds.rbegin(), embeds.rend());

    auto c_fwd = encode_context_sequence(m, embeds);
    auto c_rev = encode_context_sequence(swapped, reversed);
    const std::size_t n = embeds.size();
    for (std::size_t i = 0; i < n; ++i) {
      // swap_halves(c_rev[i]) must equal c_fwd[n - 1 - i], bitwise
      for (int u = 0; u < dims.d_h; ++u) {
        CHECK(c_rev[i][u + dims.d_h] == c_fwd[n - 1 - i][u]);
        CHECK(c_rev[i][u] == c_fwd[n - 1 - i][u + dims.d_h]);
      }
    }

    // with tied directional weights the property holds within one encoder
    auto tied = m;
    for (const char* part : {".wx", ".wh", ".b"}) {
      tied.params.at(std::string("seq.bwd") + part) =
          tied.params.at(std::string("seq.fwd") + part);
    }
    auto a = encode_context_sequence(tied, embeds);
    auto b = encode_context_sequence(tied, reversed);
    for (std::size_t i = 0; i < n; ++i)
      for (int u = 0; u < dims.d_h; ++u) {
        CHECK(b[i][u + dims.d_h] == a[n - 1 - i][u]);
        CHECK(b[i][u] == a[n - 1 - i][u + dims.d_h]);
      }
  }
}

TEST_CASE("attention encoder") {
  SECTION("hand case: identity maps, d_k = 2") {
    Dims dims;
    dims.d_e = 2;
    dims.heads = 1;
    dims.d_k = 2;
    auto m = tiny_model(Encoder::attention, Loss::bce, 5, dims);
    auto& wq = m.params.at("attn.h0.wq");
    auto& wk = m.params.at("attn.h0.wk");
    wq.values = {1, 0, 0, 1};
    wk.values = {1, 0, 0, 1};
    auto c = encode_context_attention(m, {{1, 0}, {0, 1}});
    REQUIRE(c.size() == 2);
    CHECK(c[0][0] == Approx(0.6698).margin(1e-4));
    CHECK(c[0][1] == Approx(0.3302).margin(1e-4));
    // symmetric setup: c_2 mirrors c_1
    CHECK(c[1][1] == Approx(0.6698).margin(1e-4));
    CHECK(c[1][0] == Approx(0.3302).margin(1e-4));
  }

  SECTION("n=1 returns the embedding itself (single head)") {
    Dims dims;
    dims.d_e = 4;
    dims.heads = 1;
    dims.d_k = 4;
    auto m = tiny_model(Encoder::attention, Loss::bce, 5, dims);
    const std::vector<double> e{0.1, -0.7, 0.4, 0.9};
    auto c = encode_context_attention(m, {e});
    REQUIRE(c.size() == 1);
    for (int j = 0; j < 4; ++j) CHECK(c[0][j] == Approx(e[j]).margin(1e-12));
  }

  SECTION("identical embeddings give the embedding back (single head)") {
    Dims dims;
    dims.d_e = 3;
    dims.heads = 1;
    dims.d_k = 3;
    auto m = tiny_model(Encoder::attention, Loss::bce, 6, dims);
    const std::vector<double> e{0.4, 0.0, -0.2};
    auto c = encode_context_attention(m, {e, e, e});
    for (const auto& row : c)
      for (int j = 0; j < 3; ++j) CHECK(row[j] == Approx(e[j]).margin(1e-12));
  }

  SECTION("multi-head output stays identical across positions when inputs are identical") {
    auto m = tiny_model(Encoder::attention);  // default: 2 heads
    Rng rng(9);
    std::vector<double> e(static_cast<std::size_t>(m.dims.d_e));
    for (double& x : e) x = rng.uniform(-1, 1);
    auto c = encode_context_attention(m, {e, e, e});
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] == c[0]);
  }
}

TEST_CASE("aggregation encoder") {
  SECTION("n=1 is the identity") {
    std::vector<double> e{1.5, -2.0};
    CHECK(encode_context_aggregation({e}) == e);
  }

  SECTION("two basis vectors average to (0.5, 0.5)") {
    auto c = encode_context_aggregation({{1, 0}, {0, 1}});
    CHECK(c == std::vector<double>{0.5, 0.5});
  }

  SECTION("permutation invariant") {
    Rng rng(3);
    Matrix embeds;
    for (int i = 0; i < 6; ++i) embeds.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
    auto base = encode_context_aggregation(embeds);
    for (int t = 0; t < 10; ++t) {
      rng.shuffle(embeds);
      auto c = encode_context_aggregation(embeds);
      for (std::size_t j = 0; j < base.size(); ++j) CHECK(c[j] == Approx(base[j]).margin(1e-12));
    }
  }
}

TEST_CASE("scoring head") {
  SECTION("zero weights with output bias b give o_i = b for all i") {
    auto m = tiny_model(Encoder::aggregation);
    zero_params(m);
    m.params.at("head.b2").values = {0.37};
    Matrix big_e(3, std::vector<double>(static_cast<std::size_t>(m.dims.d_e), 0.25));
    Matrix ctx(3, std::vector<double>(static_cast<std::size_t>(m.dims.d_e), -0.5));
    for (double o : score_hypotheses(m, big_e, ctx)) CHECK(o == Approx(0.37).margin(1e-15));
  }

  SECTION("identical (e, c) pairs get identical scores") {
    auto m = tiny_model(Encoder::aggregation);
    Matrix e(4, std::vector<double>(static_cast<std::size_t>(m.dims.d_e), 0.1));
    Matrix c(4, std::vector<double>(static_cast<std::size_t>(m.dims.d_e), -0.2));
    auto o = score_hypotheses(m, e, c);
    for (double x : o) CHECK(x == o[0]);
  }

  SECTION("hand-sized head: d=2 -> 2 -> 1 with explicit weights") {
    Dims dims;
    dims.d_e = 1;  // r_i = e_i ++ c_i has width 2
    dims.d_f = 2;
    auto m = tiny_model(Encoder::aggregation, Loss::bce, 4, dims);
    auto& w1 = m.params.at("head.w1");
    auto& b1 = m.params.at("head.b1");
    auto& w2 = m.params.at("head.w2");
    auto& b2 = m.params.at("head.b2");
    w1.values = {0.5, -0.3, 0.2, 0.7};  // [2x2], row-major
    b1.values = {0.1, -0.1};
    w2.values = {1.2, -0.4};  // [2x1]
    b2.values = {0.05};

    Matrix e{{0.6}, {-0.2}};
    Matrix c{{0.9}, {0.3}};
    auto o = score_hypotheses(m, e, c);

    auto expect = [&](double ei, double ci) {
      const double h1 = std::tanh(0.5 * ei + 0.2 * ci + 0.1);
      const double h2 = std::tanh(-0.3 * ei + 0.7 * ci - 0.1);
      return 1.2 * h1 - 0.4 * h2 + 0.05;
    };
    CHECK(o[0] == Approx(expect(0.6, 0.9)).margin(1e-10));
    CHECK(o[1] == Approx(expect(-0.2, 0.3)).margin(1e-10));
  }
}

TEST_CASE("route") {
  SECTION("argmax picks the highest score, ties break to the lowest index") {
    CHECK(argmax_lowest(std::vector<double>{0.1, 0.9, 0.3}) == 1);
    CHECK(argmax_lowest(std::vector<double>{0.5, 0.5}) == 0);
    CHECK(argmax_lowest(std::vector<double>{1.0}) == 0);
  }

  SECTION("single-hypothesis instances route to index 0 for every variant") {
    Rng rng(12);
    for (Encoder enc : {Encoder::sequence, Encoder::attention, Encoder::aggregation}) {
      auto m = tiny_model(enc);
      auto hyps = random_list(rng, m.vocab, 1);
      auto r = route(m, hyps);
      CHECK(r.top == 0);
      CHECK(r.scores.size() == 1);
    }
  }

  SECTION("route never returns an index outside [0, n)") {
    Rng rng(13);
    for (Encoder enc : {Encoder::sequence, Encoder::attention, Encoder::aggregation}) {
      auto m = tiny_model(enc);
      for (int t = 0; t < 20; ++t) {
        auto hyps = random_list(rng, m.vocab, 1 + rng.index(6));
        auto r = route(m, hyps);
        CHECK(r.top < hyps.size());
      }
    }
  }

  SECTION("empty hypothesis list is rejected") {
    auto m = tiny_model(Encoder::aggregation);
    CHECK_THROWS_AS(route(m, std::vector<Hypothesis>{}), DataError);
  }
}

TEST_CASE("permutation equivariance of attention and aggregation routing") {
  Rng rng(77);
  for (Encoder enc : {Encoder::attention, Encoder::aggregation}) {
    auto m = tiny_model(enc, Loss::bce, 21);
    auto hyps = random_list(rng, m.vocab, 6);
    auto base = route(m, hyps);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::size_t> perm(hyps.size());
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
      rng.shuffle(perm);
      std::vector<Hypothesis> shuffled;
      for (std::size_t i : perm) shuffled.push_back(hyps[i]);
      auto r = route(m, shuffled);
      for (std::size_t i = 0; i < perm.size(); ++i)
        CHECK(std::abs(r.scores[i] - base.scores[perm[i]]) < 1e-9);
    }
  }
}

TEST_CASE("bce loss") {
  SECTION("n=2, o=(0,0), k=0 gives log 2") {
    CHECK(bce_loss(std::vector<double>{0, 0}, 0) == Approx(std::log(2.0)).margin(1e-9));
  }

  SECTION("n=2, o=(10,-10), k=0 is tiny") {
    CHECK(bce_loss(std::vector<double>{10, -10}, 0) == Approx(4.5399e-5).margin(1e-6));
  }

  SECTION("loss is non-negative") {
    Rng rng(8);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> o(1 + rng.index(8));
      for (double& x : o) x = rng.uniform(-20, 20);
      CHECK(bce_loss(o, rng.index(o.size())) >= 0.0);
    }
  }

  SECTION("shifting all scores changes BCE (no shift invariance)") {
    std::vector<double> o{1.0, -0.5, 0.2};
    std::vector<double> shifted{2.0, 0.5, 1.2};
    CHECK(std::abs(bce_loss(o, 1) - bce_loss(shifted, 1)) > 1e-3);
  }

  SECTION("gold index out of range") {
    CHECK_THROWS_AS(bce_loss(std::vector<double>{1.0}, 1), DataError);
  }
}

TEST_CASE("mce loss") {
  SECTION("uniform scores give log n") {
    CHECK(mce_loss(std::vector<double>{0.3, 0.3}, 0) == Approx(std::log(2.0)).margin(1e-9));
    CHECK(mce_loss(std::vector<double>{-1, -1, -1, -1}, 2) == Approx(std::log(4.0)).margin(1e-9));
  }

  SECTION("o=(1,0), k=0 gives log(1 + e^-1)") {
    CHECK(mce_loss(std::vector<double>{1, 0}, 0) ==
          Approx(std::log(1.0 + std::exp(-1.0))).margin(1e-9));
  }

  SECTION("shift invariance") {
    Rng rng(4);
    for (int t = 0; t < 100; ++t) {
      std::vector<double> o(2 + rng.index(6));
      for (double& x : o) x = rng.uniform(-5, 5);
      const std::size_t k = rng.index(o.size());
      const double delta = rng.uniform(-50, 50);
      std::vector<double> shifted = o;
      for (double& x : shifted) x += delta;
      CHECK(std::abs(mce_loss(o, k) - mce_loss(shifted, k)) < 1e-10);
    }
  }

  SECTION("extreme scores stay finite") {
    CHECK(std::isfinite(mce_loss(std::vector<double>{1000.0, -1000.0}, 1)));
  }

  SECTION("gold index out of range") {
    CHECK_THROWS_AS(mce_loss(std::vector<double>{1.0, 2.0}, 2), DataError);
  }
}

TEST_CASE("graph losses agree with the closed-form losses") {
  Rng rng(31);
  for (Encoder enc : {Encoder::sequence, Encoder::attention, Encoder::aggregation}) {
    for (Loss loss : {Loss::bce, Loss::mce}) {
      auto m = tiny_model(enc, loss, 19);
      Engine e(m);
      for (int t = 0; t < 5; ++t) {
        auto hyps = random_list(rng, m.vocab, 2 + rng.index(4));
        const std::size_t gold = rng.index(hyps.size());
        e.reset();
        auto scores_node = e.scores(hyps);
        auto vals = e.graph().values(scores_node);
        std::vector<double> o(vals.begin(), vals.end());
        const double graph_loss = e.graph().scalar(e.loss_from_scores(scores_node, gold));
        const double direct =
            loss == Loss::bce ? bce_loss(o, gold) : mce_loss(o, gold);
        CHECK(graph_loss == Approx(direct).margin(1e-12));
      }
    }
  }
}

TEST_CASE("loss gradients match finite differences for all six variants") {
  // Small dims keep the finite-difference sweep fast. The parameter scale
  // is widened from the training init so that no true gradient coordinate
  // sits below the central-difference noise floor at h = 1e-5.
  Dims dims;
  dims.d_tok = 3;
  dims.d_int = 3;
  dims.d_slot = 2;
  dims.d_skill = 3;
  dims.d_ctx = 2;
  dims.d_e = 4;
  dims.d_h = 3;
  dims.d_f = 5;
  dims.heads = 2;
  dims.d_k = 2;

  Rng rng(10);
  auto vocab = tiny_vocab();
  vocab.n_tokens = 6;
  std::vector<std::vector<Hypothesis>> batch;
  std::vector<std::size_t> golds;
  for (int i = 0; i < 4; ++i) {
    batch.push_back(random_list(rng, vocab, 2 + rng.index(3)));
    golds.push_back(rng.index(batch.back().size()));
  }

  for (Encoder enc : {Encoder::sequence, Encoder::attention, Encoder::aggregation}) {
    for (Loss loss : {Loss::bce, Loss::mce}) {
      auto m = init_model({enc, loss, false}, dims, vocab, 10007);
      for (auto& t : m.params.tensors)
        for (double& x : t.values) x *= 5.0;  // U(-0.5, 0.5)

      auto batch_loss = [&](const ModelVariant& model) {
        Engine e(model);
        Graph::Ref sum{-1};
        for (std::size_t i = 0; i < batch.size(); ++i) {
          auto l = e.loss(batch[i], golds[i]);
          sum = sum.valid() ? e.graph().add(sum, l) : l;
        }
        return e.graph().scalar(e.graph().scale(sum, 1.0 / batch.size()));
      };

      // reverse mode
      Engine e(m);
      Graph::Ref sum{-1};
      for (std::size_t i = 0; i < batch.size(); ++i) {
        auto l = e.loss(batch[i], golds[i]);
        sum = sum.valid() ? e.graph().add(sum, l) : l;
      }
      e.graph().backward(e.graph().scale(sum, 1.0 / batch.size()));

      // independent forward-only oracle
      auto fd = nc::finite_difference_gradient(
          [&](const std::vector<Tensor>& ps) {
            ModelVariant probe = m;
            probe.params.tensors = ps;
            return batch_loss(probe);
          },
          m.params.tensors, 1e-5);

      double worst = 0.0;
      for (std::size_t t = 0; t < m.params.tensors.size(); ++t)
        worst = std::max(worst, nc::max_relative_error(e.param_grad(t), fd[t].values));
      INFO(m.spec.label());
      CHECK(worst < 1e-4);
    }
  }
}
