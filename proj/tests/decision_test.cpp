#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "grad_check.hpp"
#include "mlmn/decision/checkpoint.hpp"

using namespace mlmn;
using namespace mlmn::decision;
using mlmn::testing::check_gradients;
using mlmn::testing::random_tensor;

namespace {

    DecisionConfig tiny_config() {
        DecisionConfig c;
        c.embedding_dim = 4;
        c.hidden = 3;
        c.corr_width = 5;
        c.paragraph_length = 12;
        return c;
    }

    corpus::TokenSequence seq(std::vector<std::size_t> ids, std::size_t len) {
        corpus::TokenSequence s;
        s.true_length = ids.size();
        s.ids = std::move(ids);
        s.ids.resize(len, corpus::pad_id);
        return s;
    }

    Tensor random_embeddings(std::size_t rows, std::size_t dim, Rng& rng) {
        Tensor t({rows, dim});
        for (std::size_t r = 1; r < rows; ++r) {
            for (double& v : t.row(r)) v = rng.uniform(-1, 1);
        }
        return t;
    }

    void randomize(ParamStore& store, Rng& rng) {
        for (auto& p : store.all()) {
            if (p.name == "embedding") continue;
            for (double& v : p.value.data()) v = rng.uniform(-0.5, 0.5);
        }
    }

    // plain LSTM over rows of x, gate order i f g o
    std::vector<double> lstm_oracle(const Tensor& x, const Tensor& wih, const Tensor& whh, const Tensor& b,
                                    bool reverse) {
        const std::size_t len = x.rows(), in = x.cols(), hw = whh.rows();
        std::vector<double> h(hw, 0.0), c(hw, 0.0);
        auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
        for (std::size_t s = 0; s < len; ++s) {
            const std::size_t t = reverse ? len - 1 - s : s;
            std::vector<double> z(4 * hw);
            for (std::size_t k = 0; k < 4 * hw; ++k) {
                z[k] = b[k];
                for (std::size_t p = 0; p < in; ++p) z[k] += x.at(t, p) * wih.at(p, k);
                for (std::size_t p = 0; p < hw; ++p) z[k] += h[p] * whh.at(p, k);
            }
            for (std::size_t k = 0; k < hw; ++k) {
                c[k] = sig(z[hw + k]) * c[k] + sig(z[k]) * std::tanh(z[2 * hw + k]);
                h[k] = sig(z[3 * hw + k]) * std::tanh(c[k]);
            }
        }
        return h;
    }

    struct World {
        Tensor embeddings;
        std::vector<corpus::TokenSequence> articles;
        DecisionExample example;
    };

    World make_world(std::uint64_t seed) {
        Rng rng(seed);
        World w;
        w.embeddings = random_embeddings(20, 4, rng);
        for (int a = 0; a < 4; ++a) w.articles.push_back(seq({2 + rng.below(18), 2 + rng.below(18), 2 + rng.below(18)}, 6));
        w.example.case_id = "c1";
        w.example.facts = {seq({3, 4, 5}, 6), seq({7, 8}, 6), seq({9, 10, 11, 12}, 6)};
        w.example.fact_articles = {{0, 2}, {}, {1}};
        w.example.paragraph = seq({3, 4, 5, 7, 8, 9, 10, 11, 12}, 12);
        w.example.case_articles = {0, 1, 2};
        w.example.label = 3;
        return w;
    }

}  // namespace

TEST(Lstm, MatchesScalarOracle) {
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t len = 1 + rng.below(6), in = 1 + rng.below(4), hw = 1 + rng.below(4);
        Tensor x = random_tensor({len, in}, rng), wih = random_tensor({in, 4 * hw}, rng);
        Tensor whh = random_tensor({hw, 4 * hw}, rng), b = random_tensor({4 * hw}, rng);
        for (bool reverse : {false, true}) {
            Tape tape;
            auto h = lstm_final(tape.constant(x), {tape.constant(wih), tape.constant(whh), tape.constant(b)}, reverse);
            auto o = lstm_oracle(x, wih, whh, b, reverse);
            for (std::size_t k = 0; k < hw; ++k) EXPECT_NEAR(h.value()[k], o[k], 1e-12);
        }
    }
}

TEST(Lstm, ZeroWeightsGiveZeroOutput) {
    Tape tape;
    Rng rng(1);
    auto x = tape.constant(random_tensor({5, 3}, rng));
    LstmWeights z{tape.constant(Tensor({3, 8})), tape.constant(Tensor({2, 8})), tape.constant(Tensor({8}))};
    auto h = bilstm_encode(x, z, z);
    for (double v : h.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Lstm, SingleStepDirectionsAgree) {
    Tape tape;
    Rng rng(2);
    auto x = tape.constant(random_tensor({1, 3}, rng));
    LstmWeights w{tape.constant(random_tensor({3, 8}, rng)), tape.constant(random_tensor({2, 8}, rng)),
                  tape.constant(random_tensor({8}, rng))};
    auto h = bilstm_encode(x, w, w);
    EXPECT_EQ(h.value()[0], h.value()[2]);
    EXPECT_EQ(h.value()[1], h.value()[3]);
}

TEST(Lstm, BackwardEqualsForwardOnReversedSequence) {
    Rng rng(3);
    Tensor x = random_tensor({6, 3}, rng);
    Tensor rev({6, 3});
    for (std::size_t t = 0; t < 6; ++t) {
        for (std::size_t k = 0; k < 3; ++k) rev.at(t, k) = x.at(5 - t, k);
    }
    Tape tape;
    LstmWeights f{tape.constant(random_tensor({3, 8}, rng)), tape.constant(random_tensor({2, 8}, rng)),
                  tape.constant(random_tensor({8}, rng))};
    LstmWeights b{tape.constant(random_tensor({3, 8}, rng)), tape.constant(random_tensor({2, 8}, rng)),
                  tape.constant(random_tensor({8}, rng))};
    auto on_s = bilstm_encode(tape.constant(x), f, b);
    auto on_rev = bilstm_encode(tape.constant(rev), b, f);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_EQ(on_s.value()[2 + k], on_rev.value()[k]);
        EXPECT_EQ(on_s.value()[k], on_rev.value()[2 + k]);
    }
}

TEST(Lstm, EmptySequenceIsAnError) {
    auto w = make_world(1);
    w.example.facts[1] = seq({}, 6);
    DecisionModel m(tiny_config(), Path::fine, w.embeddings, 9);
    EXPECT_THROW(m.probabilities(w.example, w.articles), InputError);
}

TEST(Classifier, ProbabilitiesSumToOne) {
    for (Path path : {Path::fine, Path::coarse}) {
        auto w = make_world(5);
        DecisionModel m(tiny_config(), path, w.embeddings, 9);
        const auto p = m.probabilities(w.example, w.articles);
        double s = 0;
        for (double v : p.p) s += v;
        EXPECT_NEAR(s, 1.0, 1e-9);
    }
}

TEST(Classifier, EmptyArticleSetsIgnoreTheStore) {
    auto w = make_world(6);
    w.example.fact_articles = {{}, {}, {}};
    DecisionModel m(tiny_config(), Path::fine, w.embeddings, 9);
    Rng rng(8);
    randomize(m.params(), rng);
    auto other = w.articles;
    for (auto& a : other) a = seq({5, 6, 7, 8}, 6);
    EXPECT_EQ(m.probabilities(w.example, w.articles).p, m.probabilities(w.example, other).p);
}

TEST(Classifier, FactOrderDoesNotMatter) {
    auto w = make_world(7);
    DecisionModel m(tiny_config(), Path::fine, w.embeddings, 9);
    Rng rng(8);
    randomize(m.params(), rng);
    auto permuted = w.example;
    std::swap(permuted.facts[0], permuted.facts[2]);
    std::swap(permuted.fact_articles[0], permuted.fact_articles[2]);
    std::swap(permuted.facts[1], permuted.facts[2]);
    std::swap(permuted.fact_articles[1], permuted.fact_articles[2]);
    EXPECT_EQ(m.probabilities(w.example, w.articles).p, m.probabilities(permuted, w.articles).p);
}

TEST(Classifier, ArticleOrderDoesNotMatter) {
    auto w = make_world(8);
    for (Path path : {Path::fine, Path::coarse}) {
        DecisionModel m(tiny_config(), path, w.embeddings, 9);
        Rng rng(8);
        randomize(m.params(), rng);
        auto permuted = w.example;
        permuted.fact_articles[0] = {2, 0};
        permuted.case_articles = {2, 0, 1};
        EXPECT_EQ(m.probabilities(w.example, w.articles).p, m.probabilities(permuted, w.articles).p);
    }
}

TEST(Classifier, FineGradientCheck) {
    auto w = make_world(9);
    auto cfg = tiny_config();
    cfg.tune_embeddings = true;
    for (Path path : {Path::fine, Path::coarse}) {
        DecisionModel m(cfg, path, w.embeddings, 10);
        Rng rng(11);
        randomize(m.params(), rng);
        auto r = check_gradients(m.params(), [&](Tape& tape) {
            return ops::softmax_cross_entropy(m.logits(tape, w.example, w.articles), 3);
        });
        EXPECT_GT(r.checked, 0u);
        EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
    }
}

TEST(Classifier, DropoutOnlyWithRng) {
    auto w = make_world(14);
    auto cfg = tiny_config();
    cfg.dropout = 0.5;
    DecisionModel m(cfg, Path::fine, w.embeddings, 15);
    Rng init(2);
    randomize(m.params(), init);
    DecisionModel plain(tiny_config(), Path::fine, w.embeddings, 15);
    plain.params() = m.params();
    EXPECT_EQ(m.probabilities(w.example, w.articles).p, plain.probabilities(w.example, w.articles).p);
    Tape t1, t2;
    Rng r1(3), r2(3);
    const auto a = m.logits(t1, w.example, w.articles, &r1).value();
    const auto b = m.logits(t2, w.example, w.articles, &r2).value();
    EXPECT_EQ(a, b);
    Tape t3;
    EXPECT_NE(a, m.logits(t3, w.example, w.articles).value());
    cfg.dropout = 1.0;
    EXPECT_THROW(DecisionModel(cfg, Path::fine, w.embeddings, 15), InputError);
}

TEST(Classifier, CheckpointRoundTrip) {
    auto w = make_world(12);
    DecisionModel m(tiny_config(), Path::coarse, w.embeddings, 13);
    Rng rng(1);
    randomize(m.params(), rng);
    std::stringstream ss;
    save_decision_model(ss, m);
    auto back = load_decision_model(ss);
    EXPECT_EQ(back.path(), Path::coarse);
    EXPECT_EQ(back.config(), m.config());
    EXPECT_EQ(back.probabilities(w.example, w.articles).p, m.probabilities(w.example, w.articles).p);
    std::istringstream junk("MLMNCKPT....");
    EXPECT_THROW(load_decision_model(junk), CompatibilityError);
}

TEST(DecisionMetrics, ToyConfusion) {
    auto m = decision_metrics({0, 1}, {0, 0});
    EXPECT_DOUBLE_EQ(m.f1[0], 2.0 / 3.0);
    EXPECT_EQ(m.f1[1], 0.0);
    EXPECT_TRUE(m.present[0] && m.present[1]);
    EXPECT_FALSE(m.present[2] || m.present[3] || m.present[4]);
    EXPECT_DOUBLE_EQ(m.macro_f1, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.weighted_f1, 1.0 / 3.0);
}

TEST(DecisionMetrics, PerfectAndWeighted) {
    auto p = decision_metrics({0, 1, 1, 4}, {0, 1, 1, 4});
    EXPECT_EQ(p.macro_f1, 1.0);
    EXPECT_EQ(p.weighted_f1, 1.0);
    // class 0: tp 2 fp 1 -> 0.8; class 2: tp 0 fn 1 -> 0
    auto w = decision_metrics({0, 0, 2}, {0, 0, 0});
    EXPECT_DOUBLE_EQ(w.macro_f1, 0.4);
    EXPECT_DOUBLE_EQ(w.weighted_f1, 0.8 * 2.0 / 3.0);
    EXPECT_THROW(decision_metrics({0}, {5}), InputError);
    EXPECT_EQ(decision_csv_row("fine-gold", p), "fine-gold,1,1,1,1,NA,NA,1");
}

TEST(DecisionExamples, GoldAndPredictedSources) {
    corpus::Vocabulary vocab;
    for (const char* t : {"a", "b", "c"}) vocab.add(t, 1);
    corpus::EncodedCase c;
    c.case_id = "k";
    c.fact_tokens = {{"a", "b"}, {"c"}};
    c.facts = {corpus::encode_and_pad(c.fact_tokens[0], vocab, 4), corpus::encode_and_pad(c.fact_tokens[1], vocab, 4)};
    c.fact_articles = {{1}, {0, 1}};
    c.cited = {0, 1};
    c.decision = 2;
    auto gold = make_examples({c}, vocab, 8);
    ASSERT_EQ(gold.size(), 1u);
    EXPECT_EQ(gold[0].fact_articles, c.fact_articles);
    EXPECT_EQ(gold[0].case_articles, (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(gold[0].paragraph.true_length, 3u);
    EXPECT_EQ(gold[0].label, 2);
    std::vector<std::vector<std::vector<std::size_t>>> pred{{{2}, {}}};
    auto p = make_examples({c}, vocab, 8, &pred);
    EXPECT_EQ(p[0].case_articles, (std::vector<std::size_t>{2}));
}
