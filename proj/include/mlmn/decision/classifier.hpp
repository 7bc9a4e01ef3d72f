#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <functional>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mlmn/corpus/dataset.hpp"
#include "mlmn/corpus/records.hpp"
#include "mlmn/numerics/adam.hpp"
#include "mlmn/numerics/ops.hpp"
#include "mlmn/numerics/params.hpp"
#include "mlmn/numerics/tape.hpp"

namespace mlmn::decision {

    inline constexpr std::size_t num_classes = corpus::num_decision_classes;

    enum class Path { fine, coarse };

    inline std::string to_string(Path p) { return p == Path::fine ? "fine" : "coarse"; }

    inline Path parse_path(const std::string& s) {
        if (s == "fine") return Path::fine;
        if (s == "coarse") return Path::coarse;
        throw InputError("unknown decision path: " + s);
    }

    struct DecisionConfig {
        std::size_t embedding_dim = 128;
        std::size_t hidden = 64;
        std::size_t corr_width = 64;
        std::size_t paragraph_length = 200;
        // encoding lengths of single facts and articles fed to the classifier
        std::size_t fact_length = 50;
        std::size_t article_length = 50;
        double forget_bias = 1.0;
        bool tune_embeddings = false;
        // applied to the fact (or paragraph) encoding and the article sum while training
        double dropout = 0.0;

        void validate() const {
            if (embedding_dim == 0 || hidden == 0 || corr_width == 0 || paragraph_length == 0 || fact_length == 0 ||
                article_length == 0) {
                throw InputError("decision config: widths must be positive");
            }
            if (!(dropout >= 0.0 && dropout < 1.0)) throw InputError("decision config: dropout must lie in [0, 1)");
        }

        bool operator==(const DecisionConfig&) const = default;
    };

    inline void to_json(nlohmann::json& j, const DecisionConfig& c) {
        j = nlohmann::json{{"embedding_dim", c.embedding_dim}, {"hidden", c.hidden},
                           {"corr_width", c.corr_width},       {"paragraph_length", c.paragraph_length},
                           {"forget_bias", c.forget_bias},     {"tune_embeddings", c.tune_embeddings},
                           {"fact_length", c.fact_length},     {"article_length", c.article_length},
                           {"dropout", c.dropout}};
    }

    inline void from_json(const nlohmann::json& j, DecisionConfig& c) {
        DecisionConfig d;
        c.embedding_dim = j.value("embedding_dim", d.embedding_dim);
        c.hidden = j.value("hidden", d.hidden);
        c.corr_width = j.value("corr_width", d.corr_width);
        c.paragraph_length = j.value("paragraph_length", d.paragraph_length);
        c.forget_bias = j.value("forget_bias", d.forget_bias);
        c.tune_embeddings = j.value("tune_embeddings", d.tune_embeddings);
        c.dropout = j.value("dropout", d.dropout);
        c.fact_length = j.value("fact_length", d.fact_length);
        c.article_length = j.value("article_length", d.article_length);
    }

    // One case as seen by the decision classifier. Article references are
    // indices into a shared list of encoded articles.
    struct DecisionExample {
        std::string case_id;
        std::vector<corpus::TokenSequence> facts;
        std::vector<std::vector<std::size_t>> fact_articles;
        corpus::TokenSequence paragraph;
        std::vector<std::size_t> case_articles;
        int label = 0;
    };

    // With `predicted` null the gold correspondences are used; otherwise
    // predicted[c][f] lists the articles recommended for fact f of case c and
    // the case-level set is their union.
    inline std::vector<DecisionExample> make_examples(
        const std::vector<corpus::EncodedCase>& cases, const corpus::Vocabulary& vocab, std::size_t paragraph_length,
        const std::vector<std::vector<std::vector<std::size_t>>>* predicted = nullptr) {
        if (predicted && predicted->size() != cases.size()) throw ShapeError("make_examples: predicted sets per case");
        std::vector<DecisionExample> out;
        for (std::size_t c = 0; c < cases.size(); ++c) {
            const auto& ec = cases[c];
            DecisionExample ex;
            ex.case_id = ec.case_id;
            ex.facts = ec.facts;
            ex.label = ec.decision;
            if (predicted) {
                ex.fact_articles = (*predicted)[c];
                if (ex.fact_articles.size() != ec.facts.size()) throw ShapeError("make_examples: predicted sets per fact");
                std::set<std::size_t> all;
                for (const auto& s : ex.fact_articles) all.insert(s.begin(), s.end());
                ex.case_articles.assign(all.begin(), all.end());
            } else {
                ex.fact_articles = ec.fact_articles;
                ex.case_articles = ec.cited;
            }
            ex.paragraph = corpus::to_paragraph_case(ec, vocab, paragraph_length).facts.front();
            out.push_back(std::move(ex));
        }
        return out;
    }

    struct LstmWeights {
        Var w_ih;  // in x 4H, gate order i f g o
        Var w_hh;  // H x 4H
        Var b;     // 4H
    };

    // Final hidden state of one LSTM direction over the rows of x.
    inline Var lstm_final(const Var& x, const LstmWeights& w, bool reverse) {
        Tape& tape = x.tape();
        const std::size_t len = x.value().rows();
        const std::size_t hw = w.w_hh.value().rows();
        if (len == 0) throw InputError("lstm: zero-length sequence");
        Var xp = ops::dense(x, w.w_ih, w.b);
        Var h = tape.constant(Tensor({hw}));
        Var c = tape.constant(Tensor({hw}));
        for (std::size_t s = 0; s < len; ++s) {
            const std::size_t t = reverse ? len - 1 - s : s;
            Var gates = ops::add(ops::row(xp, t), ops::vecmat(h, w.w_hh));
            Var hc = ops::lstm_cell(gates, c);
            h = ops::slice(hc, 0, hw);
            c = ops::slice(hc, hw, hw);
        }
        return h;
    }

    // [forward final state | backward final state]
    inline Var bilstm_encode(const Var& x, const LstmWeights& forward, const LstmWeights& backward) {
        return ops::concat({lstm_final(x, forward, false), lstm_final(x, backward, true)});
    }

    struct DecisionProbabilities {
        std::array<double, num_classes> p{};

        int argmax() const {
            int best = 0;
            for (std::size_t k = 1; k < num_classes; ++k) {
                if (p[k] > p[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
            }
            return best;
        }
    };

    class DecisionModel {
    public:
        DecisionModel(DecisionConfig config, Path path, const Tensor& embeddings, std::uint64_t seed)
            : config_(config), path_(path) {
            config_.validate();
            if (embeddings.rank() != 2 || embeddings.cols() != config_.embedding_dim) {
                throw ShapeError("embedding table " + shape_string(embeddings.shape()) + " does not have width " +
                                 std::to_string(config_.embedding_dim));
            }
            Rng rng(seed);
            const std::size_t d = config_.embedding_dim, hw = config_.hidden;
            params_.add("embedding", embeddings, config_.tune_embeddings);
            for (const char* enc : {"fact", "article"}) {
                for (const char* dir : {"fwd", "bwd"}) {
                    const std::string p = std::string(enc) + "." + dir + ".";
                    params_.add(p + "w_ih", glorot_uniform({d, 4 * hw}, d, 4 * hw, rng));
                    params_.add(p + "w_hh", glorot_uniform({hw, 4 * hw}, hw, 4 * hw, rng));
                    Tensor b({4 * hw});
                    for (std::size_t k = hw; k < 2 * hw; ++k) b[k] = config_.forget_bias;
                    params_.add(p + "b", std::move(b));
                }
            }
            const std::size_t in = 4 * hw, cw = config_.corr_width;
            params_.add("corr.w", glorot_uniform({in, cw}, in, cw, rng));
            params_.add("corr.b", Tensor({cw}));
            params_.add("out.w", glorot_uniform({cw, num_classes}, cw, num_classes, rng));
            params_.add("out.b", Tensor({num_classes}));
        }

        const DecisionConfig& config() const { return config_; }
        Path path() const { return path_; }
        ParamStore& params() { return params_; }
        const ParamStore& params() const { return params_; }

        // Passing an rng switches on training-mode dropout.
        Var logits(Tape& tape, const DecisionExample& ex, const std::vector<corpus::TokenSequence>& articles,
                   Rng* rng = nullptr) {
            return logits_impl(params_, tape, ex, articles, rng);
        }
        Var logits(Tape& tape, const DecisionExample& ex, const std::vector<corpus::TokenSequence>& articles,
                   Rng* rng = nullptr) const {
            return logits_impl(params_, tape, ex, articles, rng);
        }

        DecisionProbabilities probabilities(const DecisionExample& ex,
                                            const std::vector<corpus::TokenSequence>& articles) const {
            Tape tape;
            const Var z = ops::softmax(logits(tape, ex, articles), 0);
            DecisionProbabilities out;
            for (std::size_t k = 0; k < num_classes; ++k) out.p[k] = z.value()[k];
            return out;
        }

        int predict(const DecisionExample& ex, const std::vector<corpus::TokenSequence>& articles) const {
            return probabilities(ex, articles).argmax();
        }

    private:
        template <class Store>
        Var logits_impl(Store& params, Tape& tape, const DecisionExample& ex,
                        const std::vector<corpus::TokenSequence>& articles, Rng* rng) const {
            auto weights = [&](const std::string& prefix) {
                return LstmWeights{tape.parameter(params.at(prefix + "w_ih")), tape.parameter(params.at(prefix + "w_hh")),
                                   tape.parameter(params.at(prefix + "b"))};
            };
            Var table = tape.parameter(params.at("embedding"));
            const LstmWeights ff = weights("fact.fwd."), fb = weights("fact.bwd.");
            const LstmWeights af = weights("article.fwd."), ab = weights("article.bwd.");
            auto encode = [&](const corpus::TokenSequence& s, const LstmWeights& f, const LstmWeights& b) {
                if (s.true_length == 0) throw InputError("decision: empty sequence in case " + ex.case_id);
                return bilstm_encode(
                    ops::embedding_lookup(table, std::span<const std::size_t>(s.ids.data(), s.true_length)), f, b);
            };
            std::map<std::size_t, Var> article_cache;
            auto article_sum = [&](const std::vector<std::size_t>& ids) {
                if (ids.empty()) return tape.constant(Tensor({2 * config_.hidden}));
                // summed in ascending id order so that set order cannot change the result
                std::vector<std::size_t> sorted(ids);
                std::sort(sorted.begin(), sorted.end());
                std::vector<Var> encs;
                for (std::size_t a : sorted) {
                    if (a >= articles.size()) throw InputError("decision: article index out of range");
                    auto it = article_cache.find(a);
                    if (it == article_cache.end()) it = article_cache.emplace(a, encode(articles[a], af, ab)).first;
                    encs.push_back(it->second);
                }
                return encs.size() == 1 ? encs.front() : ops::add_n(encs);
            };
            const Var cw = tape.parameter(params.at("corr.w")), cb = tape.parameter(params.at("corr.b"));
            auto drop = [&](const Var& v) { return rng ? ops::dropout(v, config_.dropout, true, *rng) : v; };
            auto correspond = [&](const Var& text, const Var& arts) {
                return ops::dense(ops::concat({drop(text), drop(arts)}), cw, cb, ops::Activation::relu);
            };

            Var summary;
            if (path_ == Path::fine) {
                if (ex.facts.empty()) throw InputError("decision: case " + ex.case_id + " has no facts");
                if (ex.fact_articles.size() != ex.facts.size()) throw ShapeError("decision: article sets per fact");
                std::vector<Var> per_fact;
                for (std::size_t f = 0; f < ex.facts.size(); ++f) {
                    per_fact.push_back(correspond(encode(ex.facts[f], ff, fb), article_sum(ex.fact_articles[f])));
                }
                // canonical order for the sum, so fact order cannot change the result
                std::sort(per_fact.begin(), per_fact.end(), [](const Var& a, const Var& b) {
                    const auto x = a.value().data(), y = b.value().data();
                    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
                });
                summary = per_fact.size() == 1 ? per_fact.front() : ops::add_n(per_fact);
            } else {
                summary = correspond(encode(ex.paragraph, ff, fb), article_sum(ex.case_articles));
            }
            return ops::dense(summary, tape.parameter(params.at("out.w")), tape.parameter(params.at("out.b")));
        }

        DecisionConfig config_;
        Path path_;
        ParamStore params_;
    };

    // One-vs-rest F1 per class. Classes absent from both gold and predictions
    // have no F1 and are left out of the macro mean.
    struct DecisionMetrics {
        std::array<std::size_t, num_classes> tp{}, fp{}, fn{}, support{};
        std::array<bool, num_classes> present{};
        std::array<double, num_classes> f1{};
        double macro_f1 = 0.0;
        double weighted_f1 = 0.0;
        double accuracy = 0.0;

        bool operator==(const DecisionMetrics&) const = default;
    };

    inline DecisionMetrics decision_metrics(const std::vector<int>& gold, const std::vector<int>& predicted) {
        if (gold.size() != predicted.size()) throw ShapeError("decision_metrics: gold and predictions differ in length");
        DecisionMetrics m;
        std::size_t correct = 0;
        for (std::size_t i = 0; i < gold.size(); ++i) {
            const auto g = static_cast<std::size_t>(gold[i]), p = static_cast<std::size_t>(predicted[i]);
            if (g >= num_classes || p >= num_classes) throw InputError("decision_metrics: class out of range");
            ++m.support[g];
            if (g == p) {
                ++m.tp[g];
                ++correct;
            } else {
                ++m.fp[p];
                ++m.fn[g];
            }
        }
        std::size_t present = 0;
        double macro = 0.0, weighted = 0.0;
        for (std::size_t k = 0; k < num_classes; ++k) {
            m.present[k] = m.tp[k] + m.fp[k] + m.fn[k] > 0;
            if (!m.present[k]) continue;
            m.f1[k] = 2.0 * static_cast<double>(m.tp[k]) / static_cast<double>(2 * m.tp[k] + m.fp[k] + m.fn[k]);
            macro += m.f1[k];
            weighted += m.f1[k] * static_cast<double>(m.support[k]);
            ++present;
        }
        m.macro_f1 = present ? macro / static_cast<double>(present) : 0.0;
        m.weighted_f1 = gold.empty() ? 0.0 : weighted / static_cast<double>(gold.size());
        m.accuracy = gold.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(gold.size());
        return m;
    }

    inline DecisionMetrics evaluate_decision(const DecisionModel& model, const std::vector<DecisionExample>& examples,
                                             const std::vector<corpus::TokenSequence>& articles) {
        std::vector<int> gold, pred;
        for (const auto& ex : examples) {
            gold.push_back(ex.label);
            pred.push_back(model.predict(ex, articles));
        }
        return decision_metrics(gold, pred);
    }

    struct DecisionTrainConfig {
        std::size_t batch_size = 16;
        double learning_rate = 1e-3;
        std::size_t max_epochs = 50;
        std::size_t patience = 5;
        std::uint64_t seed = 1;
    };

    inline void to_json(nlohmann::json& j, const DecisionTrainConfig& c) {
        j = nlohmann::json{{"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
                           {"max_epochs", c.max_epochs}, {"patience", c.patience}, {"seed", c.seed}};
    }

    inline void from_json(const nlohmann::json& j, DecisionTrainConfig& c) {
        DecisionTrainConfig d;
        c.batch_size = j.value("batch_size", d.batch_size);
        c.learning_rate = j.value("learning_rate", d.learning_rate);
        c.max_epochs = j.value("max_epochs", d.max_epochs);
        c.patience = j.value("patience", d.patience);
        c.seed = j.value("seed", d.seed);
    }

    struct DecisionEpoch {
        std::size_t epoch = 0;
        double train_loss = 0.0;
        double val_macro_f1 = 0.0;
    };

    struct DecisionTrainResult {
        std::vector<DecisionEpoch> epochs;
        std::size_t best_epoch = 0;
        double best_macro_f1 = -1.0;
    };

    // Adam on mean cross-entropy with early stopping on validation macro F1;
    // the model keeps the best epoch's parameters.
    inline DecisionTrainResult train_decision(DecisionModel& model, const std::vector<DecisionExample>& train,
                                              const std::vector<DecisionExample>& val,
                                              const std::vector<corpus::TokenSequence>& articles,
                                              const DecisionTrainConfig& cfg,
                                              const std::function<void(const DecisionEpoch&)>& on_epoch = {}) {
        if (train.empty() || val.empty()) throw InputError("train_decision: training and validation sets must be non-empty");
        if (cfg.batch_size == 0 || cfg.patience == 0 || cfg.max_epochs == 0) {
            throw InputError("train_decision: batch_size, patience and max_epochs must be positive");
        }
        auto adam = make_adam_state(model.params(), {.lr = cfg.learning_rate});
        DecisionTrainResult result;
        std::vector<Tensor> best;
        std::size_t since_best = 0;
        std::vector<std::size_t> order(train.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
            Rng rng(mix_seed(cfg.seed, epoch));
            rng.shuffle(order);
            double loss_sum = 0.0;
            for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
                const std::size_t end = std::min(order.size(), start + cfg.batch_size);
                for (auto& p : model.params().all()) p.zero_grad();
                for (std::size_t i = start; i < end; ++i) {
                    const auto& ex = train[order[i]];
                    Tape tape;
                    auto loss = ops::softmax_cross_entropy(model.logits(tape, ex, articles, &rng),
                                                           static_cast<std::size_t>(ex.label));
                    loss_sum += loss.value()[0];
                    tape.backward(loss);
                    tape.flush_gradients(1.0 / static_cast<double>(end - start));
                }
                if (!std::isfinite(loss_sum)) throw NumericError("decision training loss is not finite");
                adam_step(model.params(), adam);
            }
            DecisionEpoch rec{epoch, loss_sum / static_cast<double>(train.size()),
                              evaluate_decision(model, val, articles).macro_f1};
            result.epochs.push_back(rec);
            if (on_epoch) on_epoch(rec);
            if (rec.val_macro_f1 > result.best_macro_f1) {
                result.best_macro_f1 = rec.val_macro_f1;
                result.best_epoch = epoch;
                best.clear();
                for (const auto& p : model.params().all()) best.push_back(p.value);
                since_best = 0;
            } else if (++since_best >= cfg.patience) {
                break;
            }
        }
        auto& ps = model.params().all();
        for (std::size_t k = 0; k < ps.size(); ++k) ps[k].value = best[k];
        return result;
    }

    inline std::string decision_csv_header() {
        std::string h = "source,macroF1,weightedF1";
        for (std::size_t k = 0; k < num_classes; ++k) h += ",F1_class" + std::to_string(k);
        return h;
    }

    // absent classes are written as NA
    inline std::string decision_csv_row(const std::string& source, const DecisionMetrics& m) {
        char buf[32];
        auto fmt = [&](double v) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return std::string(buf);
        };
        std::string row = source + "," + fmt(m.macro_f1) + "," + fmt(m.weighted_f1);
        for (std::size_t k = 0; k < num_classes; ++k) row += "," + (m.present[k] ? fmt(m.f1[k]) : std::string("NA"));
        return row;
    }

}  // namespace mlmn::decision
