#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mlmn/corpus/dataset.hpp"
#include "mlmn/model/mlmn.hpp"
#include "mlmn/numerics/adam.hpp"
#include "mlmn/training/metrics.hpp"

namespace mlmn::training {

    using corpus::EncodedCase;
    using corpus::MatchExample;
    using model::ArticleEntry;
    using model::MatchModel;

    struct TrainConfig {
        std::size_t batch_size = 64;  // positives plus their negatives
        double learning_rate = 1e-3;
        std::size_t max_epochs = 100;
        std::size_t patience = 5;
        double negative_ratio = 5.0;
        std::uint64_t seed = 1;
        corpus::NegativeScope negative_scope = corpus::NegativeScope::per_fact;

        void validate() const {
            if (batch_size == 0) throw InputError("train config: batch_size must be positive");
            if (patience < 1) throw InputError("train config: patience must be at least 1");
            if (!(negative_ratio >= 0)) throw InputError("train config: negative_ratio must be non-negative");
            if (!(learning_rate >= 0)) throw InputError("train config: learning_rate must be non-negative");
            if (max_epochs == 0) throw InputError("train config: max_epochs must be positive");
        }
    };

    inline void to_json(nlohmann::json& j, const TrainConfig& c) {
        j = nlohmann::json{{"batch_size", c.batch_size},
                           {"learning_rate", c.learning_rate},
                           {"max_epochs", c.max_epochs},
                           {"patience", c.patience},
                           {"negative_ratio", c.negative_ratio},
                           {"seed", c.seed},
                           {"negative_scope", c.negative_scope == corpus::NegativeScope::per_fact ? "per_fact" : "per_batch"}};
    }

    inline void from_json(const nlohmann::json& j, TrainConfig& c) {
        TrainConfig d;
        c.batch_size = j.value("batch_size", d.batch_size);
        c.learning_rate = j.value("learning_rate", d.learning_rate);
        c.max_epochs = j.value("max_epochs", d.max_epochs);
        c.patience = j.value("patience", d.patience);
        c.negative_ratio = j.value("negative_ratio", d.negative_ratio);
        c.seed = j.value("seed", d.seed);
        const auto scope = j.value("negative_scope", std::string("per_fact"));
        if (scope == "per_fact") {
            c.negative_scope = corpus::NegativeScope::per_fact;
        } else if (scope == "per_batch") {
            c.negative_scope = corpus::NegativeScope::per_batch;
        } else {
            throw InputError("unknown negative_scope: " + scope);
        }
    }

    struct EpochRecord {
        std::size_t epoch = 0;  // 1-based
        double train_loss = 0.0;
        Metrics validation;
    };

    struct TrainResult {
        std::vector<EpochRecord> epochs;
        std::size_t best_epoch = 0;
        Metrics best_validation;
        bool early_stopped = false;
    };

    struct Batch {
        std::vector<MatchExample> examples;
        std::size_t positives = 0;
        std::size_t negatives = 0;
    };

    // Positives per batch so that a full batch holds about batch_size examples.
    inline std::size_t positives_per_batch(const TrainConfig& cfg) {
        const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(cfg.batch_size) / (1.0 + cfg.negative_ratio)));
        return std::max<std::size_t>(1, k);
    }

    // One epoch of batches: positives shuffled, fresh negatives per batch.
    inline std::vector<Batch> epoch_batches(const std::vector<MatchExample>& positives,
                                            const std::vector<EncodedCase>& cases, std::size_t n_articles,
                                            const TrainConfig& cfg, Rng& rng) {
        auto order = positives;
        rng.shuffle(order);
        const std::size_t k = positives_per_batch(cfg);
        std::vector<Batch> out;
        for (std::size_t start = 0; start < order.size(); start += k) {
            const std::size_t end = std::min(order.size(), start + k);
            std::span<const MatchExample> pos(order.data() + start, end - start);
            Batch b;
            b.examples.assign(pos.begin(), pos.end());
            auto neg = corpus::sample_negatives(pos, cases, n_articles, cfg.negative_ratio, rng, cfg.negative_scope);
            b.positives = pos.size();
            b.negatives = neg.size();
            b.examples.insert(b.examples.end(), neg.begin(), neg.end());
            out.push_back(std::move(b));
        }
        return out;
    }

    // p(match) for every (fact, article) pair: scores[case][fact][article].
    using ScoreTable = std::vector<std::vector<std::vector<double>>>;

    inline std::vector<std::vector<Tensor>> cache_articles(const MatchModel& m, const std::vector<ArticleEntry>& articles) {
        std::vector<std::vector<Tensor>> out;
        out.reserve(articles.size());
        for (const auto& a : articles) out.push_back(m.article_patterns(a.tokens));
        return out;
    }

    inline ScoreTable score_pairs(const MatchModel& m, const std::vector<EncodedCase>& cases,
                                  const std::vector<ArticleEntry>& articles) {
        const auto cache = cache_articles(m, articles);
        ScoreTable out(cases.size());
        for (std::size_t c = 0; c < cases.size(); ++c) {
            for (const auto& fact : cases[c].facts) {
                const auto fact_levels = m.patterns(fact, model::Side::fact);
                std::vector<double> row(articles.size());
                for (std::size_t a = 0; a < articles.size(); ++a) {
                    row[a] = m.predict(fact, articles[a].tokens, &articles[a].knowledge, &cache[a], &fact_levels).p_match;
                }
                out[c].push_back(std::move(row));
            }
        }
        return out;
    }

    inline std::vector<std::size_t> predicted_articles(const std::vector<double>& row, double threshold) {
        std::vector<std::size_t> out;
        for (std::size_t a = 0; a < row.size(); ++a) {
            if (row[a] > threshold) out.push_back(a);
        }
        return out;
    }

    // Pairwise metrics over the full candidate pool.
    inline Metrics evaluate_fine(const ScoreTable& scores, const std::vector<EncodedCase>& cases, double threshold) {
        Metrics m;
        for (std::size_t c = 0; c < cases.size(); ++c) {
            for (std::size_t f = 0; f < cases[c].facts.size(); ++f) {
                m += compare_sets(predicted_articles(scores[c][f], threshold), cases[c].fact_articles[f]);
            }
        }
        return m;
    }

    inline Metrics evaluate_fine(const MatchModel& m, const std::vector<EncodedCase>& cases,
                                 const std::vector<ArticleEntry>& articles) {
        return evaluate_fine(score_pairs(m, cases, articles), cases, m.config().threshold);
    }

    enum class CoarseMode {
        fine_union,    // union of per-fact recommendations
        coarse_model,  // one whole-paragraph recommendation; cases must be single-fact paragraphs
    };

    // Case-level metrics against the union of each case's gold articles.
    inline Metrics evaluate_coarse(const ScoreTable& scores, const std::vector<EncodedCase>& cases, double threshold,
                                   CoarseMode mode) {
        Metrics m;
        for (std::size_t c = 0; c < cases.size(); ++c) {
            if (mode == CoarseMode::coarse_model && cases[c].facts.size() != 1) {
                throw InputError("evaluate_coarse: case " + cases[c].case_id + " is not a single paragraph");
            }
            std::vector<std::size_t> predicted, gold;
            for (std::size_t f = 0; f < cases[c].facts.size(); ++f) {
                for (std::size_t a : predicted_articles(scores[c][f], threshold)) predicted.push_back(a);
                gold.insert(gold.end(), cases[c].fact_articles[f].begin(), cases[c].fact_articles[f].end());
            }
            for (auto* v : {&predicted, &gold}) {
                std::sort(v->begin(), v->end());
                v->erase(std::unique(v->begin(), v->end()), v->end());
            }
            m += compare_sets(predicted, gold);
        }
        return m;
    }

    inline Metrics evaluate_coarse(const MatchModel& m, const std::vector<EncodedCase>& cases,
                                   const std::vector<ArticleEntry>& articles, CoarseMode mode) {
        return evaluate_coarse(score_pairs(m, cases, articles), cases, m.config().threshold, mode);
    }

    namespace detail {

        inline double train_batch(MatchModel& m, const Batch& batch, const std::vector<EncodedCase>& cases,
                                  const std::vector<ArticleEntry>& articles, AdamState& adam, Rng& rng) {
            for (auto& p : m.params().all()) p.zero_grad();
            const double scale = 1.0 / static_cast<double>(batch.examples.size());
            double loss_sum = 0.0;
            for (const auto& ex : batch.examples) {
                const auto& art = articles[ex.article];
                Tape tape;
                auto logits = m.logits(tape, cases[ex.case_index].facts[ex.fact_index], art.tokens, &art.knowledge,
                                       true, &rng);
                auto loss = ops::softmax_cross_entropy(logits, static_cast<std::size_t>(ex.label));
                loss_sum += loss.value()[0];
                tape.backward(loss);
                tape.flush_gradients(scale);
            }
            if (!std::isfinite(loss_sum)) throw NumericError("training loss is not finite");
            adam_step(m.params(), adam);
            return loss_sum;
        }

    }  // namespace detail

    // Adam on mean cross-entropy with early stopping on validation F1. The
    // model ends up holding the parameters of the best validation epoch.
    inline TrainResult train(MatchModel& m, const std::vector<EncodedCase>& train_cases,
                             const std::vector<EncodedCase>& val_cases, const std::vector<ArticleEntry>& articles,
                             const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch = {}) {
        cfg.validate();
        if (train_cases.empty() || val_cases.empty()) throw InputError("train: training and validation sets must be non-empty");
        if (articles.empty()) throw InputError("train: the article store is empty");
        const auto positives = corpus::positive_examples(train_cases);
        if (positives.empty()) throw InputError("train: the training set has no gold fact-article pairs");

        auto adam = make_adam_state(m.params(), {.lr = cfg.learning_rate});
        TrainResult result;
        std::vector<Tensor> best;
        double best_f1 = -1.0;
        std::size_t since_best = 0;
        for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
            Rng rng(mix_seed(cfg.seed, epoch));
            double loss_sum = 0.0;
            std::size_t count = 0;
            for (const auto& batch : epoch_batches(positives, train_cases, articles.size(), cfg, rng)) {
                loss_sum += detail::train_batch(m, batch, train_cases, articles, adam, rng);
                count += batch.examples.size();
            }
            EpochRecord rec{epoch, loss_sum / static_cast<double>(count), evaluate_fine(m, val_cases, articles)};
            result.epochs.push_back(rec);
            if (on_epoch) on_epoch(rec);
            if (rec.validation.f1() > best_f1) {
                best_f1 = rec.validation.f1();
                result.best_epoch = epoch;
                result.best_validation = rec.validation;
                best.clear();
                for (const auto& p : m.params().all()) best.push_back(p.value);
                since_best = 0;
            } else if (++since_best >= cfg.patience) {
                result.early_stopped = true;
                break;
            }
        }
        auto& ps = m.params().all();
        for (std::size_t k = 0; k < ps.size(); ++k) ps[k].value = best[k];
        return result;
    }

    inline const char* epoch_log_header = "epoch,train_loss,val_P,val_R,val_F1";

    inline void write_epoch_log(std::ostream& os, const std::vector<EpochRecord>& epochs) {
        os << epoch_log_header << '\n';
        for (const auto& e : epochs) {
            os << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.validation.precision()) << ','
               << format_double(e.validation.recall()) << ',' << format_double(e.validation.f1()) << '\n';
        }
    }

    struct RatioRow {
        double ratio = 0.0;
        Metrics test;
    };

    // Trains one fresh model per negative ratio with the same seed and
    // reports test metrics for each.
    inline std::vector<RatioRow> sweep_ratio(const std::function<MatchModel()>& make_model,
                                             const std::vector<EncodedCase>& train_cases,
                                             const std::vector<EncodedCase>& val_cases,
                                             const std::vector<EncodedCase>& test_cases,
                                             const std::vector<ArticleEntry>& articles, TrainConfig cfg,
                                             const std::vector<double>& ratios) {
        if (ratios.empty()) throw InputError("sweep_ratio: no ratios given");
        std::vector<RatioRow> rows;
        for (double r : ratios) {
            cfg.negative_ratio = r;
            auto m = make_model();
            train(m, train_cases, val_cases, articles, cfg);
            rows.push_back({r, evaluate_fine(m, test_cases, articles)});
        }
        return rows;
    }

    inline bool precision_non_decreasing(const std::vector<RatioRow>& rows) {
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].test.precision() < rows[i - 1].test.precision()) return false;
        }
        return true;
    }

    inline const char* sweep_csv_header = "ratio,P,R,F1,TP,FP,FN";

    inline void write_sweep_csv(std::ostream& os, const std::vector<RatioRow>& rows) {
        os << sweep_csv_header << '\n';
        for (const auto& r : rows) {
            const auto line = metrics_csv_row(format_double(r.ratio), r.test);
            os << line << '\n';
        }
    }

    inline std::vector<RatioRow> read_sweep_csv(std::istream& is) {
        std::string line;
        if (!std::getline(is, line) || line != sweep_csv_header) throw InputError("sweep csv: bad header");
        std::stringstream rest;
        rest << metrics_csv_header << '\n' << is.rdbuf();
        rest.clear();
        std::vector<RatioRow> out;
        for (auto& nm : read_metrics_csv(rest)) {
            try {
                out.push_back({std::stod(nm.split), nm.metrics});
            } catch (const std::exception&) {
                throw InputError("sweep csv: bad ratio " + nm.split);
            }
        }
        return out;
    }

}  // namespace mlmn::training
