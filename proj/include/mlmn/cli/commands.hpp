#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mlmn/cli/config.hpp"
#include "mlmn/cli/manifest.hpp"
#include "mlmn/corpus/stopwords.hpp"
#include "mlmn/decision/checkpoint.hpp"
#include "mlmn/model/checkpoint.hpp"
#include "mlmn/parser/article_parser.hpp"
#include "mlmn/training/pipeline.hpp"

namespace mlmn::cli {

    namespace fs = std::filesystem;

    inline std::string join_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

    inline void ensure_dir(const std::string& dir) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw InputError("cannot create directory " + dir + ": " + ec.message());
    }

    inline void write_text_atomic(const std::string& path, const std::string& text) {
        binary::write_file_atomic(path, [&](std::ostream& os) { os << text; });
    }

    template <class T>
    void write_jsonl_atomic(const std::string& path, const std::vector<T>& items) {
        binary::write_file_atomic(path, [&](std::ostream& os) {
            for (const auto& item : items) os << to_json(item).dump() << '\n';
        });
    }

    inline corpus::StopWords stopwords_of(const RunConfig& cfg, RunManifest& m) {
        if (cfg.stopwords.empty()) return {};
        m.add_input(cfg.stopwords);
        return corpus::load_stopwords(cfg.stopwords);
    }

    // Everything downstream of build-dataset: vocabulary, parsed articles and
    // the three case splits.
    struct Dataset {
        corpus::Vocabulary vocab;
        std::vector<parser::ParsedArticle> parsed;
        std::vector<corpus::CaseRecord> train, validation, test;

        const std::vector<corpus::CaseRecord>& split(const std::string& name) const {
            if (name == "train") return train;
            if (name == "validation") return validation;
            if (name == "test") return test;
            throw InputError("unknown split: " + name + " (expected train, validation or test)");
        }
    };

    inline Dataset load_dataset(const std::string& dir, const std::string& parsed_path, const RunConfig& cfg,
                                RunManifest& m) {
        Dataset d;
        const auto tokenizer = corpus::make_tokenizer(cfg.tokenizer);
        const auto stop = stopwords_of(cfg, m);
        m.add_input(parsed_path);
        d.parsed = parser::read_parsed_articles(parsed_path, *tokenizer, stop);
        const auto vocab_path = join_path(dir, "vocab.tsv");
        m.add_input(vocab_path);
        d.vocab = corpus::Vocabulary::load(vocab_path);
        for (auto [name, target] : {std::pair{"train", &d.train}, {"validation", &d.validation}, {"test", &d.test}}) {
            const auto path = join_path(dir, std::string(name) + ".jsonl");
            m.add_input(path);
            *target = corpus::read_cases(path);
        }
        return d;
    }

    inline corpus::EmbeddingTable embeddings_for(const std::optional<std::string>& path, const corpus::Vocabulary& vocab,
                                                 std::size_t dim, const RunConfig& cfg, RunManifest& m) {
        if (!path) return corpus::random_embeddings(vocab, dim, cfg.seed, cfg.embedding_range);
        m.add_input(*path);
        return corpus::load_embeddings(*path, vocab, dim, cfg.seed);
    }

    struct MatchInputs {
        std::vector<model::ArticleEntry> store;
        std::unordered_map<std::string, std::size_t> index;
    };

    inline MatchInputs match_inputs(const Dataset& d, std::size_t article_length) {
        MatchInputs in;
        in.store = training::build_article_store(d.parsed, d.vocab, article_length);
        in.index = training::index_articles(in.store);
        return in;
    }

    inline std::vector<corpus::EncodedCase> encode_split(const std::vector<corpus::CaseRecord>& cases,
                                                         const RunConfig& cfg, const corpus::Vocabulary& vocab,
                                                         std::size_t fact_length, const MatchInputs& in) {
        const auto tokenizer = corpus::make_tokenizer(cfg.tokenizer);
        return training::encode_cases(cases, *tokenizer, vocab, fact_length, in.index);
    }

    inline void write_metrics_atomic(const std::string& path, const std::vector<training::NamedMetrics>& rows) {
        binary::write_file_atomic(path, [&](std::ostream& os) { training::write_metrics_csv(os, rows); });
    }

    // ---- commands ------------------------------------------------------------

    struct GenSyntheticArgs {
        std::string out;
    };

    inline void gen_synthetic(const GenSyntheticArgs& a, const RunConfig& cfg, RunManifest& m, std::ostream& log) {
        ensure_dir(a.out);
        const auto s = corpus::generate_synthetic(cfg.synthetic);
        const auto articles = join_path(a.out, "articles.jsonl"), cases = join_path(a.out, "cases.jsonl");
        const auto clauses = join_path(a.out, "clauses.jsonl"), lexicon = join_path(a.out, "lexicon.txt");
        write_jsonl_atomic(articles, s.articles);
        write_jsonl_atomic(cases, s.cases);
        write_jsonl_atomic(clauses, s.clauses);
        std::ostringstream lex;
        parser::write_lexicon(lex, parser::default_lexicon());
        write_text_atomic(lexicon, lex.str());
        m.outputs = {articles, cases, clauses, lexicon};
        log << "generated " << s.articles.size() << " articles, " << s.cases.size() << " cases, " << s.clauses.size()
            << " labeled clauses in " << a.out << "\n";
    }

    struct ParseArticlesArgs {
        std::string articles;
        std::string lexicon;
        std::optional<std::string> forest;
        std::optional<std::string> train;
        std::optional<std::string> save_forest;
        std::string out;
    };

    inline json coverage_report(const std::vector<parser::ParsedArticle>& parsed) {
        std::size_t clauses = 0;
        std::map<std::string, std::size_t> labels{{"premise", 0}, {"conclusion", 0}, {"unknown", 0}};
        json definition_only = json::array();
        for (const auto& p : parsed) {
            clauses += p.clauses.size();
            for (const auto& c : p.clauses) ++labels[parser::to_string(c.label)];
            if (p.definition_only()) definition_only.push_back(p.article_id);
        }
        return json{{"articles", parsed.size()},
                    {"clauses", clauses},
                    {"labels", labels},
                    {"definition_only", definition_only}};
    }

    inline void parse_articles(const ParseArticlesArgs& a, const RunConfig& cfg, RunManifest& m, std::ostream& log) {
        if (!fs::exists(a.lexicon)) throw InputError("lexicon not found: " + a.lexicon);
        if (a.forest.has_value() == a.train.has_value()) {
            throw InputError("parse-articles needs exactly one of --forest and --train");
        }
        const auto tokenizer = corpus::make_tokenizer(cfg.tokenizer);
        const auto stop = stopwords_of(cfg, m);
        m.add_input(a.lexicon);
        const auto lex = parser::load_lexicon(a.lexicon);
        m.add_input(a.articles);
        const auto articles = corpus::read_articles(a.articles);

        parser::RandomForest forest;
        if (a.train) {
            m.add_input(*a.train);
            const auto examples = corpus::read_jsonl<corpus::LabeledClauseRecord>(*a.train, corpus::labeled_clause_from_json);
            forest = parser::train_clause_classifier(examples, lex, *tokenizer, stop, cfg.forest);
            log << "trained a " << forest.size() << "-tree forest on " << examples.size() << " clauses (training accuracy "
                << parser::clause_accuracy(forest, examples, lex, *tokenizer, stop) << ")\n";
            if (a.save_forest) {
                parser::save_forest(*a.save_forest, forest);
                m.outputs.push_back(*a.save_forest);
            }
        } else {
            m.add_input(*a.forest);
            forest = parser::load_forest(*a.forest);
            if (forest.width() != parser::feature_width(lex)) {
                throw CompatibilityError("forest was trained with a different lexicon (feature width " +
                                         std::to_string(forest.width()) + ", lexicon gives " +
                                         std::to_string(parser::feature_width(lex)) + ")");
            }
        }

        std::vector<parser::ParsedArticle> parsed;
        for (const auto& art : articles) parsed.push_back(parser::parse_article(art, lex, forest, *tokenizer, stop));
        write_jsonl_atomic(a.out, parsed);
        const auto report = coverage_report(parsed);
        const auto report_path = a.out + ".report.json";
        write_text_atomic(report_path, report.dump(2) + "\n");
        m.outputs.push_back(a.out);
        m.outputs.push_back(report_path);
        log << "parsed " << parsed.size() << " articles into " << report["clauses"] << " clauses "
            << report["labels"].dump() << "; " << report["definition_only"].size() << " definition-only\n";
    }

    struct BuildDatasetArgs {
        std::string cases;
        std::string parsed;
        std::string out;
    };

    inline void build_dataset(const BuildDatasetArgs& a, const RunConfig& cfg, RunManifest& m, std::ostream& log) {
        const auto tokenizer = corpus::make_tokenizer(cfg.tokenizer);
        const auto stop = stopwords_of(cfg, m);
        m.add_input(a.parsed);
        const auto parsed = parser::read_parsed_articles(a.parsed, *tokenizer, stop);
        m.add_input(a.cases);
        const auto cases = corpus::read_cases(a.cases);
        const auto vocab = training::build_match_vocab(parsed, cases, *tokenizer, cfg.min_count);
        // resolve every article reference now so that bad ids surface here
        const auto store = training::build_article_store(parsed, vocab, 1);
        training::encode_cases(cases, *tokenizer, vocab, 1, training::index_articles(store));

        const auto split = corpus::split_dataset(cases, cfg.split, cfg.seed);
        ensure_dir(a.out);
        const auto vocab_path = join_path(a.out, "vocab.tsv");
        binary::write_file_atomic(vocab_path, [&](std::ostream& os) { vocab.save(os); });
        m.outputs.push_back(vocab_path);
        for (auto [name, part] : {std::pair{"train", &split.train}, {"validation", &split.validation}, {"test", &split.test}}) {
            const auto path = join_path(a.out, std::string(name) + ".jsonl");
            write_jsonl_atomic(path, *part);
            m.outputs.push_back(path);
        }
        log << "vocabulary " << vocab.size() << " tokens; split " << split.train.size() << "/" << split.validation.size()
            << "/" << split.test.size() << " cases\n";
    }

    struct TrainEmbeddingsArgs {
        std::string dataset;
        std::string parsed;
        std::string out;
    };

    inline void train_embeddings(const TrainEmbeddingsArgs& a, const RunConfig& cfg, RunManifest& m, std::ostream& log) {
        const auto d = load_dataset(a.dataset, a.parsed, cfg, m);
        const auto tokenizer = corpus::make_tokenizer(cfg.tokenizer);
        std::vector<std::vector<std::size_t>> sentences;
        auto add = [&](const std::vector<std::string>& tokens) {
            std::vector<std::size_t> ids;
            for (const auto& t : tokens) ids.push_back(d.vocab.id(t));
            if (!ids.empty()) sentences.push_back(std::move(ids));
        };
        for (const auto& p : d.parsed) add(p.tokens);
        for (const auto* part : {&d.train, &d.validation, &d.test}) {
            for (const auto& c : *part) {
                for (const auto& f : c.facts) add(tokenizer->tokenize(f));
            }
        }
        const auto result = corpus::train_cbow(sentences, d.vocab, cfg.cbow);
        binary::write_file_atomic(a.out, [&](std::ostream& os) { corpus::save_embeddings(os, d.vocab, result.table); });
        m.outputs.push_back(a.out);
        log << "trained " << cfg.cbow.dim << "-d CBOW vectors for " << d.vocab.size() << " tokens; final loss "
            << (result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back()) << "\n";
    }

    struct TrainMatcherArgs {
        std::string dataset;
        std::string parsed;
        std::optional<std::string> embeddings;
        std::optional<std::string> crime;
        bool coarse = false;
        std::string out;
    };

    inline std::vector<corpus::CaseRecord> filter_crime(const std::vector<corpus::CaseRecord>& cases,
                                                        const std::optional<std::string>& crime) {
        if (!crime) return cases;
        std::vector<corpus::CaseRecord> out;
        for (const auto& c : cases) {
            if (c.crime.empty() || c.crime == *crime) out.push_back(c);
        }
        return out;
    }

    inline void train_matcher(const TrainMatcherArgs& a, const RunConfig& cfg, RunManifest& m, std::ostream& log) {
        const auto d = load_dataset(a.dataset, a.parsed, cfg, m);
        auto model_cfg = cfg.model;
        if (a.coarse) model_cfg.fact_length = cfg.paragraph_length;
        const auto in = match_inputs(d, model_cfg.article_length);
        auto encode = [&](const std::vector<corpus::CaseRecord>& part) {
            auto enc = encode_split(filter_crime(part, a.crime), cfg, d.vocab, cfg.model.fact_length, in);
            return a.coarse ? training::paragraph_cases(enc, d.vocab, cfg.paragraph_length) : enc;
        };
        const auto train = encode(d.train), val = encode(d.validation), test = encode(d.test);
        if (train.empty() || val.empty()) {
            throw InputError("no cases left for training" + (a.crime ? " with crime " + *a.crime : std::string()));
        }

        model::MatchModel model(model_cfg, embeddings_for(a.embeddings, d.vocab, model_cfg.embedding_dim, cfg, m),
                                cfg.seed);
        const auto result = training::train(model, train, val, in.store, cfg.train, [&](const training::EpochRecord& e) {
            log << "epoch " << e.epoch << " loss " << e.train_loss << " val F1 " << e.validation.f1() << "\n";
        });

        ensure_dir(a.out);
        const auto ckpt = join_path(a.out, "model.ckpt"), epochs = join_path(a.out, "epochs.csv");
        const auto metrics = join_path(a.out, "metrics.csv");
        model::save_checkpoint(ckpt, model, d.vocab);
        binary::write_file_atomic(epochs, [&](std::ostream& os) { training::write_epoch_log(os, result.epochs); });
        std::vector<training::NamedMetrics> rows{{"validation", training::evaluate_fine(model, val, in.store)}};
        if (!test.empty()) rows.push_back({"test", training::evaluate_fine(model, test, in.store)});
        write_metrics_atomic(metrics, rows);
        m.outputs = {ckpt, epochs, metrics};
        log << "best epoch " << result.best_epoch << "; " << rows.back().split << " P/R/F1 " << rows.back().metrics.precision()
            << " " << rows.back().metrics.recall() << " " << rows.back().metrics.f1() << "\n";
    }

    struct EvalArgs {
        std::string model;
        std::string dataset;
        std::string parsed;
        std::string split = "test";
        std::string mode = "fine";
        std::optional<double> threshold;
        std::vector<double> sweep;  // thresholds; one row each instead of a single split row
        std::string out;
    };

    inline model::LoadedModel load_matcher(const std::string& path, const corpus::Vocabulary& vocab, RunManifest& m) {
        m.add_input(path);
        auto loaded = model::load_checkpoint(path);
        if (!(loaded.vocab == vocab)) {
            throw CompatibilityError("checkpoint vocabulary differs from the dataset vocabulary: " + path);
        }
        return loaded;
    }

    inline void check_threshold(double t) {
        if (!(t >= 0.0 && t <= 1.0)) throw InputError("threshold must lie in [0, 1]");
    }

    inline const char* threshold_sweep_header = "threshold,P,R,F1,TP,FP,FN";

    inline void eval(const EvalArgs& a, const RunConfig& cfg, RunManifest& m, std::ostream& log) {
        const auto d = load_dataset(a.dataset, a.parsed, cfg, m);
        const auto loaded = load_matcher(a.model, d.vocab, m);
        const auto& mc = loaded.model.config();
        const double threshold = a.threshold.value_or(mc.threshold);
        check_threshold(threshold);
        for (double t : a.sweep) check_threshold(t);
        const auto in = match_inputs(d, mc.article_length);
        std::vector<corpus::EncodedCase> cases = encode_split(d.split(a.split), cfg, d.vocab, mc.fact_length, in);
        std::function<training::Metrics(const training::ScoreTable&, double)> score;
        if (a.mode == "fine") {
            score = [&](const auto& s, double t) { return training::evaluate_fine(s, cases, t); };
        } else if (a.mode == "coarse-union") {
            score = [&](const auto& s, double t) {
                return training::evaluate_coarse(s, cases, t, training::CoarseMode::fine_union);
            };
        } else if (a.mode == "coarse-model") {
            cases = training::paragraph_cases(cases, d.vocab, mc.fact_length);
            score = [&](const auto& s, double t) {
                return training::evaluate_coarse(s, cases, t, training::CoarseMode::coarse_model);
            };
        } else {
            throw InputError("unknown eval mode: " + a.mode + " (expected fine, coarse-union or coarse-model)");
        }
        const auto scores = training::score_pairs(loaded.model, cases, in.store);
        if (!a.sweep.empty()) {
            std::string text = std::string(threshold_sweep_header) + "\n";
            for (double t : a.sweep) text += training::metrics_csv_row(training::format_double(t), score(scores, t)) + "\n";
            write_text_atomic(a.out, text);
            m.outputs = {a.out};
            log << text;
            return;
        }
        const auto metrics = score(scores, threshold);
        write_metrics_atomic(a.out, {{a.split, metrics}});
        m.outputs = {a.out};
        log << training::metrics_csv_header << "\n" << training::metrics_csv_row(a.split, metrics) << "\n";
    }

    struct RecommendArgs {
        std::string model;
        std::string parsed;
        std::string fact;
        std::optional<double> threshold;
        bool all = false;
        std::optional<std::string> vocab;
        std::optional<std::string> out;
    };

    // Scores every article; prints those above the threshold (or all of them)
    // as "id<TAB>p_match", most probable first.
    inline void recommend(const RecommendArgs& a, const RunConfig& cfg, RunManifest& m, std::ostream& out) {
        const auto tokenizer = corpus::make_tokenizer(cfg.tokenizer);
        const auto stop = stopwords_of(cfg, m);
        m.add_input(a.model);
        const auto loaded = model::load_checkpoint(a.model);
        if (a.vocab) {
            m.add_input(*a.vocab);
            if (!(corpus::Vocabulary::load(*a.vocab) == loaded.vocab)) {
                throw CompatibilityError("vocabulary " + *a.vocab + " does not match the checkpoint");
            }
        }
        // the training manifest, when present, records the tokenizer the model was trained with
        const auto trained_with = fs::path(a.model).parent_path() / "manifest.json";
        if (fs::exists(trained_with)) {
            const auto tm = read_manifest(trained_with.string());
            const auto tok = tm.config.value("tokenizer", cfg.tokenizer);
            if (tok != cfg.tokenizer) {
                throw CompatibilityError("checkpoint was trained with tokenizer " + tok + ", not " + cfg.tokenizer);
            }
        }
        m.add_input(a.parsed);
        const auto parsed = parser::read_parsed_articles(a.parsed, *tokenizer, stop);
        const auto& mc = loaded.model.config();
        const double threshold = a.threshold.value_or(mc.threshold);
        check_threshold(threshold);
        const auto store = training::build_article_store(parsed, loaded.vocab, mc.article_length);
        const auto fact = corpus::encode_and_pad(tokenizer->tokenize(a.fact), loaded.vocab, mc.fact_length);
        if (fact.true_length == 0) throw InputError("recommend: the fact is empty");
        const auto fact_levels = loaded.model.patterns(fact, model::Side::fact);
        std::vector<model::Recommendation> recs;
        for (const auto& art : store) {
            const double p = loaded.model.predict(fact, art.tokens, &art.knowledge, nullptr, &fact_levels).p_match;
            if (a.all || p > threshold) recs.push_back({art.id, p});
        }
        std::stable_sort(recs.begin(), recs.end(), [](const auto& x, const auto& y) { return x.p_match > y.p_match; });
        std::ostringstream text;
        for (const auto& r : recs) text << r.id << '\t' << training::format_double(r.p_match) << '\n';
        out << text.str();
        if (a.out) {
            write_text_atomic(*a.out, text.str());
            m.outputs = {*a.out};
        }
    }

    struct DecisionArgs {
        std::string dataset;
        std::string parsed;
        std::optional<std::string> embeddings;
        std::string path = "fine";
        std::string articles = "gold";
        std::optional<std::string> matcher;
        std::string split = "test";
        std::string model;  // eval-decision only
        std::string out;
    };

    // Decision examples for one split, with gold or matcher-predicted
    // correspondences.
    inline std::vector<decision::DecisionExample> decision_examples(const std::vector<corpus::CaseRecord>& part,
                                                                    const Dataset& d, const RunConfig& cfg,
                                                                    const decision::DecisionConfig& dc,
                                                                    const MatchInputs& in,
                                                                    const model::MatchModel* matcher) {
        const auto cases = encode_split(part, cfg, d.vocab, dc.fact_length, in);
        if (!matcher) return decision::make_examples(cases, d.vocab, dc.paragraph_length);
        const auto& mc = matcher->config();
        const auto mstore = training::build_article_store(d.parsed, d.vocab, mc.article_length);
        const auto mcases = encode_split(part, cfg, d.vocab, mc.fact_length, in);
        const auto scores = training::score_pairs(*matcher, mcases, mstore);
        std::vector<std::vector<std::vector<std::size_t>>> predicted(scores.size());
        for (std::size_t c = 0; c < scores.size(); ++c) {
            for (const auto& row : scores[c]) predicted[c].push_back(training::predicted_articles(row, mc.threshold));
        }
        return decision::make_examples(cases, d.vocab, dc.paragraph_length, &predicted);
    }

    inline std::optional<model::LoadedModel> decision_matcher(const DecisionArgs& a, const Dataset& d, RunManifest& m) {
        if (a.articles == "gold") {
            if (a.matcher) throw InputError("--matcher is only used with --articles predicted");
            return std::nullopt;
        }
        if (a.articles != "predicted") throw InputError("unknown article source: " + a.articles + " (expected gold or predicted)");
        if (!a.matcher) throw InputError("--articles predicted needs --matcher");
        return load_matcher(*a.matcher, d.vocab, m);
    }

    inline std::vector<corpus::TokenSequence> article_sequences(const MatchInputs& in) {
        std::vector<corpus::TokenSequence> out;
        for (const auto& e : in.store) out.push_back(e.tokens);
        return out;
    }

    inline void train_decision(const DecisionArgs& a, const RunConfig& cfg, RunManifest& m, std::ostream& log) {
        const auto d = load_dataset(a.dataset, a.parsed, cfg, m);
        const auto path = decision::parse_path(a.path);
        const auto matcher = decision_matcher(a, d, m);
        const auto* mm = matcher ? &matcher->model : nullptr;
        const auto& dc = cfg.decision;
        const auto in = match_inputs(d, dc.article_length);
        const auto train = decision_examples(d.train, d, cfg, dc, in, mm);
        const auto val = decision_examples(d.validation, d, cfg, dc, in, mm);
        const auto test = decision_examples(d.test, d, cfg, dc, in, mm);
        const auto arts = article_sequences(in);

        decision::DecisionModel model(dc, path, embeddings_for(a.embeddings, d.vocab, dc.embedding_dim, cfg, m), cfg.seed);
        const auto result = decision::train_decision(model, train, val, arts, cfg.decision_train,
                                                     [&](const decision::DecisionEpoch& e) {
                                                         log << "epoch " << e.epoch << " loss " << e.train_loss
                                                             << " val macro F1 " << e.val_macro_f1 << "\n";
                                                     });
        ensure_dir(a.out);
        const auto ckpt = join_path(a.out, "decision.ckpt"), epochs = join_path(a.out, "epochs.csv");
        const auto metrics = join_path(a.out, "metrics.csv");
        decision::save_decision_model(ckpt, model);
        binary::write_file_atomic(epochs, [&](std::ostream& os) {
            os << "epoch,train_loss,val_macroF1\n";
            for (const auto& e : result.epochs) {
                os << e.epoch << ',' << training::format_double(e.train_loss) << ','
                   << training::format_double(e.val_macro_f1) << '\n';
            }
        });
        const auto source = a.path + "-" + a.articles;
        const auto row = decision::decision_csv_row(source, decision::evaluate_decision(model, test.empty() ? val : test, arts));
        write_text_atomic(metrics, decision::decision_csv_header() + "\n" + row + "\n");
        m.outputs = {ckpt, epochs, metrics};
        log << "best epoch " << result.best_epoch << "; " << row << "\n";
    }

    inline void eval_decision(const DecisionArgs& a, const RunConfig& cfg, RunManifest& m, std::ostream& log) {
        const auto d = load_dataset(a.dataset, a.parsed, cfg, m);
        m.add_input(a.model);
        const auto model = decision::load_decision_model(a.model);
        if (model.params().at("embedding").value.rows() != d.vocab.size()) {
            throw CompatibilityError("decision checkpoint vocabulary size differs from the dataset vocabulary");
        }
        const auto matcher = decision_matcher(a, d, m);
        const auto& dc = model.config();
        const auto in = match_inputs(d, dc.article_length);
        const auto examples = decision_examples(d.split(a.split), d, cfg, dc, in, matcher ? &matcher->model : nullptr);
        const auto source = decision::to_string(model.path()) + "-" + a.articles;
        const auto row = decision::decision_csv_row(source, decision::evaluate_decision(model, examples, article_sequences(in)));
        write_text_atomic(a.out, decision::decision_csv_header() + "\n" + row + "\n");
        m.outputs = {a.out};
        log << decision::decision_csv_header() << "\n" << row << "\n";
    }

}  // namespace mlmn::cli
