#pragma once

#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mlmn/cli/commands.hpp"

namespace mlmn::cli {

    enum ExitCode : int { ok = 0, failure = 1, input_error = 2, numeric_error = 3, compatibility_error = 4 };

    namespace detail {

        // Flags that map onto config keys; unset flags leave the config alone.
        struct Overrides {
            std::optional<std::uint64_t> seed;
            std::optional<std::string> tokenizer;
            std::optional<std::string> stopwords;
            std::optional<std::size_t> epochs;
            std::optional<double> lr;
            std::optional<double> neg_ratio;
            std::optional<std::size_t> batch;
            std::optional<std::size_t> cases;
            std::optional<std::size_t> articles;
            std::optional<double> p_repeat;
            std::optional<int> max_severity;
            std::optional<std::size_t> trees;
            std::optional<std::size_t> dim;

            json patch(const std::string& command) const {
                json p = json::object();
                if (seed) p["seed"] = *seed;
                if (tokenizer) p["tokenizer"] = *tokenizer;
                if (stopwords) p["stopwords"] = *stopwords;
                const bool decision = command == "train-decision";
                const std::string train_key = decision ? "decision_train" : "train";
                if (epochs) p[train_key]["max_epochs"] = *epochs;
                if (lr) p[train_key]["learning_rate"] = *lr;
                if (batch) p[train_key]["batch_size"] = *batch;
                if (neg_ratio) p["train"]["negative_ratio"] = *neg_ratio;
                if (cases) p["synthetic"]["n_cases"] = *cases;
                if (articles) p["synthetic"]["n_articles"] = *articles;
                if (p_repeat) p["synthetic"]["p_repeat"] = *p_repeat;
                if (max_severity) p["synthetic"]["max_severity"] = *max_severity;
                if (trees) p["forest"]["n_trees"] = *trees;
                if (dim) p["cbow"]["dim"] = *dim;
                return p;
            }
        };

        inline json read_config_file(const std::optional<std::string>& path, RunManifest& m) {
            if (!path) return nullptr;
            m.add_input(*path);
            try {
                return json::parse(read_file(*path));
            } catch (const json::exception& e) {
                throw InputError(*path + ": " + e.what());
            }
        }

    }  // namespace detail

    // Runs one command line (without the program name). Diagnostics go to
    // `err`; command output such as recommendations goes to `out`.
    inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
        CLI::App app{"Fine-grained fact-article matching toolkit", "mlmn"};
        app.require_subcommand(0, 1);
        std::optional<std::string> replay;
        app.add_option("--replay", replay, "re-run the command recorded in a manifest");

        std::optional<std::string> config_path, crime;
        detail::Overrides ov;
        auto common = [&](CLI::App* sub) {
            sub->add_option("--config", config_path, "JSON config file");
            sub->add_option("--seed", ov.seed, "seed for every randomized step");
            sub->add_option("--tokenizer", ov.tokenizer, "whitespace or whitespace-cjk");
            sub->add_option("--stopwords", ov.stopwords, "stop-word file applied to article text");
        };

        GenSyntheticArgs gen;
        auto* gen_cmd = app.add_subcommand("gen-synthetic", "write a synthetic corpus with oracle labels");
        common(gen_cmd);
        gen_cmd->add_option("--out", gen.out, "output directory")->required();
        gen_cmd->add_option("--cases", ov.cases);
        gen_cmd->add_option("--articles", ov.articles);
        gen_cmd->add_option("--p-repeat", ov.p_repeat);
        gen_cmd->add_option("--max-severity", ov.max_severity);

        ParseArticlesArgs pa;
        auto* pa_cmd = app.add_subcommand("parse-articles", "split and label article clauses");
        common(pa_cmd);
        pa_cmd->add_option("--articles", pa.articles, "articles JSONL")->required();
        pa_cmd->add_option("--lexicon", pa.lexicon, "premise/conclusion keyword lexicon")->required();
        pa_cmd->add_option("--forest", pa.forest, "trained clause forest (JSON)");
        pa_cmd->add_option("--train", pa.train, "labeled clauses JSONL; trains a forest first");
        pa_cmd->add_option("--save-forest", pa.save_forest, "where to save the trained forest");
        pa_cmd->add_option("--trees", ov.trees);
        pa_cmd->add_option("--out", pa.out, "parsed articles JSONL")->required();

        BuildDatasetArgs bd;
        auto* bd_cmd = app.add_subcommand("build-dataset", "build the vocabulary and the train/validation/test split");
        common(bd_cmd);
        bd_cmd->add_option("--cases", bd.cases, "cases JSONL")->required();
        bd_cmd->add_option("--parsed", bd.parsed, "parsed articles JSONL")->required();
        bd_cmd->add_option("--out", bd.out, "dataset directory")->required();

        TrainEmbeddingsArgs te;
        auto* te_cmd = app.add_subcommand("train-embeddings", "train CBOW word vectors");
        common(te_cmd);
        te_cmd->add_option("--dataset", te.dataset)->required();
        te_cmd->add_option("--parsed", te.parsed)->required();
        te_cmd->add_option("--dim", ov.dim);
        te_cmd->add_option("--out", te.out, "word2vec text file")->required();

        TrainMatcherArgs tm;
        auto* tm_cmd = app.add_subcommand("train-matcher", "train the fact-article matcher");
        common(tm_cmd);
        tm_cmd->add_option("--dataset", tm.dataset)->required();
        tm_cmd->add_option("--parsed", tm.parsed)->required();
        tm_cmd->add_option("--embeddings", tm.embeddings, "pretrained vectors; random when omitted");
        tm_cmd->add_option("--crime", crime, "traffic or injuring");
        tm_cmd->add_flag("--coarse", tm.coarse, "whole-paragraph examples");
        tm_cmd->add_option("--neg-ratio", ov.neg_ratio);
        tm_cmd->add_option("--epochs", ov.epochs);
        tm_cmd->add_option("--lr", ov.lr);
        tm_cmd->add_option("--batch", ov.batch);
        tm_cmd->add_option("--out", tm.out, "run directory")->required();

        EvalArgs ev;
        auto* ev_cmd = app.add_subcommand("eval", "evaluate a matcher checkpoint");
        common(ev_cmd);
        ev_cmd->add_option("--model", ev.model)->required();
        ev_cmd->add_option("--dataset", ev.dataset)->required();
        ev_cmd->add_option("--parsed", ev.parsed)->required();
        ev_cmd->add_option("--split", ev.split);
        ev_cmd->add_option("--mode", ev.mode, "fine, coarse-union or coarse-model");
        ev_cmd->add_option("--threshold", ev.threshold);
        ev_cmd->add_option("--sweep", ev.sweep, "comma-separated thresholds to report")->delimiter(',');
        ev_cmd->add_option("--out", ev.out, "metrics CSV")->required();

        RecommendArgs rc;
        auto* rc_cmd = app.add_subcommand("recommend", "recommend articles for one fact");
        common(rc_cmd);
        rc_cmd->add_option("--model", rc.model)->required();
        rc_cmd->add_option("--parsed", rc.parsed)->required();
        rc_cmd->add_option("--fact", rc.fact)->required();
        rc_cmd->add_option("--threshold", rc.threshold);
        rc_cmd->add_flag("--all", rc.all, "print every article's score");
        rc_cmd->add_option("--vocab", rc.vocab, "vocabulary the caller expects the checkpoint to use");
        rc_cmd->add_option("--out", rc.out);

        DecisionArgs td;
        auto* td_cmd = app.add_subcommand("train-decision", "train the penalty-class predictor");
        common(td_cmd);
        td_cmd->add_option("--dataset", td.dataset)->required();
        td_cmd->add_option("--parsed", td.parsed)->required();
        td_cmd->add_option("--embeddings", td.embeddings);
        td_cmd->add_option("--path", td.path, "fine or coarse");
        td_cmd->add_option("--articles", td.articles, "gold or predicted");
        td_cmd->add_option("--matcher", td.matcher, "matcher checkpoint for predicted articles");
        td_cmd->add_option("--epochs", ov.epochs);
        td_cmd->add_option("--lr", ov.lr);
        td_cmd->add_option("--batch", ov.batch);
        td_cmd->add_option("--out", td.out, "run directory")->required();

        DecisionArgs ed;
        auto* ed_cmd = app.add_subcommand("eval-decision", "evaluate a decision checkpoint");
        common(ed_cmd);
        ed_cmd->add_option("--model", ed.model)->required();
        ed_cmd->add_option("--dataset", ed.dataset)->required();
        ed_cmd->add_option("--parsed", ed.parsed)->required();
        ed_cmd->add_option("--articles", ed.articles, "gold or predicted");
        ed_cmd->add_option("--matcher", ed.matcher);
        ed_cmd->add_option("--split", ed.split);
        ed_cmd->add_option("--out", ed.out, "decision metrics CSV")->required();

        std::vector<std::string> reversed(args.rbegin(), args.rend());
        try {
            app.parse(reversed);
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return ok;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return ok;
        } catch (const CLI::ParseError& e) {
            err << "error: " << e.what() << "\n";
            return input_error;
        }

        try {
            if (replay) {
                if (app.get_subcommands().size() > 0) throw InputError("--replay takes no command");
                const auto recorded = read_manifest(*replay);
                check_inputs_unchanged(recorded);
                return run(recorded.args, out, err);
            }
            if (app.get_subcommands().empty()) {
                out << app.help();
                return input_error;
            }
            const auto* sub = app.get_subcommands().front();
            const std::string command = sub->get_name();

            RunManifest m;
            m.command = command;
            m.args = args;
            m.started = utc_timestamp();
            const json file_patch = detail::read_config_file(config_path, m);
            const json preset_patch = crime ? crime_preset(*crime) : json(nullptr);
            const RunConfig cfg = resolve_config(file_patch, preset_patch, ov.patch(command));
            m.config = to_json(cfg);
            m.seed = cfg.seed;

            std::string manifest_path;
            if (command == "gen-synthetic") {
                gen_synthetic(gen, cfg, m, err);
                manifest_path = join_path(gen.out, "manifest.json");
            } else if (command == "parse-articles") {
                parse_articles(pa, cfg, m, err);
                manifest_path = pa.out + ".manifest.json";
            } else if (command == "build-dataset") {
                build_dataset(bd, cfg, m, err);
                manifest_path = join_path(bd.out, "manifest.json");
            } else if (command == "train-embeddings") {
                train_embeddings(te, cfg, m, err);
                manifest_path = te.out + ".manifest.json";
            } else if (command == "train-matcher") {
                tm.crime = crime;
                train_matcher(tm, cfg, m, err);
                manifest_path = join_path(tm.out, "manifest.json");
            } else if (command == "eval") {
                eval(ev, cfg, m, err);
                manifest_path = ev.out + ".manifest.json";
            } else if (command == "recommend") {
                recommend(rc, cfg, m, out);
                if (rc.out) manifest_path = *rc.out + ".manifest.json";
            } else if (command == "train-decision") {
                train_decision(td, cfg, m, err);
                manifest_path = join_path(td.out, "manifest.json");
            } else if (command == "eval-decision") {
                eval_decision(ed, cfg, m, err);
                manifest_path = ed.out + ".manifest.json";
            }
            if (!manifest_path.empty()) {
                m.finished = utc_timestamp();
                write_manifest(manifest_path, m);
            }
            return ok;
        } catch (const NumericError& e) {
            err << "numeric error: " << e.what() << "\n";
            return numeric_error;
        } catch (const CompatibilityError& e) {
            err << "compatibility error: " << e.what() << "\n";
            return compatibility_error;
        } catch (const InputError& e) {
            err << "input error: " << e.what() << "\n";
            return input_error;
        } catch (const ShapeError& e) {
            err << "input error: " << e.what() << "\n";
            return input_error;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return failure;
        }
    }

}  // namespace mlmn::cli
