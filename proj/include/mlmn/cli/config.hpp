#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "mlmn/corpus/dataset.hpp"
#include "mlmn/corpus/embeddings.hpp"
#include "mlmn/corpus/synthetic.hpp"
#include "mlmn/corpus/tokenizer.hpp"
#include "mlmn/decision/classifier.hpp"
#include "mlmn/model/config.hpp"
#include "mlmn/parser/forest.hpp"
#include "mlmn/training/trainer.hpp"

namespace mlmn::cli {

    using nlohmann::json;

    // Everything a command may need, resolved from defaults, then the config
    // file, then a crime preset, then flags. The top-level seed drives every
    // seeded component.
    struct RunConfig {
        std::uint64_t seed = 1;
        std::string tokenizer = "whitespace-cjk";
        std::string stopwords;  // optional path
        std::size_t min_count = 1;
        corpus::SplitFractions split;
        double embedding_range = 0.05;  // uniform init for words without a pretrained vector
        std::size_t paragraph_length = 200;
        model::ModelConfig model;
        training::TrainConfig train;
        parser::ForestConfig forest;
        corpus::CbowConfig cbow;
        corpus::SyntheticConfig synthetic;
        decision::DecisionConfig decision;
        decision::DecisionTrainConfig decision_train;
    };

    inline json to_json(const RunConfig& c) {
        const auto& f = c.forest;
        const auto& w = c.cbow;
        const auto& s = c.synthetic;
        json train(c.train), decision_train(c.decision_train);
        train.erase("seed");
        decision_train.erase("seed");
        return json{
            {"seed", c.seed},
            {"tokenizer", c.tokenizer},
            {"stopwords", c.stopwords},
            {"min_count", c.min_count},
            {"split", {{"train", c.split.train}, {"validation", c.split.validation}, {"test", c.split.test}}},
            {"embedding_range", c.embedding_range},
            {"paragraph_length", c.paragraph_length},
            {"model", json(c.model)},
            {"train", train},
            {"forest", {{"n_trees", f.n_trees}, {"max_depth", f.max_depth}, {"bootstrap", f.bootstrap}}},
            {"cbow",
             {{"dim", w.dim}, {"window", w.window}, {"negatives", w.negatives}, {"epochs", w.epochs},
              {"learning_rate", w.learning_rate}}},
            {"synthetic",
             {{"n_cases", s.n_cases},
              {"n_articles", s.n_articles},
              {"keywords_per_article", s.keywords_per_article},
              {"keyword_pool", s.keyword_pool},
              {"distractor_pool", s.distractor_pool},
              {"min_facts", s.min_facts},
              {"max_facts", s.max_facts},
              {"distractors_per_fact", s.distractors_per_fact},
              {"p_no_article", s.p_no_article},
              {"p_two_articles", s.p_two_articles},
              {"p_partial", s.p_partial},
              {"clause_examples", s.clause_examples},
              {"p_repeat", s.p_repeat},
              {"max_severity", s.max_severity}}},
            {"decision", json(c.decision)},
            {"decision_train", decision_train},
        };
    }

    inline RunConfig run_config_from_json(const json& j) {
        RunConfig c;
        c.seed = j.at("seed").get<std::uint64_t>();
        c.tokenizer = j.at("tokenizer").get<std::string>();
        c.stopwords = j.at("stopwords").get<std::string>();
        c.min_count = j.at("min_count").get<std::size_t>();
        const auto& sp = j.at("split");
        c.split = {sp.at("train").get<double>(), sp.at("validation").get<double>(), sp.at("test").get<double>()};
        c.embedding_range = j.at("embedding_range").get<double>();
        c.paragraph_length = j.at("paragraph_length").get<std::size_t>();
        c.model = j.at("model").get<model::ModelConfig>();
        c.train = j.at("train").get<training::TrainConfig>();
        const auto& f = j.at("forest");
        c.forest.n_trees = f.at("n_trees").get<std::size_t>();
        c.forest.max_depth = f.at("max_depth").get<std::size_t>();
        c.forest.bootstrap = f.at("bootstrap").get<bool>();
        const auto& w = j.at("cbow");
        c.cbow.dim = w.at("dim").get<std::size_t>();
        c.cbow.window = w.at("window").get<std::size_t>();
        c.cbow.negatives = w.at("negatives").get<std::size_t>();
        c.cbow.epochs = w.at("epochs").get<std::size_t>();
        c.cbow.learning_rate = w.at("learning_rate").get<double>();
        const auto& s = j.at("synthetic");
        auto& o = c.synthetic;
        o.n_cases = s.at("n_cases").get<std::size_t>();
        o.n_articles = s.at("n_articles").get<std::size_t>();
        o.keywords_per_article = s.at("keywords_per_article").get<std::size_t>();
        o.keyword_pool = s.at("keyword_pool").get<std::size_t>();
        o.distractor_pool = s.at("distractor_pool").get<std::size_t>();
        o.min_facts = s.at("min_facts").get<std::size_t>();
        o.max_facts = s.at("max_facts").get<std::size_t>();
        o.distractors_per_fact = s.at("distractors_per_fact").get<std::size_t>();
        o.p_no_article = s.at("p_no_article").get<double>();
        o.p_two_articles = s.at("p_two_articles").get<double>();
        o.p_partial = s.at("p_partial").get<double>();
        o.clause_examples = s.at("clause_examples").get<std::size_t>();
        o.p_repeat = s.at("p_repeat").get<double>();
        o.max_severity = s.at("max_severity").get<int>();
        c.decision = j.at("decision").get<decision::DecisionConfig>();
        c.decision_train = j.at("decision_train").get<decision::DecisionTrainConfig>();

        c.train.seed = c.forest.seed = c.cbow.seed = c.synthetic.seed = c.decision_train.seed = c.seed;
        return c;
    }

    namespace detail {

        // A typo in a config file should fail loudly rather than fall back to a default.
        inline void reject_unknown_keys(const json& patch, const json& known, const std::string& where) {
            if (!patch.is_object()) throw InputError("config: " + (where.empty() ? "root" : where) + " must be an object");
            for (const auto& [key, value] : patch.items()) {
                const std::string path = where.empty() ? key : where + "." + key;
                if (!known.contains(key)) throw InputError("config: unknown key " + path);
                if (known.at(key).is_object()) reject_unknown_keys(value, known.at(key), path);
            }
        }

    }  // namespace detail

    // Crime-domain presets for the negative sampling ratio.
    inline json crime_preset(const std::string& crime) {
        if (crime == "traffic") return json{{"train", {{"negative_ratio", 12.0}}}};
        if (crime == "injuring") return json{{"train", {{"negative_ratio", 5.0}}}};
        throw InputError("unknown crime preset: " + crime + " (expected traffic or injuring)");
    }

    inline RunConfig resolve_config(const json& file_patch, const json& preset_patch, const json& flag_patch) {
        json merged = to_json(RunConfig{});
        const json known = merged;
        for (const json* patch : {&file_patch, &preset_patch, &flag_patch}) {
            if (patch->is_null()) continue;
            detail::reject_unknown_keys(*patch, known, "");
            merged.merge_patch(*patch);
        }
        RunConfig c;
        try {
            c = run_config_from_json(merged);
        } catch (const json::exception& e) {
            throw InputError(std::string("config: ") + e.what());
        }
        corpus::make_tokenizer(c.tokenizer);
        c.model.validate();
        c.train.validate();
        c.decision.validate();
        return c;
    }

}  // namespace mlmn::cli
