#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mlmn/corpus/records.hpp"
#include "mlmn/corpus/stopwords.hpp"
#include "mlmn/corpus/synthetic.hpp"
#include "mlmn/corpus/tokenizer.hpp"
#include "mlmn/parser/clauses.hpp"
#include "mlmn/parser/features.hpp"
#include "mlmn/parser/forest.hpp"
#include "mlmn/parser/knowledge.hpp"

namespace mlmn::parser {

    struct ParsedArticle {
        std::string article_id;
        std::vector<Clause> clauses;
        std::vector<std::string> tokens;  // clause tokens concatenated, stop words removed

        // true for articles with no conclusion clause (pure definitions)
        bool definition_only() const {
            for (const auto& c : clauses) {
                if (c.label == ClauseLabel::conclusion) return false;
            }
            return true;
        }
    };

    inline Clause make_clause(const std::string& text, const corpus::Tokenizer& tokenizer,
                              const corpus::StopWords& stop = {}) {
        Clause c;
        c.text = corpus::trim(text);
        c.byte_end = text.size();
        c.tokens = corpus::remove_stopwords(tokenizer.tokenize(c.text), stop);
        c.word_end = c.tokens.size();
        return c;
    }

    // Labeled standalone clauses carry no article context, so they are
    // featurized as position 0 of 1.
    inline RandomForest train_clause_classifier(const std::vector<corpus::LabeledClauseRecord>& examples,
                                                const Lexicon& lex, const corpus::Tokenizer& tokenizer,
                                                const corpus::StopWords& stop, const ForestConfig& cfg) {
        std::vector<std::vector<double>> x;
        std::vector<int> y;
        for (const auto& e : examples) {
            x.push_back(featurize(make_clause(e.text, tokenizer, stop), 0, 1, lex));
            y.push_back(e.label == "conclusion" ? label_conclusion : label_premise);
        }
        return train_forest(x, y, cfg);
    }

    inline double clause_accuracy(const RandomForest& forest, const std::vector<corpus::LabeledClauseRecord>& examples,
                                  const Lexicon& lex, const corpus::Tokenizer& tokenizer,
                                  const corpus::StopWords& stop = {}) {
        if (examples.empty()) return 0.0;
        std::size_t hit = 0;
        for (const auto& e : examples) {
            const int want = e.label == "conclusion" ? label_conclusion : label_premise;
            hit += forest.predict(featurize(make_clause(e.text, tokenizer, stop), 0, 1, lex)) == want;
        }
        return static_cast<double>(hit) / static_cast<double>(examples.size());
    }

    inline ParsedArticle parse_article(const corpus::ArticleRecord& article, const Lexicon& lex,
                                       const RandomForest& forest, const corpus::Tokenizer& tokenizer,
                                       const corpus::StopWords& stop = {}, const ClauseSplitConfig& split = {}) {
        if (forest.width() != feature_width(lex)) {
            throw CompatibilityError("forest was trained with " + std::to_string(forest.width()) +
                                     " features but the lexicon gives " + std::to_string(feature_width(lex)));
        }
        ParsedArticle p;
        p.article_id = article.article_id;
        p.clauses = split_clauses(article.text, split);
        p.tokens = tokenize_clauses(p.clauses, tokenizer, stop);
        for (std::size_t i = 0; i < p.clauses.size(); ++i) {
            const int label = forest.predict(featurize(p.clauses[i], i, p.clauses.size(), lex));
            p.clauses[i].label = label == label_conclusion ? ClauseLabel::conclusion : ClauseLabel::premise;
        }
        return p;
    }

    inline corpus::json to_json(const ParsedArticle& p) {
        corpus::json clauses = corpus::json::array();
        for (const auto& c : p.clauses) clauses.push_back({{"text", c.text}, {"label", to_string(c.label)}});
        return {{"article_id", p.article_id}, {"clauses", std::move(clauses)}};
    }

    // Rebuilds a parsed article from its JSON form; tokens and word spans are
    // recomputed with the given tokenizer and stop words.
    inline ParsedArticle parsed_article_from_json(const corpus::json& j, const corpus::Tokenizer& tokenizer,
                                                  const corpus::StopWords& stop = {}) {
        ParsedArticle p;
        p.article_id = j.at("article_id").get<std::string>();
        for (const auto& c : j.at("clauses")) {
            Clause clause;
            clause.text = c.at("text").get<std::string>();
            clause.label = parse_label(c.at("label").get<std::string>());
            p.clauses.push_back(std::move(clause));
        }
        p.tokens = tokenize_clauses(p.clauses, tokenizer, stop);
        return p;
    }

    inline std::vector<ParsedArticle> read_parsed_articles(const std::string& path, const corpus::Tokenizer& tokenizer,
                                                           const corpus::StopWords& stop = {}) {
        return corpus::read_jsonl<ParsedArticle>(
            path, [&](const corpus::json& j) { return parsed_article_from_json(j, tokenizer, stop); });
    }

    // Q for a parsed article encoded at the given length.
    inline Tensor knowledge_matrix(const ParsedArticle& p, const corpus::TokenSequence& encoded) {
        return project_knowledge(encoded, p.clauses);
    }

}  // namespace mlmn::parser
