#pragma once

#include "mlmn/corpus/synthetic.hpp"
#include "mlmn/corpus/tokenizer.hpp"
#include "mlmn/parser/article_parser.hpp"
#include "mlmn/training/pipeline.hpp"

namespace mlmn::testing {

    // Synthetic corpus run through parser, vocabulary and encoding.
    struct SyntheticFixture {
        corpus::SyntheticCorpus raw;
        corpus::WhitespaceTokenizer tokenizer;
        std::vector<parser::ParsedArticle> parsed;
        corpus::Vocabulary vocab;
        std::vector<model::ArticleEntry> articles;
        std::vector<corpus::EncodedCase> cases;
        corpus::DatasetSplit<corpus::EncodedCase> split;

        SyntheticFixture(const corpus::SyntheticConfig& cfg, std::size_t length, std::uint64_t split_seed = 11) {
            raw = corpus::generate_synthetic(cfg);
            const auto lex = parser::default_lexicon();
            parser::ForestConfig fc;
            fc.n_trees = 20;
            const auto forest = parser::train_clause_classifier(raw.clauses, lex, tokenizer, {}, fc);
            for (const auto& a : raw.articles) parsed.push_back(parser::parse_article(a, lex, forest, tokenizer));
            vocab = training::build_match_vocab(parsed, raw.cases, tokenizer);
            articles = training::build_article_store(parsed, vocab, length);
            cases = training::encode_cases(raw.cases, tokenizer, vocab, length, training::index_articles(articles));
            split = corpus::split_dataset(cases, {}, split_seed);
        }
    };

}  // namespace mlmn::testing
