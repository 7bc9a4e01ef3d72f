#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mlmn/corpus/dataset.hpp"
#include "mlmn/corpus/vocabulary.hpp"
#include "mlmn/model/mlmn.hpp"
#include "mlmn/parser/article_parser.hpp"

namespace mlmn::training {

    // Vocabulary over parsed article tokens and tokenized case facts.
    inline corpus::Vocabulary build_match_vocab(const std::vector<parser::ParsedArticle>& articles,
                                                const std::vector<corpus::CaseRecord>& cases,
                                                const corpus::Tokenizer& tokenizer, std::size_t min_count = 1) {
        std::vector<std::vector<std::string>> docs;
        for (const auto& a : articles) docs.push_back(a.tokens);
        for (const auto& c : cases) {
            for (const auto& f : c.facts) docs.push_back(tokenizer.tokenize(f));
        }
        return corpus::build_vocab(docs, min_count);
    }

    inline std::vector<model::ArticleEntry> build_article_store(const std::vector<parser::ParsedArticle>& articles,
                                                                const corpus::Vocabulary& vocab,
                                                                std::size_t article_length) {
        std::vector<model::ArticleEntry> out;
        for (const auto& a : articles) {
            auto seq = corpus::encode_and_pad(a.tokens, vocab, article_length);
            auto q = parser::knowledge_matrix(a, seq);
            out.push_back({a.article_id, std::move(seq), std::move(q)});
        }
        return out;
    }

    inline std::unordered_map<std::string, std::size_t> index_articles(const std::vector<model::ArticleEntry>& store) {
        std::unordered_map<std::string, std::size_t> idx;
        for (std::size_t i = 0; i < store.size(); ++i) {
            if (!idx.emplace(store[i].id, i).second) throw InputError("duplicate article id: " + store[i].id);
        }
        return idx;
    }

    inline std::vector<corpus::EncodedCase> encode_cases(const std::vector<corpus::CaseRecord>& cases,
                                                         const corpus::Tokenizer& tokenizer,
                                                         const corpus::Vocabulary& vocab, std::size_t fact_length,
                                                         const std::unordered_map<std::string, std::size_t>& index) {
        std::vector<corpus::EncodedCase> out;
        out.reserve(cases.size());
        for (const auto& c : cases) out.push_back(corpus::encode_case(c, tokenizer, vocab, fact_length, index));
        return out;
    }

    inline std::vector<corpus::EncodedCase> paragraph_cases(const std::vector<corpus::EncodedCase>& cases,
                                                            const corpus::Vocabulary& vocab,
                                                            std::size_t paragraph_length) {
        std::vector<corpus::EncodedCase> out;
        out.reserve(cases.size());
        for (const auto& c : cases) out.push_back(corpus::to_paragraph_case(c, vocab, paragraph_length));
        return out;
    }

}  // namespace mlmn::training
