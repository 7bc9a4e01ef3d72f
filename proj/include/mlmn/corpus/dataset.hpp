#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mlmn/corpus/records.hpp"
#include "mlmn/corpus/vocabulary.hpp"
#include "mlmn/util/rng.hpp"

namespace mlmn::corpus {

    // Vocabulary ids padded (or truncated) to a fixed length.
    struct TokenSequence {
        std::vector<std::size_t> ids;
        std::size_t true_length = 0;

        std::size_t padded_length() const { return ids.size(); }
        bool operator==(const TokenSequence&) const = default;
    };

    inline TokenSequence encode_and_pad(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                                        std::size_t length) {
        if (length == 0) throw InputError("encode_and_pad: length must be at least 1");
        TokenSequence seq;
        seq.ids.assign(length, pad_id);
        seq.true_length = std::min(tokens.size(), length);
        for (std::size_t i = 0; i < seq.true_length; ++i) seq.ids[i] = vocab.id(tokens[i]);
        return seq;
    }

    inline std::vector<std::string> decode(const TokenSequence& seq, const Vocabulary& vocab) {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < seq.true_length; ++i) out.push_back(vocab.token(seq.ids[i]));
        return out;
    }

    // A case with facts encoded and article ids resolved to store indices.
    struct EncodedCase {
        std::string case_id;
        std::vector<TokenSequence> facts;
        std::vector<std::vector<std::string>> fact_tokens;
        // gold article indices per fact, sorted ascending
        std::vector<std::vector<std::size_t>> fact_articles;
        std::vector<std::size_t> cited;
        int decision = 0;

        bool is_gold(std::size_t fact, std::size_t article) const {
            const auto& g = fact_articles[fact];
            return std::binary_search(g.begin(), g.end(), article);
        }

        std::size_t gold_pair_count() const {
            std::size_t n = 0;
            for (const auto& g : fact_articles) n += g.size();
            return n;
        }
    };

    inline EncodedCase encode_case(const CaseRecord& record, const Tokenizer& tokenizer, const Vocabulary& vocab,
                                   std::size_t fact_length,
                                   const std::unordered_map<std::string, std::size_t>& article_index) {
        validate_case(record);
        EncodedCase c;
        c.case_id = record.case_id;
        c.decision = record.decision;
        c.fact_articles.resize(record.facts.size());
        for (const auto& text : record.facts) {
            auto toks = tokenizer.tokenize(text);
            c.facts.push_back(encode_and_pad(toks, vocab, fact_length));
            c.fact_tokens.push_back(std::move(toks));
        }
        std::set<std::size_t> cited;
        auto resolve = [&](const std::string& id) {
            auto it = article_index.find(id);
            if (it == article_index.end()) {
                throw InputError("case " + record.case_id + ": unknown article id " + id);
            }
            return it->second;
        };
        for (const auto& [f, a] : record.pairs) {
            const std::size_t idx = resolve(a);
            c.fact_articles[f].push_back(idx);
            cited.insert(idx);
        }
        for (const auto& a : record.articles) cited.insert(resolve(a));
        for (auto& g : c.fact_articles) {
            std::sort(g.begin(), g.end());
            g.erase(std::unique(g.begin(), g.end()), g.end());
        }
        c.cited.assign(cited.begin(), cited.end());
        return c;
    }

    // Whole-paragraph view of a case: all facts concatenated into one sequence
    // whose gold articles are the union over facts.
    inline EncodedCase to_paragraph_case(const EncodedCase& c, const Vocabulary& vocab, std::size_t paragraph_length) {
        EncodedCase p;
        p.case_id = c.case_id;
        p.decision = c.decision;
        std::vector<std::string> tokens;
        std::set<std::size_t> gold;
        for (std::size_t f = 0; f < c.fact_tokens.size(); ++f) {
            tokens.insert(tokens.end(), c.fact_tokens[f].begin(), c.fact_tokens[f].end());
            gold.insert(c.fact_articles[f].begin(), c.fact_articles[f].end());
        }
        p.facts.push_back(encode_and_pad(tokens, vocab, paragraph_length));
        p.fact_tokens.push_back(std::move(tokens));
        p.fact_articles.emplace_back(gold.begin(), gold.end());
        p.cited = c.cited;
        return p;
    }

    struct SplitFractions {
        double train = 0.8;
        double validation = 0.1;
        double test = 0.1;
    };

    template <class T>
    struct DatasetSplit {
        std::vector<T> train;
        std::vector<T> validation;
        std::vector<T> test;
    };

    // Case-granularity split: sizes floor(train*N), floor(validation*N) and the
    // remainder, after a seeded shuffle.
    template <class T>
    DatasetSplit<T> split_dataset(std::vector<T> items, SplitFractions fractions, std::uint64_t seed) {
        const double total = fractions.train + fractions.validation + fractions.test;
        if (std::abs(total - 1.0) > 1e-9 || fractions.train < 0 || fractions.validation < 0 || fractions.test < 0) {
            throw InputError("split fractions must be non-negative and sum to 1");
        }
        if (items.size() < 3) throw InputError("split_dataset: need at least 3 cases");
        Rng rng(seed);
        rng.shuffle(items);
        const std::size_t n = items.size();
        const auto n_train = static_cast<std::size_t>(std::floor(fractions.train * static_cast<double>(n) + 1e-9));
        const auto n_val = static_cast<std::size_t>(std::floor(fractions.validation * static_cast<double>(n) + 1e-9));
        DatasetSplit<T> s;
        auto first = std::make_move_iterator(items.begin());
        s.train.assign(first, first + static_cast<std::ptrdiff_t>(n_train));
        s.validation.assign(first + static_cast<std::ptrdiff_t>(n_train),
                            first + static_cast<std::ptrdiff_t>(n_train + n_val));
        s.test.assign(first + static_cast<std::ptrdiff_t>(n_train + n_val), std::make_move_iterator(items.end()));
        return s;
    }

    // (fact, article) pair drawn from a case list; label 1 iff gold.
    struct MatchExample {
        std::size_t case_index = 0;
        std::size_t fact_index = 0;
        std::size_t article = 0;
        int label = 0;

        bool operator==(const MatchExample&) const = default;
    };

    inline std::vector<MatchExample> positive_examples(const std::vector<EncodedCase>& cases) {
        std::vector<MatchExample> out;
        for (std::size_t c = 0; c < cases.size(); ++c) {
            for (std::size_t f = 0; f < cases[c].fact_articles.size(); ++f) {
                for (std::size_t a : cases[c].fact_articles[f]) out.push_back({c, f, a, 1});
            }
        }
        return out;
    }

    enum class NegativeScope {
        per_fact,   // each fact draws ratio x (its positives in the batch) from its own non-gold pool
        per_batch,  // ratio x (batch positives) drawn from the union of the batch facts' non-gold pairs
    };

    // Negative pairs for one batch of positives. Counts are round(ratio * k),
    // capped by the pool; draws are uniform without replacement.
    inline std::vector<MatchExample> sample_negatives(std::span<const MatchExample> positives,
                                                      const std::vector<EncodedCase>& cases, std::size_t n_articles,
                                                      double ratio, Rng& rng,
                                                      NegativeScope scope = NegativeScope::per_fact) {
        if (ratio < 0) throw InputError("negative ratio must be non-negative");
        std::vector<MatchExample> out;
        if (ratio == 0 || positives.empty()) return out;

        // facts in order of first appearance, with their positive counts
        std::vector<std::pair<std::size_t, std::size_t>> facts;
        std::map<std::pair<std::size_t, std::size_t>, std::size_t> counts;
        for (const auto& p : positives) {
            auto key = std::make_pair(p.case_index, p.fact_index);
            if (counts[key]++ == 0) facts.push_back(key);
        }
        auto pool_of = [&](std::size_t c, std::size_t f) {
            std::vector<std::size_t> pool;
            for (std::size_t a = 0; a < n_articles; ++a) {
                if (!cases[c].is_gold(f, a)) pool.push_back(a);
            }
            return pool;
        };

        if (scope == NegativeScope::per_fact) {
            for (const auto& key : facts) {
                const auto pool = pool_of(key.first, key.second);
                const auto want = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(counts[key])));
                for (std::size_t idx : rng.sample_without_replacement(pool.size(), want)) {
                    out.push_back({key.first, key.second, pool[idx], 0});
                }
            }
            return out;
        }

        std::vector<MatchExample> pool;
        for (const auto& key : facts) {
            for (std::size_t a : pool_of(key.first, key.second)) pool.push_back({key.first, key.second, a, 0});
        }
        const auto want = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(positives.size())));
        for (std::size_t idx : rng.sample_without_replacement(pool.size(), want)) out.push_back(pool[idx]);
        return out;
    }

}  // namespace mlmn::corpus
