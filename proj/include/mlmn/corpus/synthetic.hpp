#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "mlmn/corpus/records.hpp"
#include "mlmn/util/rng.hpp"

namespace mlmn::corpus {

    // Clause text with a premise/conclusion label, as used to train the
    // article parser.
    struct LabeledClauseRecord {
        std::string text;
        std::string label;  // "premise" | "conclusion"

        bool operator==(const LabeledClauseRecord&) const = default;
    };

    inline json to_json(const LabeledClauseRecord& c) { return json{{"text", c.text}, {"label", c.label}}; }

    inline LabeledClauseRecord labeled_clause_from_json(const json& j) {
        LabeledClauseRecord c{j.at("text").get<std::string>(), j.at("label").get<std::string>()};
        if (c.label != "premise" && c.label != "conclusion") {
            throw InputError("label must be \"premise\" or \"conclusion\"");
        }
        return c;
    }

    struct SyntheticConfig {
        std::uint64_t seed = 7;
        std::size_t n_cases = 400;
        std::size_t n_articles = 20;
        std::size_t keywords_per_article = 3;
        std::size_t keyword_pool = 300;
        std::size_t distractor_pool = 150;
        std::size_t min_facts = 1;
        std::size_t max_facts = 4;
        std::size_t distractors_per_fact = 4;
        double p_no_article = 0.1;
        double p_two_articles = 0.25;
        // chance a fact also carries an incomplete keyword set of a non-gold article
        double p_partial = 0.5;
        std::size_t clause_examples = 400;
        // chance a later fact re-triggers one article already cited in the case
        double p_repeat = 0.0;
        // article severities are drawn from 0..max_severity
        int max_severity = 2;
    };

    struct SyntheticCorpus {
        std::vector<ArticleRecord> articles;
        std::vector<CaseRecord> cases;
        std::vector<std::vector<std::string>> article_keywords;
        std::vector<int> severity;
        std::vector<LabeledClauseRecord> clauses;
        std::vector<std::string> premise_cues;
        std::vector<std::string> conclusion_cues;
    };

    namespace detail {

        inline std::string numbered(const char* prefix, std::size_t i) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i);
            return buf;
        }

        inline std::string join(const std::vector<std::string>& words) {
            std::string out;
            for (const auto& w : words) {
                if (!out.empty()) out += ' ';
                out += w;
            }
            return out;
        }

        inline const std::vector<std::string>& filler_words() {
            static const std::vector<std::string> w{"the", "defendant", "on", "road", "at", "night", "with",
                                                    "vehicle", "victim", "was", "after", "then"};
            return w;
        }

    }  // namespace detail

    inline std::vector<std::string> synthetic_premise_cues() { return {"if", "where", "whoever", "in case"}; }

    inline std::vector<std::string> synthetic_conclusion_cues() {
        return {"shall be sentenced", "shall be punished", "is liable", "shall bear", "imprisonment"};
    }

    // Labeled clause corpus where the class is decided by cue phrases, so it is
    // separable by the default lexicon features.
    inline std::vector<LabeledClauseRecord> generate_clause_corpus(std::uint64_t seed, std::size_t n) {
        Rng rng(seed);
        const auto pcues = synthetic_premise_cues();
        const std::vector<std::string> ccues{"shall be sentenced to", "shall be punished by", "is liable to",
                                             "shall bear"};
        std::vector<LabeledClauseRecord> out;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<std::string> words;
            const std::size_t extra = 2 + rng.below(4);
            for (std::size_t k = 0; k < extra; ++k) words.push_back(detail::numbered("w", rng.below(200)));
            if (rng.bernoulli(0.5)) {
                out.push_back({pcues[rng.below(pcues.size())] + " " + detail::join(words), "premise"});
            } else {
                std::string tail = detail::join(words);
                if (rng.bernoulli(0.5)) tail = "imprisonment of " + std::to_string(1 + rng.below(10)) + " years " + tail;
                out.push_back({ccues[rng.below(ccues.size())] + " " + tail, "conclusion"});
            }
        }
        return out;
    }

    // Generates articles and cases with an oracle label rule: a fact is paired
    // with an article iff the fact contains every keyword of that article.
    // Keyword sets are disjoint. decision = min(4, sum of severities over the
    // case's fact-article pairs).
    inline SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg) {
        if (cfg.n_articles < 2) throw InputError("generate_synthetic: need at least 2 articles");
        if (cfg.keywords_per_article == 0) throw InputError("generate_synthetic: keywords_per_article must be positive");
        if (cfg.n_articles * cfg.keywords_per_article > cfg.keyword_pool) {
            throw InputError("generate_synthetic: keyword pool too small for disjoint keyword sets");
        }
        if (cfg.min_facts == 0 || cfg.max_facts < cfg.min_facts) throw InputError("generate_synthetic: bad fact counts");
        if (cfg.max_severity < 0) throw InputError("generate_synthetic: max_severity must be non-negative");
        if (!(cfg.p_repeat >= 0 && cfg.p_repeat <= 1)) throw InputError("generate_synthetic: p_repeat must lie in [0, 1]");
        Rng rng(cfg.seed);
        SyntheticCorpus out;
        out.premise_cues = synthetic_premise_cues();
        out.conclusion_cues = synthetic_conclusion_cues();

        auto keyword_ids = rng.sample_without_replacement(cfg.keyword_pool, cfg.n_articles * cfg.keywords_per_article);
        const std::vector<std::string> premise_lead{"if", "where", "whoever"};
        for (std::size_t a = 0; a < cfg.n_articles; ++a) {
            std::vector<std::string> kws;
            for (std::size_t k = 0; k < cfg.keywords_per_article; ++k) {
                kws.push_back(detail::numbered("kw", keyword_ids[a * cfg.keywords_per_article + k]));
            }
            const int sev = static_cast<int>(rng.below(static_cast<std::size_t>(cfg.max_severity) + 1));
            std::string text = premise_lead[rng.below(premise_lead.size())] + " the actor " + detail::join(kws) +
                               " , shall be sentenced to imprisonment of " + std::to_string(1 + 3 * sev) + " years";
            if (rng.bernoulli(0.5)) {
                text += " ; where the circumstances are especially serious , shall be punished more severely";
            }
            text += " .";
            out.articles.push_back({detail::numbered("art", a + 1), "synthetic-law", text});
            out.article_keywords.push_back(std::move(kws));
            out.severity.push_back(sev);
        }

        for (std::size_t c = 0; c < cfg.n_cases; ++c) {
            CaseRecord rec;
            rec.case_id = detail::numbered("case", c);
            const std::size_t n_facts = cfg.min_facts + rng.below(cfg.max_facts - cfg.min_facts + 1);
            std::vector<std::size_t> triggered;
            for (std::size_t f = 0; f < n_facts; ++f) {
                const double u = rng.uniform();
                const std::size_t n_gold = u < cfg.p_no_article ? 0 : (u < cfg.p_no_article + cfg.p_two_articles ? 2 : 1);
                auto gold = rng.sample_without_replacement(cfg.n_articles, n_gold);
                if (cfg.p_repeat > 0 && !triggered.empty() && rng.bernoulli(cfg.p_repeat)) {
                    gold = {triggered[rng.below(triggered.size())]};
                }
                triggered.insert(triggered.end(), gold.begin(), gold.end());
                std::vector<std::string> content;
                for (std::size_t a : gold) {
                    content.insert(content.end(), out.article_keywords[a].begin(), out.article_keywords[a].end());
                }
                if (cfg.keywords_per_article > 1 && gold.size() < cfg.n_articles && rng.bernoulli(cfg.p_partial)) {
                    std::size_t other = rng.below(cfg.n_articles);
                    while (std::find(gold.begin(), gold.end(), other) != gold.end()) other = rng.below(cfg.n_articles);
                    const std::size_t take = 1 + rng.below(cfg.keywords_per_article - 1);
                    for (std::size_t idx : rng.sample_without_replacement(cfg.keywords_per_article, take)) {
                        content.push_back(out.article_keywords[other][idx]);
                    }
                }
                for (std::size_t k = 0; k < cfg.distractors_per_fact; ++k) {
                    content.push_back(detail::numbered("dx", rng.below(cfg.distractor_pool)));
                }
                const auto& fill = detail::filler_words();
                for (std::size_t k = 0; k < 3; ++k) content.push_back(fill[rng.below(fill.size())]);
                rng.shuffle(content);
                rec.facts.push_back("the defendant " + detail::join(content));
            }

            // oracle labelling by keyword scan
            std::set<std::string> cited;
            int severity_sum = 0;
            for (std::size_t f = 0; f < rec.facts.size(); ++f) {
                std::set<std::string> words;
                for (std::size_t p = 0, q; p < rec.facts[f].size(); p = q + 1) {
                    q = rec.facts[f].find(' ', p);
                    if (q == std::string::npos) q = rec.facts[f].size();
                    words.insert(rec.facts[f].substr(p, q - p));
                }
                for (std::size_t a = 0; a < cfg.n_articles; ++a) {
                    const auto& kws = out.article_keywords[a];
                    const bool all = std::all_of(kws.begin(), kws.end(), [&](const auto& w) { return words.count(w); });
                    if (all) {
                        rec.pairs.emplace_back(f, out.articles[a].article_id);
                        cited.insert(out.articles[a].article_id);
                        severity_sum += out.severity[a];
                    }
                }
            }
            rec.articles.assign(cited.begin(), cited.end());
            rec.decision = std::min(num_decision_classes - 1, severity_sum);
            rec.crime = "synthetic";
            out.cases.push_back(std::move(rec));
        }
        out.clauses = generate_clause_corpus(mix_seed(cfg.seed, 1), cfg.clause_examples);
        return out;
    }

}  // namespace mlmn::corpus
