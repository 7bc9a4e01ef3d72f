#pragma once

#include <cstddef>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mlmn/corpus/tokenizer.hpp"
#include "mlmn/errors.hpp"

namespace mlmn::corpus {

    using json = nlohmann::json;

    inline constexpr int num_decision_classes = 5;

    // One judgment document as read from the cases file.
    struct CaseRecord {
        std::string case_id;
        std::vector<std::string> facts;
        std::vector<std::string> articles;
        std::vector<std::pair<std::size_t, std::string>> pairs;
        int decision = 0;
        std::string crime;

        bool operator==(const CaseRecord&) const = default;
    };

    struct ArticleRecord {
        std::string article_id;
        std::string law;
        std::string text;

        bool operator==(const ArticleRecord&) const = default;
    };

    inline json to_json(const CaseRecord& c) {
        json pairs = json::array();
        for (const auto& [f, a] : c.pairs) pairs.push_back(json::array({f, a}));
        json j{{"case_id", c.case_id}, {"facts", c.facts}, {"articles", c.articles}, {"pairs", pairs},
               {"decision", c.decision}};
        if (!c.crime.empty()) j["crime"] = c.crime;
        return j;
    }

    inline json to_json(const ArticleRecord& a) {
        return json{{"article_id", a.article_id}, {"law", a.law}, {"text", a.text}};
    }

    // Validates the case invariants that do not need the article store.
    inline void validate_case(const CaseRecord& c) {
        if (c.decision < 0 || c.decision >= num_decision_classes) {
            throw InputError("case " + c.case_id + ": decision must be in 0..4");
        }
        for (const auto& [f, a] : c.pairs) {
            if (f >= c.facts.size()) {
                throw InputError("case " + c.case_id + ": pair references fact " + std::to_string(f) +
                                 " but the case has " + std::to_string(c.facts.size()) + " facts");
            }
        }
    }

    inline CaseRecord case_from_json(const json& j) {
        CaseRecord c;
        c.case_id = j.at("case_id").get<std::string>();
        if (j.contains("facts")) {
            c.facts = j.at("facts").get<std::vector<std::string>>();
        } else if (j.contains("fact_section")) {
            c.facts = split_facts(j.at("fact_section").get<std::string>());
        } else {
            throw InputError("missing \"facts\"");
        }
        c.articles = j.value("articles", std::vector<std::string>{});
        for (const auto& p : j.value("pairs", json::array())) {
            if (!p.is_array() || p.size() != 2) throw InputError("pairs entries must be [fact_idx, article_id]");
            c.pairs.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::string>());
        }
        c.decision = j.value("decision", 0);
        c.crime = j.value("crime", std::string{});
        validate_case(c);
        return c;
    }

    inline ArticleRecord article_from_json(const json& j) {
        ArticleRecord a;
        a.article_id = j.at("article_id").get<std::string>();
        a.law = j.value("law", std::string{});
        a.text = j.at("text").get<std::string>();
        return a;
    }

    // Reads a JSON Lines file; schema violations name the offending line.
    template <class T>
    std::vector<T> read_jsonl(const std::string& path, const std::function<T(const json&)>& parse) {
        std::ifstream is(path);
        if (!is) throw InputError("cannot read " + path);
        std::vector<T> out;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            try {
                out.push_back(parse(json::parse(line)));
            } catch (const json::exception& e) {
                throw InputError(path + ":" + std::to_string(line_no) + ": " + e.what());
            } catch (const InputError& e) {
                throw InputError(path + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
        return out;
    }

    inline std::vector<CaseRecord> read_cases(const std::string& path) {
        return read_jsonl<CaseRecord>(path, case_from_json);
    }

    inline std::vector<ArticleRecord> read_articles(const std::string& path) {
        return read_jsonl<ArticleRecord>(path, article_from_json);
    }

    template <class T>
    void write_jsonl(const std::string& path, const std::vector<T>& items) {
        std::ofstream os(path);
        if (!os) throw InputError("cannot write " + path);
        for (const auto& item : items) os << to_json(item).dump() << '\n';
    }

}  // namespace mlmn::corpus
