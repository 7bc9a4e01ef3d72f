#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "mlmn/corpus/tokenizer.hpp"
#include "mlmn/errors.hpp"
#include "mlmn/parser/clauses.hpp"

namespace mlmn::parser {

    // Cue phrases for the two clause classes. File form: UTF-8, one keyword
    // per line under `[premise]` / `[conclusion]` headers.
    struct Lexicon {
        std::vector<std::string> premise;
        std::vector<std::string> conclusion;

        std::size_t size() const { return premise.size() + conclusion.size(); }
        bool operator==(const Lexicon&) const = default;
    };

    inline Lexicon read_lexicon(std::istream& is, const std::string& source = "lexicon") {
        Lexicon lex;
        std::vector<std::string>* section = nullptr;
        std::size_t line_no = 0;
        for (std::string line; std::getline(is, line);) {
            ++line_no;
            line = corpus::trim(line);
            if (line.empty() || line[0] == '#') continue;
            if (line == "[premise]") {
                section = &lex.premise;
            } else if (line == "[conclusion]") {
                section = &lex.conclusion;
            } else if (line.front() == '[') {
                throw InputError(source + " line " + std::to_string(line_no) + ": unknown section " + line);
            } else if (!section) {
                throw InputError(source + " line " + std::to_string(line_no) + ": keyword before any section header");
            } else if (std::find(section->begin(), section->end(), line) == section->end()) {
                section->push_back(line);
            }
        }
        return lex;
    }

    inline Lexicon load_lexicon(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw InputError("cannot read lexicon: " + path);
        return read_lexicon(is, path);
    }

    inline void write_lexicon(std::ostream& os, const Lexicon& lex) {
        os << "[premise]\n";
        for (const auto& w : lex.premise) os << w << '\n';
        os << "[conclusion]\n";
        for (const auto& w : lex.conclusion) os << w << '\n';
    }

    // Built-in cues for Chinese criminal-law articles and the English
    // synthetic articles.
    inline Lexicon default_lexicon() {
        return Lexicon{
            {"的", "如果", "凡", "情节", "数额", "致人", "违反", "明知", "以", "为目的", "if", "where", "whoever",
             "in case"},
            {"处", "判处", "并处", "单处", "有期徒刑", "无期徒刑", "拘役", "管制", "死刑", "罚金", "没收财产",
             "论处", "依照", "从重处罚", "从轻", "减轻", "免除", "shall be sentenced", "shall be punished",
             "is liable", "shall bear", "imprisonment"},
        };
    }

    // Number of trailing non-keyword features.
    inline constexpr std::size_t extra_feature_count = 4;

    inline std::size_t feature_width(const Lexicon& lex) { return lex.size() + extra_feature_count; }

    inline bool has_numeral(std::string_view text) {
        static const std::u32string numerals = U"零一二三四五六七八九十百千万两";
        std::size_t pos = 0;
        while (pos < text.size()) {
            const char32_t cp = corpus::next_code_point(text, pos);
            if ((cp >= '0' && cp <= '9') || numerals.find(cp) != std::u32string::npos) return true;
        }
        return false;
    }

    inline bool has_penalty_unit(std::string_view text) {
        static const std::vector<std::string> units{"年", "个月", "元", "years", "year", "months", "month", "yuan"};
        return std::any_of(units.begin(), units.end(), [&](const auto& u) { return contains_term(text, u); });
    }

    // Feature layout: premise keyword indicators, conclusion keyword
    // indicators, relative position index/(count-1), token count, numeral
    // flag, penalty-unit flag.
    inline std::vector<double> featurize(const Clause& clause, std::size_t index, std::size_t count,
                                         const Lexicon& lex) {
        std::vector<double> f;
        f.reserve(feature_width(lex));
        for (const auto& w : lex.premise) f.push_back(contains_term(clause.text, w) ? 1.0 : 0.0);
        for (const auto& w : lex.conclusion) f.push_back(contains_term(clause.text, w) ? 1.0 : 0.0);
        f.push_back(count > 1 ? static_cast<double>(index) / static_cast<double>(count - 1) : 0.0);
        f.push_back(static_cast<double>(clause.tokens.size()));
        f.push_back(has_numeral(clause.text) ? 1.0 : 0.0);
        f.push_back(has_penalty_unit(clause.text) ? 1.0 : 0.0);
        return f;
    }

}  // namespace mlmn::parser
