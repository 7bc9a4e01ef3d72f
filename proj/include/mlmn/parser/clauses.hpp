#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mlmn/corpus/stopwords.hpp"
#include "mlmn/corpus/tokenizer.hpp"
#include "mlmn/errors.hpp"

namespace mlmn::parser {

    enum class ClauseLabel { premise = 0, conclusion = 1, unknown = 2 };

    inline std::string to_string(ClauseLabel l) {
        switch (l) {
            case ClauseLabel::premise: return "premise";
            case ClauseLabel::conclusion: return "conclusion";
            default: return "unknown";
        }
    }

    inline ClauseLabel parse_label(const std::string& s) {
        if (s == "premise") return ClauseLabel::premise;
        if (s == "conclusion") return ClauseLabel::conclusion;
        if (s == "unknown") return ClauseLabel::unknown;
        throw InputError("unknown clause label: " + s);
    }

    struct Clause {
        std::string text;  // trimmed, delimiter excluded
        // byte span in the article text, trailing delimiter included; the
        // spans of one article tile it exactly
        std::size_t byte_begin = 0;
        std::size_t byte_end = 0;
        // span in the concatenated article tokens (filled by tokenize_clauses)
        std::size_t word_begin = 0;
        std::size_t word_end = 0;
        std::vector<std::string> tokens;
        ClauseLabel label = ClauseLabel::unknown;
    };

    struct ClauseSplitConfig {
        std::vector<std::string> delimiters{"，", "；", "：", "、", "。", ",", ";", ":", "."};
        // a chain of 、-separated items is one enumeration when any item
        // contains one of these
        std::vector<std::string> conjunctions{"或者", "或", "以及", "及", "和", "与", "or", "and"};
    };

    namespace detail {

        inline bool ascii_alnum(char c) {
            return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
        }

        inline bool ascii_digit(char c) { return c >= '0' && c <= '9'; }

        // "一" .. "十", digits, optionally wrapped in ( ) or （ ）
        inline bool is_enumeration_marker(std::string_view s) {
            const std::string t = corpus::trim(s);
            std::string_view v = t;
            for (auto [open, close] : {std::pair<std::string_view, std::string_view>{"(", ")"}, {"（", "）"}}) {
                if (v.size() > open.size() + close.size() && v.starts_with(open) && v.ends_with(close)) {
                    v = v.substr(open.size(), v.size() - open.size() - close.size());
                    break;
                }
            }
            if (v.empty()) return false;
            if (std::all_of(v.begin(), v.end(), ascii_digit)) return true;
            static const std::u32string numerals = U"零一二三四五六七八九十百";
            std::size_t pos = 0;
            while (pos < v.size()) {
                if (numerals.find(corpus::next_code_point(v, pos)) == std::u32string::npos) return false;
            }
            return true;
        }

    }  // namespace detail

    // Occurrence of `word` in `text` not glued to ASCII letters or digits on
    // either side, so "if" does not fire inside "life".
    inline bool contains_term(std::string_view text, std::string_view word) {
        if (word.empty()) return false;
        for (std::size_t p = text.find(word); p != std::string_view::npos; p = text.find(word, p + 1)) {
            const bool left_ok = p == 0 || !detail::ascii_alnum(text[p - 1]) || !detail::ascii_alnum(word.front());
            const std::size_t e = p + word.size();
            const bool right_ok = e == text.size() || !detail::ascii_alnum(text[e]) || !detail::ascii_alnum(word.back());
            if (left_ok && right_ok) return true;
        }
        return false;
    }

    // Splits article text into clauses at clause-level punctuation. Exceptions:
    // ASCII , . : between digits; a delimiter right after a bare ordinal
    // marker ("一、", "1."); 、 inside an enumeration chain. Whitespace-only
    // pieces are merged into the previous clause.
    inline std::vector<Clause> split_clauses(std::string_view text, const ClauseSplitConfig& cfg = {}) {
        struct Cut {
            std::size_t begin, end;
            bool enum_comma;
        };
        auto delims = cfg.delimiters;
        std::sort(delims.begin(), delims.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });

        std::vector<Cut> cuts;
        std::size_t pos = 0, piece_begin = 0;
        while (pos < text.size()) {
            const std::string* hit = nullptr;
            for (const auto& d : delims) {
                if (!d.empty() && text.substr(pos, d.size()) == d) {
                    hit = &d;
                    break;
                }
            }
            if (!hit) {
                corpus::next_code_point(text, pos);
                continue;
            }
            const std::size_t end = pos + hit->size();
            bool split = true;
            if (hit->size() == 1 && pos > 0 && end < text.size() && detail::ascii_digit(text[pos - 1]) &&
                detail::ascii_digit(text[end])) {
                split = false;
            } else if ((*hit == "、" || *hit == ".") && detail::is_enumeration_marker(text.substr(piece_begin, pos - piece_begin))) {
                split = false;
            }
            if (split) {
                cuts.push_back({pos, end, *hit == "、"});
                piece_begin = end;
            }
            pos = end;
        }

        // drop 、 cuts belonging to an enumeration chain
        auto piece = [&](std::size_t k) {
            const std::size_t b = k == 0 ? 0 : cuts[k - 1].end;
            const std::size_t e = k < cuts.size() ? cuts[k].begin : text.size();
            return text.substr(b, e - b);
        };
        std::vector<bool> keep(cuts.size(), true);
        for (std::size_t i = 0; i < cuts.size();) {
            if (!cuts[i].enum_comma) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j + 1 < cuts.size() && cuts[j + 1].enum_comma) ++j;
            bool enumeration = false;
            for (std::size_t k = i; k <= j + 1 && !enumeration; ++k) {
                for (const auto& c : cfg.conjunctions) {
                    if (contains_term(piece(k), c)) {
                        enumeration = true;
                        break;
                    }
                }
            }
            if (enumeration) std::fill(keep.begin() + static_cast<std::ptrdiff_t>(i), keep.begin() + static_cast<std::ptrdiff_t>(j + 1), false);
            i = j + 1;
        }

        std::vector<Clause> out;
        std::size_t begin = 0;       // start of the pending span
        std::size_t text_begin = 0;  // start of the pending clause text
        auto emit = [&](std::size_t text_end, std::size_t span_end) {
            std::string t = corpus::trim(text.substr(text_begin, text_end - text_begin));
            text_begin = span_end;
            if (t.empty()) {
                if (!out.empty()) {
                    out.back().byte_end = span_end;
                    begin = span_end;
                }
                return;  // otherwise the span is carried into the next clause
            }
            Clause c;
            c.text = std::move(t);
            c.byte_begin = begin;
            c.byte_end = span_end;
            out.push_back(std::move(c));
            begin = span_end;
        };
        for (std::size_t k = 0; k < cuts.size(); ++k) {
            if (keep[k]) emit(cuts[k].begin, cuts[k].end);
        }
        if (begin < text.size()) emit(text.size(), text.size());
        if (out.empty()) {
            Clause c;
            c.text = corpus::trim(text);
            c.byte_end = text.size();
            out.push_back(std::move(c));
        } else if (out.back().byte_end < text.size()) {
            out.back().byte_end = text.size();
        }
        return out;
    }

    // Tokenizes each clause (stop words removed) and assigns consecutive word
    // spans over the concatenated article tokens.
    inline std::vector<std::string> tokenize_clauses(std::vector<Clause>& clauses, const corpus::Tokenizer& tokenizer,
                                                     const corpus::StopWords& stop = {}) {
        std::vector<std::string> all;
        for (auto& c : clauses) {
            c.tokens = corpus::remove_stopwords(tokenizer.tokenize(c.text), stop);
            c.word_begin = all.size();
            all.insert(all.end(), c.tokens.begin(), c.tokens.end());
            c.word_end = all.size();
        }
        return all;
    }

}  // namespace mlmn::parser
