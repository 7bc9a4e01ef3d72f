#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mlmn/errors.hpp"

namespace mlmn::corpus {

    // Decodes one UTF-8 code point starting at s[pos]; advances pos. Invalid
    // bytes decode as themselves so tokenization never fails on bad input.
    inline char32_t next_code_point(std::string_view s, std::size_t& pos) {
        const auto b0 = static_cast<unsigned char>(s[pos]);
        std::size_t len = 1;
        char32_t cp = b0;
        if (b0 >= 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        } else if (b0 >= 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if (b0 >= 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        }
        if (pos + len > s.size()) {
            pos += 1;
            return b0;
        }
        for (std::size_t k = 1; k < len; ++k) {
            const auto b = static_cast<unsigned char>(s[pos + k]);
            if ((b & 0xC0) != 0x80) {
                pos += 1;
                return b0;
            }
            cp = (cp << 6) | (b & 0x3F);
        }
        pos += len;
        return cp;
    }

    inline bool is_cjk(char32_t cp) {
        return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) || (cp >= 0x3000 && cp <= 0x303F) ||
               (cp >= 0xFF00 && cp <= 0xFFEF) || (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0x20000 && cp <= 0x2A6DF);
    }

    inline bool is_space(char32_t cp) {
        return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' || cp == 0x3000;
    }

    // Pluggable segmentation. Implementations must be deterministic.
    class Tokenizer {
    public:
        virtual ~Tokenizer() = default;
        virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
        virtual std::string name() const = 0;
    };

    // Whitespace tokenization; any CJK code point becomes its own token so
    // unsegmented Chinese text degrades to per-character tokens.
    class WhitespaceCjkTokenizer final : public Tokenizer {
    public:
        std::vector<std::string> tokenize(std::string_view text) const override {
            std::vector<std::string> out;
            std::string current;
            std::size_t pos = 0;
            while (pos < text.size()) {
                const std::size_t start = pos;
                const char32_t cp = next_code_point(text, pos);
                if (is_space(cp)) {
                    if (!current.empty()) out.push_back(std::move(current));
                    current.clear();
                } else if (is_cjk(cp)) {
                    if (!current.empty()) out.push_back(std::move(current));
                    current.clear();
                    out.emplace_back(text.substr(start, pos - start));
                } else {
                    current.append(text.substr(start, pos - start));
                }
            }
            if (!current.empty()) out.push_back(std::move(current));
            return out;
        }

        std::string name() const override { return "whitespace-cjk"; }
    };

    // Plain whitespace splitting, for text that is already segmented.
    class WhitespaceTokenizer final : public Tokenizer {
    public:
        std::vector<std::string> tokenize(std::string_view text) const override {
            std::vector<std::string> out;
            std::string current;
            std::size_t pos = 0;
            while (pos < text.size()) {
                const std::size_t start = pos;
                const char32_t cp = next_code_point(text, pos);
                if (is_space(cp)) {
                    if (!current.empty()) out.push_back(std::move(current));
                    current.clear();
                } else {
                    current.append(text.substr(start, pos - start));
                }
            }
            if (!current.empty()) out.push_back(std::move(current));
            return out;
        }

        std::string name() const override { return "whitespace"; }
    };

    inline std::unique_ptr<Tokenizer> make_tokenizer(const std::string& name) {
        if (name == "whitespace") return std::make_unique<WhitespaceTokenizer>();
        if (name == "whitespace-cjk") return std::make_unique<WhitespaceCjkTokenizer>();
        throw InputError("unknown tokenizer: " + name);
    }

    inline const std::vector<std::string>& default_fact_delimiters() {
        static const std::vector<std::string> d{"。", "！", "？", "."};
        return d;
    }

    inline std::string trim(std::string_view s) {
        std::size_t b = 0, e = s.size();
        while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\n' || s[b] == '\r')) ++b;
        while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\n' || s[e - 1] == '\r')) --e;
        return std::string(s.substr(b, e - b));
    }

    // Splits a fact section at sentence terminators. Terminators are dropped,
    // empty fragments skipped, a trailing unterminated fragment kept.
    inline std::vector<std::string> split_facts(std::string_view section,
                                                const std::vector<std::string>& delimiters = default_fact_delimiters()) {
        std::vector<std::string> facts;
        std::size_t start = 0, pos = 0;
        auto flush = [&](std::size_t end) {
            std::string piece = trim(section.substr(start, end - start));
            if (!piece.empty()) facts.push_back(std::move(piece));
        };
        while (pos < section.size()) {
            bool matched = false;
            for (const auto& d : delimiters) {
                if (!d.empty() && section.substr(pos, d.size()) == d) {
                    flush(pos);
                    pos += d.size();
                    start = pos;
                    matched = true;
                    break;
                }
            }
            if (!matched) next_code_point(section, pos);
        }
        flush(section.size());
        return facts;
    }

}  // namespace mlmn::corpus
