#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "mlmn/errors.hpp"

namespace mlmn::corpus {

    inline constexpr std::size_t pad_id = 0;
    inline constexpr std::size_t unk_id = 1;
    inline constexpr const char* pad_token = "<pad>";
    inline constexpr const char* unk_token = "<unk>";

    class Vocabulary {
    public:
        Vocabulary() {
            add(pad_token, 0);
            add(unk_token, 0);
        }

        std::size_t size() const { return tokens_.size(); }

        std::size_t id(const std::string& token) const {
            auto it = ids_.find(token);
            return it == ids_.end() ? unk_id : it->second;
        }

        bool contains(const std::string& token) const { return ids_.count(token) != 0; }

        const std::string& token(std::size_t id) const { return tokens_.at(id); }
        std::size_t count(std::size_t id) const { return counts_.at(id); }
        const std::vector<std::string>& tokens() const { return tokens_; }
        const std::vector<std::size_t>& counts() const { return counts_; }

        // Appends a token; used when rebuilding from a saved file.
        std::size_t add(const std::string& token, std::size_t count) {
            if (ids_.count(token)) throw InputError("duplicate vocabulary token: " + token);
            ids_.emplace(token, tokens_.size());
            tokens_.push_back(token);
            counts_.push_back(count);
            return tokens_.size() - 1;
        }

        void add_unknown_count(std::size_t n) { counts_[unk_id] += n; }

        bool operator==(const Vocabulary& other) const {
            return tokens_ == other.tokens_ && counts_ == other.counts_;
        }

        // one `token<TAB>count` line per id
        void save(std::ostream& os) const {
            for (std::size_t i = 0; i < tokens_.size(); ++i) os << tokens_[i] << '\t' << counts_[i] << '\n';
        }

        void save(const std::string& path) const {
            std::ofstream os(path);
            if (!os) throw InputError("cannot write vocabulary: " + path);
            save(os);
        }

        static Vocabulary load(std::istream& is) {
            Vocabulary v;
            std::string line;
            std::size_t line_no = 0;
            while (std::getline(is, line)) {
                ++line_no;
                if (line.empty()) continue;
                const auto tab = line.rfind('\t');
                if (tab == std::string::npos) {
                    throw InputError("vocabulary line " + std::to_string(line_no) + ": expected token<TAB>count");
                }
                const std::string tok = line.substr(0, tab);
                std::size_t count = 0;
                try {
                    count = std::stoull(line.substr(tab + 1));
                } catch (const std::exception&) {
                    throw InputError("vocabulary line " + std::to_string(line_no) + ": bad count");
                }
                if (line_no <= 2) {
                    const std::size_t expected = line_no - 1;
                    if (tok != v.tokens_[expected]) {
                        throw InputError("vocabulary must start with reserved tokens <pad>, <unk>");
                    }
                    v.counts_[expected] = count;
                    continue;
                }
                v.add(tok, count);
            }
            return v;
        }

        static Vocabulary load(const std::string& path) {
            std::ifstream is(path);
            if (!is) throw InputError("cannot read vocabulary: " + path);
            return load(is);
        }

    private:
        std::vector<std::string> tokens_;
        std::vector<std::size_t> counts_;
        std::unordered_map<std::string, std::size_t> ids_;
    };

    // Tokens with frequency >= min_count get dense ids in order of frequency
    // (descending) then lexicographic; the rest fold into <unk>.
    inline Vocabulary build_vocab(const std::vector<std::vector<std::string>>& documents, std::size_t min_count = 1) {
        std::map<std::string, std::size_t> freq;
        std::size_t total = 0;
        for (const auto& doc : documents) {
            for (const auto& tok : doc) {
                if (tok == pad_token || tok == unk_token) continue;
                ++freq[tok];
                ++total;
            }
        }
        if (total == 0) throw InputError("build_vocab: empty corpus");
        std::vector<std::pair<std::string, std::size_t>> entries(freq.begin(), freq.end());
        std::stable_sort(entries.begin(), entries.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        Vocabulary v;
        std::size_t folded = 0;
        for (const auto& [tok, n] : entries) {
            if (n >= min_count) {
                v.add(tok, n);
            } else {
                folded += n;
            }
        }
        v.add_unknown_count(folded);
        return v;
    }

}  // namespace mlmn::corpus
