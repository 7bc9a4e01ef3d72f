#pragma once

#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "mlmn/corpus/tokenizer.hpp"
#include "mlmn/errors.hpp"

namespace mlmn::corpus {

    // Removed from article text only. An empty set removes nothing.
    using StopWords = std::unordered_set<std::string>;

    // One word per line; blank lines and lines starting with '#' are skipped.
    inline StopWords load_stopwords(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw InputError("cannot read stop-word file: " + path);
        StopWords out;
        for (std::string line; std::getline(is, line);) {
            line = trim(line);
            if (!line.empty() && line[0] != '#') out.insert(line);
        }
        return out;
    }

    inline std::vector<std::string> remove_stopwords(std::vector<std::string> tokens, const StopWords& stop) {
        if (stop.empty()) return tokens;
        std::erase_if(tokens, [&](const std::string& t) { return stop.count(t) > 0; });
        return tokens;
    }

}  // namespace mlmn::corpus
