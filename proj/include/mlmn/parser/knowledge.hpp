#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "mlmn/corpus/dataset.hpp"
#include "mlmn/errors.hpp"
#include "mlmn/numerics/tensor.hpp"
#include "mlmn/parser/clauses.hpp"

namespace mlmn::parser {

    // Row given to PAD positions.
    inline constexpr std::array<double, 2> pad_knowledge_row{1.0, 0.0};

    // Q: one row per padded article position, [1,0] for words in premise
    // clauses and [0,1] for words in conclusion clauses.
    inline Tensor project_knowledge(const corpus::TokenSequence& article, const std::vector<Clause>& clauses) {
        const std::size_t n = article.padded_length();
        Tensor q({n, 2});
        for (std::size_t i = 0; i < n; ++i) {
            q.at(i, 0) = pad_knowledge_row[0];
            q.at(i, 1) = pad_knowledge_row[1];
        }
        std::vector<bool> covered(article.true_length, false);
        for (const auto& c : clauses) {
            if (c.word_begin > c.word_end) throw InputError("clause word span is reversed");
            if (c.word_begin == c.word_end) continue;
            if (c.label == ClauseLabel::unknown) throw InputError("cannot project an unlabeled clause: " + c.text);
            const bool premise = c.label == ClauseLabel::premise;
            for (std::size_t i = c.word_begin; i < c.word_end && i < article.true_length; ++i) {
                q.at(i, 0) = premise ? 1.0 : 0.0;
                q.at(i, 1) = premise ? 0.0 : 1.0;
                covered[i] = true;
            }
        }
        for (std::size_t i = 0; i < covered.size(); ++i) {
            if (!covered[i]) throw InputError("article token " + std::to_string(i) + " is not covered by any clause");
        }
        return q;
    }

}  // namespace mlmn::parser
