#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "mlmn/corpus/vocabulary.hpp"
#include "mlmn/numerics/tensor.hpp"
#include "mlmn/util/rng.hpp"

namespace mlmn::corpus {

    // |V| x d matrix; row 0 (<pad>) is all zeros.
    using EmbeddingTable = Tensor;

    inline EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed,
                                            double range = 0.05) {
        Rng rng(seed);
        EmbeddingTable t({vocab.size(), dim});
        for (std::size_t r = 1; r < vocab.size(); ++r) {
            for (double& v : t.row(r)) v = rng.uniform(-range, range);
        }
        return t;
    }

    // TSV `word<TAB>v1<TAB>...<TAB>vd`. Words outside the vocabulary are
    // ignored; vocabulary words missing from the file keep a seeded uniform
    // initialization in [-0.05, 0.05].
    inline EmbeddingTable load_embeddings(std::istream& is, const Vocabulary& vocab, std::size_t dim,
                                          std::uint64_t seed, const std::string& source = "embeddings") {
        EmbeddingTable t = random_embeddings(vocab, dim, seed);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            std::vector<std::string> fields;
            std::size_t start = 0;
            while (true) {
                const auto tab = line.find('\t', start);
                fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
                if (tab == std::string::npos) break;
                start = tab + 1;
            }
            const std::string where = source + " line " + std::to_string(line_no);
            if (fields.size() != dim + 1) {
                throw InputError(where + ": expected " + std::to_string(dim) + " values, got " +
                                 std::to_string(fields.size() - 1));
            }
            std::vector<double> values(dim);
            for (std::size_t k = 0; k < dim; ++k) {
                try {
                    std::size_t used = 0;
                    values[k] = std::stod(fields[k + 1], &used);
                    if (used != fields[k + 1].size()) throw std::invalid_argument("trailing characters");
                } catch (const std::exception&) {
                    throw InputError(where + ": value " + std::to_string(k + 1) + " is not a number");
                }
                if (!std::isfinite(values[k])) throw InputError(where + ": non-finite value");
            }
            if (!vocab.contains(fields[0])) continue;
            const std::size_t id = vocab.id(fields[0]);
            if (id == pad_id) continue;
            std::copy(values.begin(), values.end(), t.row(id).begin());
        }
        return t;
    }

    inline EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab, std::size_t dim,
                                          std::uint64_t seed) {
        std::ifstream is(path);
        if (!is) throw InputError("cannot read embeddings: " + path);
        return load_embeddings(is, vocab, dim, seed, path);
    }

    inline void save_embeddings(std::ostream& os, const Vocabulary& vocab, const EmbeddingTable& table) {
        os << std::setprecision(17);
        for (std::size_t r = 1; r < vocab.size(); ++r) {
            os << vocab.token(r);
            for (double v : table.row(r)) os << '\t' << v;
            os << '\n';
        }
    }

    inline void save_embeddings(const std::string& path, const Vocabulary& vocab, const EmbeddingTable& table) {
        std::ofstream os(path);
        if (!os) throw InputError("cannot write embeddings: " + path);
        save_embeddings(os, vocab, table);
    }

    struct CbowConfig {
        std::size_t dim = 128;
        std::size_t window = 5;
        std::size_t negatives = 5;
        std::size_t epochs = 5;
        double learning_rate = 0.025;
        std::uint64_t seed = 1;
    };

    struct CbowResult {
        EmbeddingTable table;
        std::vector<double> epoch_loss;  // mean negative-sampling loss per target
    };

    // Word2Vec CBOW with negative sampling: the mean of the context vectors
    // predicts the center word against negatives drawn from unigram^0.75.
    // The learning rate decays linearly to 1e-4 of its start.
    inline CbowResult train_cbow(const std::vector<std::vector<std::size_t>>& sentences, const Vocabulary& vocab,
                                 const CbowConfig& cfg) {
        if (cfg.window < 1) throw InputError("train_cbow: window must be at least 1");
        if (cfg.dim == 0) throw InputError("train_cbow: dimension must be positive");
        const std::size_t V = vocab.size(), d = cfg.dim;
        Rng rng(cfg.seed);

        std::vector<double> in(V * d), out(V * d, 0.0);
        for (std::size_t r = 1; r < V; ++r) {
            for (std::size_t k = 0; k < d; ++k) in[r * d + k] = (rng.uniform() - 0.5) / static_cast<double>(d);
        }

        // cumulative unigram^0.75 distribution over non-pad ids
        std::vector<std::size_t> freq(V, 0);
        std::size_t total_tokens = 0;
        for (const auto& s : sentences) {
            for (std::size_t id : s) {
                if (id == pad_id) continue;
                ++freq[id];
                ++total_tokens;
            }
        }
        std::vector<double> cdf(V, 0.0);
        double z = 0.0;
        for (std::size_t r = 1; r < V; ++r) {
            z += std::pow(static_cast<double>(freq[r]), 0.75);
            cdf[r] = z;
        }
        auto draw_negative = [&]() -> std::size_t {
            const double u = rng.uniform() * z;
            auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            std::size_t id = static_cast<std::size_t>(it - cdf.begin());
            return std::min(id, V - 1);
        };
        auto log_sigmoid = [](double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); };
        auto sigmoid = [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); };

        CbowResult result;
        const double total_steps = static_cast<double>(std::max<std::size_t>(1, total_tokens * cfg.epochs));
        double processed = 0.0;
        std::vector<double> hidden(d), err(d);
        std::vector<std::size_t> context;
        for (std::size_t epoch = 0; epoch < cfg.epochs && z > 0; ++epoch) {
            double loss = 0.0;
            std::size_t targets = 0;
            for (const auto& s : sentences) {
                for (std::size_t pos = 0; pos < s.size(); ++pos) {
                    const std::size_t center = s[pos];
                    if (center == pad_id) continue;
                    const double lr = std::max(cfg.learning_rate * (1.0 - processed / total_steps),
                                               cfg.learning_rate * 1e-4);
                    processed += 1.0;
                    context.clear();
                    const std::size_t lo = pos >= cfg.window ? pos - cfg.window : 0;
                    const std::size_t hi = std::min(s.size(), pos + cfg.window + 1);
                    for (std::size_t c = lo; c < hi; ++c) {
                        if (c != pos && s[c] != pad_id) context.push_back(s[c]);
                    }
                    if (context.empty()) continue;
                    std::fill(hidden.begin(), hidden.end(), 0.0);
                    for (std::size_t c : context) {
                        for (std::size_t k = 0; k < d; ++k) hidden[k] += in[c * d + k];
                    }
                    for (double& h : hidden) h /= static_cast<double>(context.size());
                    std::fill(err.begin(), err.end(), 0.0);
                    for (std::size_t n = 0; n <= cfg.negatives; ++n) {
                        std::size_t target = center;
                        double label = 1.0;
                        if (n > 0) {
                            target = draw_negative();
                            if (target == center) continue;
                            label = 0.0;
                        }
                        double dot = 0.0;
                        for (std::size_t k = 0; k < d; ++k) dot += hidden[k] * out[target * d + k];
                        loss -= label > 0 ? log_sigmoid(dot) : log_sigmoid(-dot);
                        const double g = (label - sigmoid(dot)) * lr;
                        for (std::size_t k = 0; k < d; ++k) {
                            err[k] += g * out[target * d + k];
                            out[target * d + k] += g * hidden[k];
                        }
                    }
                    for (std::size_t c : context) {
                        for (std::size_t k = 0; k < d; ++k) in[c * d + k] += err[k];
                    }
                    ++targets;
                }
            }
            result.epoch_loss.push_back(targets ? loss / static_cast<double>(targets) : 0.0);
        }

        result.table = Tensor({V, d}, std::move(in));
        for (double& v : result.table.row(pad_id)) v = 0.0;
        return result;
    }

    inline double cosine(std::span<const double> a, std::span<const double> b) {
        double ab = 0, aa = 0, bb = 0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            ab += a[k] * b[k];
            aa += a[k] * a[k];
            bb += b[k] * b[k];
        }
        if (aa == 0 || bb == 0) return 0.0;
        return ab / std::sqrt(aa * bb);
    }

}  // namespace mlmn::corpus
