#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mlmn/errors.hpp"

namespace mlmn::model {

    enum class AoaDirection { fact_to_article, article_to_fact };
    enum class CompressOp { sum, avg };
    enum class PredictFrom { all_levels, last_only };

    namespace detail {

        template <class E, std::size_t N>
        E enum_from_string(const std::string& s, const std::pair<E, const char*> (&names)[N], const char* what) {
            for (const auto& [e, n] : names) {
                if (s == n) return e;
            }
            throw InputError(std::string("unknown ") + what + ": " + s);
        }

        template <class E, std::size_t N>
        std::string enum_to_string(E v, const std::pair<E, const char*> (&names)[N]) {
            for (const auto& [e, n] : names) {
                if (e == v) return n;
            }
            return "?";
        }

        inline constexpr std::pair<AoaDirection, const char*> direction_names[]{
            {AoaDirection::fact_to_article, "fact_to_article"}, {AoaDirection::article_to_fact, "article_to_fact"}};
        inline constexpr std::pair<CompressOp, const char*> compress_names[]{{CompressOp::sum, "sum"},
                                                                              {CompressOp::avg, "avg"}};
        inline constexpr std::pair<PredictFrom, const char*> predict_names[]{{PredictFrom::all_levels, "all_levels"},
                                                                              {PredictFrom::last_only, "last_only"}};

    }  // namespace detail

    inline std::string to_string(AoaDirection v) { return detail::enum_to_string(v, detail::direction_names); }
    inline std::string to_string(CompressOp v) { return detail::enum_to_string(v, detail::compress_names); }
    inline std::string to_string(PredictFrom v) { return detail::enum_to_string(v, detail::predict_names); }

    inline AoaDirection parse_direction(const std::string& s) {
        return detail::enum_from_string(s, detail::direction_names, "AoA direction");
    }
    inline CompressOp parse_compress(const std::string& s) {
        return detail::enum_from_string(s, detail::compress_names, "compress op");
    }
    inline PredictFrom parse_predict_from(const std::string& s) {
        return detail::enum_from_string(s, detail::predict_names, "predict_from");
    }

    struct ModelConfig {
        std::size_t embedding_dim = 128;
        // convolution layers; with count_embedding_level the embedding level
        // counts as one of them, leaving num_layers - 1 convolutions
        std::size_t num_layers = 3;
        bool count_embedding_level = false;
        std::vector<std::size_t> filters{128, 128, 128};
        std::vector<std::size_t> kernel_sizes{2, 4, 8};
        std::size_t fact_length = 50;
        std::size_t article_length = 50;
        std::size_t g1_width = 64;
        std::size_t g2_hidden = 64;
        double threshold = 0.6;
        AoaDirection direction = AoaDirection::fact_to_article;
        CompressOp compress = CompressOp::sum;
        PredictFrom predict_from = PredictFrom::all_levels;
        double dropout = 0.5;
        bool use_knowledge = true;
        bool share_g1 = false;
        bool mask_padding = false;
        bool tune_embeddings = false;

        std::size_t conv_layers() const {
            return count_embedding_level ? (num_layers == 0 ? 0 : num_layers - 1) : num_layers;
        }

        std::size_t level_count() const { return conv_layers() + 1; }

        // pattern width at a level; level 0 is the embedding
        std::size_t level_width(std::size_t level) const { return level == 0 ? embedding_dim : filters[level - 1]; }

        // levels that feed the prediction head
        std::vector<std::size_t> used_levels() const {
            if (predict_from == PredictFrom::last_only) return {conv_layers()};
            std::vector<std::size_t> out(level_count());
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
            return out;
        }

        // length of the matching pattern h at each level
        std::size_t pattern_length() const {
            return direction == AoaDirection::fact_to_article ? article_length : fact_length;
        }

        std::size_t knowledge_width() const { return use_knowledge ? 2 : 0; }

        void validate() const {
            auto fail = [](const std::string& m) { throw InputError("model config: " + m); };
            if (num_layers < 1) fail("num_layers must be at least 1");
            if (filters.size() != conv_layers()) fail("filters must list one width per convolution layer");
            if (kernel_sizes.size() != conv_layers()) fail("kernel_sizes must list one size per convolution layer");
            for (auto f : filters) {
                if (f == 0) fail("filter counts must be positive");
            }
            for (auto h : kernel_sizes) {
                if (h == 0) fail("kernel sizes must be positive");
            }
            if (embedding_dim == 0 || fact_length == 0 || article_length == 0 || g1_width == 0 || g2_hidden == 0) {
                fail("widths and lengths must be positive");
            }
            if (!(threshold > 0.0 && threshold <= 1.0)) fail("threshold must lie in (0, 1]");
            if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
            if (use_knowledge && direction == AoaDirection::article_to_fact) {
                fail("article_to_fact weights the fact side, which has no knowledge rows; set use_knowledge=false");
            }
            if (share_g1) {
                for (std::size_t l : used_levels()) {
                    if (level_width(l) != level_width(used_levels().front())) {
                        fail("share_g1 needs equal pattern widths at every used level");
                    }
                }
            }
        }

        bool operator==(const ModelConfig&) const = default;
    };

    inline void to_json(nlohmann::json& j, const ModelConfig& c) {
        j = nlohmann::json{{"embedding_dim", c.embedding_dim},
                           {"num_layers", c.num_layers},
                           {"count_embedding_level", c.count_embedding_level},
                           {"filters", c.filters},
                           {"kernel_sizes", c.kernel_sizes},
                           {"fact_length", c.fact_length},
                           {"article_length", c.article_length},
                           {"g1_width", c.g1_width},
                           {"g2_hidden", c.g2_hidden},
                           {"threshold", c.threshold},
                           {"direction", to_string(c.direction)},
                           {"compress", to_string(c.compress)},
                           {"predict_from", to_string(c.predict_from)},
                           {"dropout", c.dropout},
                           {"use_knowledge", c.use_knowledge},
                           {"share_g1", c.share_g1},
                           {"mask_padding", c.mask_padding},
                           {"tune_embeddings", c.tune_embeddings}};
    }

    // Missing keys keep their defaults, so partial config files work.
    inline void from_json(const nlohmann::json& j, ModelConfig& c) {
        ModelConfig d;
        c.embedding_dim = j.value("embedding_dim", d.embedding_dim);
        c.num_layers = j.value("num_layers", d.num_layers);
        c.count_embedding_level = j.value("count_embedding_level", d.count_embedding_level);
        c.filters = j.value("filters", d.filters);
        c.kernel_sizes = j.value("kernel_sizes", d.kernel_sizes);
        c.fact_length = j.value("fact_length", d.fact_length);
        c.article_length = j.value("article_length", d.article_length);
        c.g1_width = j.value("g1_width", d.g1_width);
        c.g2_hidden = j.value("g2_hidden", d.g2_hidden);
        c.threshold = j.value("threshold", d.threshold);
        c.direction = parse_direction(j.value("direction", to_string(d.direction)));
        c.compress = parse_compress(j.value("compress", to_string(d.compress)));
        c.predict_from = parse_predict_from(j.value("predict_from", to_string(d.predict_from)));
        c.dropout = j.value("dropout", d.dropout);
        c.use_knowledge = j.value("use_knowledge", d.use_knowledge);
        c.share_g1 = j.value("share_g1", d.share_g1);
        c.mask_padding = j.value("mask_padding", d.mask_padding);
        c.tune_embeddings = j.value("tune_embeddings", d.tune_embeddings);
    }

}  // namespace mlmn::model
