#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mlmn/corpus/dataset.hpp"
#include "mlmn/corpus/embeddings.hpp"
#include "mlmn/model/config.hpp"
#include "mlmn/numerics/ops.hpp"
#include "mlmn/numerics/params.hpp"
#include "mlmn/numerics/tape.hpp"

namespace mlmn::model {

    // Intermediate AoA quantities for one level. In the article_to_fact
    // direction nu has length n (column sums of alpha) and omega length m.
    struct AlignmentTrace {
        Tensor m;
        Tensor alpha;
        Tensor beta;
        Tensor nu;
        Tensor omega;
    };

    struct MatchPrediction {
        double p_match = 0.0;
        double p_no_match = 0.0;
        std::vector<Tensor> h;  // matching pattern per used level
        bool matched = false;
    };

    enum class Side { fact, article };

    inline std::string side_name(Side s) { return s == Side::fact ? "fact" : "article"; }

    // Weights on the tape for one alignment step.
    struct AoaVars {
        Var m, alpha, beta, nu, omega;
    };

    // Records M = C_F C_L^T, alpha (row softmax), beta (column softmax), the
    // compressed nu and the comprehensive weight omega. Optional masks are
    // additive constants (-1e30 at PAD) applied before each softmax.
    inline AoaVars aoa(const Var& cf, const Var& cl, AoaDirection direction, CompressOp compress,
                       const Var* alpha_mask = nullptr, const Var* beta_mask = nullptr) {
        if (cf.value().cols() != cl.value().cols()) {
            throw ShapeError("aoa: pattern widths differ: " + shape_string(cf.shape()) + " vs " +
                             shape_string(cl.shape()));
        }
        AoaVars v;
        v.m = ops::matmul_nt(cf, cl);
        v.alpha = ops::softmax(alpha_mask ? ops::add(v.m, *alpha_mask) : v.m, 1);
        v.beta = ops::softmax(beta_mask ? ops::add(v.m, *beta_mask) : v.m, 0);
        const double m_len = static_cast<double>(cf.value().rows());
        const double n_len = static_cast<double>(cl.value().rows());
        if (direction == AoaDirection::fact_to_article) {
            v.nu = ops::sum_axis(v.beta, 1);
            if (compress == CompressOp::avg) v.nu = ops::scale(v.nu, 1.0 / n_len);
            v.omega = ops::vecmat(v.nu, v.alpha);
        } else {
            v.nu = ops::sum_axis(v.alpha, 0);
            if (compress == CompressOp::avg) v.nu = ops::scale(v.nu, 1.0 / m_len);
            v.omega = ops::matvec(v.beta, v.nu);
        }
        return v;
    }

    // Non-differentiable AoA on plain tensors.
    inline AlignmentTrace aoa_align(const Tensor& cf, const Tensor& cl, AoaDirection direction, CompressOp compress) {
        Tape tape;
        auto v = aoa(tape.constant(cf), tape.constant(cl), direction, compress);
        return {v.m.value(), v.alpha.value(), v.beta.value(), v.nu.value(), v.omega.value()};
    }

    // h = max_pool(G1([omega * C, Q])) with G1 affine.
    inline Var fuse(const Var& omega, const Var& patterns, const Var* q, const Var& g1_w, const Var& g1_b) {
        Var r = ops::scale_rows(patterns, omega);
        if (q) {
            if (q->value().rows() != patterns.value().rows()) {
                throw ShapeError("fuse: knowledge rows " + std::to_string(q->value().rows()) + " vs pattern rows " +
                                 std::to_string(patterns.value().rows()));
            }
            r = ops::concat_cols(r, *q);
        }
        return ops::maxpool_last(ops::dense(r, g1_w, g1_b));
    }

    namespace detail {

        inline std::string conv_name(Side s, std::size_t layer, const char* part) {
            return side_name(s) + ".conv" + std::to_string(layer) + "." + part;
        }

        inline std::string g1_name(const ModelConfig& c, std::size_t level, const char* part) {
            return c.share_g1 ? std::string("g1.shared.") + part : "g1." + std::to_string(level) + "." + part;
        }

        inline Tensor pad_mask(const corpus::TokenSequence& s, bool rows, std::size_t other) {
            const std::size_t len = s.padded_length();
            Tensor mask = rows ? Tensor({len, other}) : Tensor({other, len});
            if (s.true_length == 0) return mask;
            for (std::size_t p = s.true_length; p < len; ++p) {
                for (std::size_t k = 0; k < other; ++k) (rows ? mask.at(p, k) : mask.at(k, p)) = -1e30;
            }
            return mask;
        }

    }  // namespace detail

    class MatchModel {
    public:
        MatchModel(ModelConfig config, const corpus::EmbeddingTable& embeddings, std::uint64_t seed)
            : config_(std::move(config)) {
            config_.validate();
            if (embeddings.rank() != 2 || embeddings.cols() != config_.embedding_dim) {
                throw ShapeError("embedding table " + shape_string(embeddings.shape()) + " does not have width " +
                                 std::to_string(config_.embedding_dim));
            }
            Rng rng(seed);
            params_.add("embedding", embeddings, config_.tune_embeddings);
            for (Side side : {Side::fact, Side::article}) {
                for (std::size_t i = 1; i <= config_.conv_layers(); ++i) {
                    const std::size_t h = config_.kernel_sizes[i - 1], in = config_.level_width(i - 1);
                    const std::size_t out = config_.filters[i - 1];
                    params_.add(detail::conv_name(side, i, "w"), glorot_uniform({h, in, out}, h * in, out, rng));
                    params_.add(detail::conv_name(side, i, "b"), Tensor({out}));
                }
            }
            const std::size_t t = config_.g1_width;
            for (std::size_t level : config_.used_levels()) {
                const auto name = detail::g1_name(config_, level, "w");
                if (params_.contains(name)) continue;
                const std::size_t in = config_.level_width(level) + config_.knowledge_width();
                params_.add(name, glorot_uniform({in, t}, in, t, rng));
                params_.add(detail::g1_name(config_, level, "b"), Tensor({t}));
            }
            const std::size_t g2_in = config_.used_levels().size() * config_.pattern_length();
            params_.add("g2.hidden.w", glorot_uniform({g2_in, config_.g2_hidden}, g2_in, config_.g2_hidden, rng));
            params_.add("g2.hidden.b", Tensor({config_.g2_hidden}));
            params_.add("g2.out.w", glorot_uniform({config_.g2_hidden, 2}, config_.g2_hidden, 2, rng));
            params_.add("g2.out.b", Tensor({2}));
        }

        const ModelConfig& config() const { return config_; }
        ParamStore& params() { return params_; }
        const ParamStore& params() const { return params_; }

        // Level patterns C^0..C^L of one side, recorded on `tape`. Parameters
        // are tracked for gradients only through the non-const overload.
        std::vector<Var> extract_patterns(Tape& tape, const corpus::TokenSequence& seq, Side side) {
            return extract_impl(params_, config_, tape, seq, side);
        }
        std::vector<Var> extract_patterns(Tape& tape, const corpus::TokenSequence& seq, Side side) const {
            return extract_impl(params_, config_, tape, seq, side);
        }

        // Match logits [no-match, match]. With training set, dropout draws from
        // rng; `article_patterns` may carry cached article-side levels.
        Var logits(Tape& tape, const corpus::TokenSequence& fact, const corpus::TokenSequence& article,
                   const Tensor* q, bool training, Rng* rng) {
            return logits_impl(params_, config_, tape, fact, article, q, training, rng, nullptr, nullptr, nullptr);
        }
        Var logits(Tape& tape, const corpus::TokenSequence& fact, const corpus::TokenSequence& article,
                   const Tensor* q, const std::vector<Tensor>* article_patterns = nullptr,
                   std::vector<Tensor>* h_out = nullptr, const std::vector<Tensor>* fact_patterns = nullptr) const {
            return logits_impl(params_, config_, tape, fact, article, q, false, nullptr, article_patterns, h_out,
                               fact_patterns);
        }

        // inference-mode levels of one side, for caching
        std::vector<Tensor> patterns(const corpus::TokenSequence& seq, Side side) const {
            Tape tape;
            std::vector<Tensor> out;
            for (const auto& v : extract_patterns(tape, seq, side)) out.push_back(v.value());
            return out;
        }
        std::vector<Tensor> article_patterns(const corpus::TokenSequence& article) const {
            return patterns(article, Side::article);
        }

        MatchPrediction predict(const corpus::TokenSequence& fact, const corpus::TokenSequence& article,
                                const Tensor* q, const std::vector<Tensor>* cached = nullptr,
                                const std::vector<Tensor>* fact_cached = nullptr) const {
            Tape tape;
            MatchPrediction p;
            Var z = ops::softmax(logits(tape, fact, article, q, cached, &p.h, fact_cached), 0);
            p.p_no_match = z.value()[0];
            p.p_match = z.value()[1];
            p.matched = p.p_match > config_.threshold;
            return p;
        }

        // traces of every level, inference mode
        std::vector<AlignmentTrace> alignment_traces(const corpus::TokenSequence& fact,
                                                     const corpus::TokenSequence& article) const {
            Tape tape;
            auto cf = extract_patterns(tape, fact, Side::fact);
            auto cl = extract_patterns(tape, article, Side::article);
            std::vector<AlignmentTrace> out;
            for (std::size_t l = 0; l < cf.size(); ++l) {
                auto v = aoa(cf[l], cl[l], config_.direction, config_.compress);
                out.push_back({v.m.value(), v.alpha.value(), v.beta.value(), v.nu.value(), v.omega.value()});
            }
            return out;
        }

    private:
        template <class Store>
        static std::vector<Var> extract_impl(Store& params, const ModelConfig& cfg, Tape& tape,
                                             const corpus::TokenSequence& seq, Side side) {
            const std::size_t want = side == Side::fact ? cfg.fact_length : cfg.article_length;
            if (seq.padded_length() != want) {
                throw ShapeError(side_name(side) + " sequence has length " + std::to_string(seq.padded_length()) +
                                 ", model expects " + std::to_string(want));
            }
            std::vector<Var> levels;
            levels.push_back(ops::embedding_lookup(tape.parameter(params.at("embedding")), seq.ids));
            for (std::size_t i = 1; i <= cfg.conv_layers(); ++i) {
                levels.push_back(ops::relu(ops::conv1d_same(levels.back(),
                                                            tape.parameter(params.at(detail::conv_name(side, i, "w"))),
                                                            tape.parameter(params.at(detail::conv_name(side, i, "b"))))));
            }
            return levels;
        }

        template <class Store>
        static Var logits_impl(Store& params, const ModelConfig& cfg, Tape& tape, const corpus::TokenSequence& fact,
                               const corpus::TokenSequence& article, const Tensor* q, bool training, Rng* rng,
                               const std::vector<Tensor>* cached, std::vector<Tensor>* h_out,
                               const std::vector<Tensor>* fact_cached) {
            if (training && cfg.dropout > 0 && !rng) throw Error("logits: training mode needs an rng");
            if (cfg.use_knowledge) {
                if (!q) throw InputError("model uses knowledge rows but none were given");
                if (q->rank() != 2 || q->rows() != cfg.article_length || q->cols() != 2) {
                    throw ShapeError("knowledge matrix " + shape_string(q->shape()) + " should be " +
                                     std::to_string(cfg.article_length) + "x2");
                }
            }
            auto side_levels = [&](const corpus::TokenSequence& seq, Side side, const std::vector<Tensor>* c) {
                if (!c) return extract_impl(params, cfg, tape, seq, side);
                const std::size_t want = side == Side::fact ? cfg.fact_length : cfg.article_length;
                if (c->size() != cfg.level_count()) throw ShapeError("cached patterns: wrong level count");
                if (seq.padded_length() != want) throw ShapeError(side_name(side) + " length mismatch");
                std::vector<Var> out;
                for (const auto& t : *c) out.push_back(tape.constant(t));
                return out;
            };
            auto cf = side_levels(fact, Side::fact, fact_cached);
            auto cl = side_levels(article, Side::article, cached);

            std::optional<Var> alpha_mask, beta_mask, qv;
            if (cfg.mask_padding) {
                alpha_mask = tape.constant(detail::pad_mask(article, false, cfg.fact_length));
                beta_mask = tape.constant(detail::pad_mask(fact, true, cfg.article_length));
            }
            if (cfg.use_knowledge) qv = tape.constant(*q);

            std::vector<Var> hs;
            for (std::size_t level : cfg.used_levels()) {
                auto v = aoa(cf[level], cl[level], cfg.direction, cfg.compress, alpha_mask ? &*alpha_mask : nullptr,
                             beta_mask ? &*beta_mask : nullptr);
                const Var& side_patterns = cfg.direction == AoaDirection::fact_to_article ? cl[level] : cf[level];
                Var h = fuse(v.omega, side_patterns, qv ? &*qv : nullptr,
                             tape.parameter(params.at(detail::g1_name(cfg, level, "w"))),
                             tape.parameter(params.at(detail::g1_name(cfg, level, "b"))));
                if (h_out) h_out->push_back(h.value());
                hs.push_back(h);
            }
            Var x = hs.size() == 1 ? hs.front() : ops::concat(hs);
            Rng dummy;
            Rng& r = rng ? *rng : dummy;
            x = ops::dropout(x, cfg.dropout, training, r);
            Var hidden = ops::dense(x, tape.parameter(params.at("g2.hidden.w")), tape.parameter(params.at("g2.hidden.b")),
                                    ops::Activation::relu);
            hidden = ops::dropout(hidden, cfg.dropout, training, r);
            return ops::dense(hidden, tape.parameter(params.at("g2.out.w")), tape.parameter(params.at("g2.out.b")));
        }

        ModelConfig config_;
        ParamStore params_;
    };

    struct ArticleEntry {
        std::string id;
        corpus::TokenSequence tokens;
        Tensor knowledge;  // article_length x 2; ignored when knowledge is off
    };

    struct Recommendation {
        std::string id;
        double p_match = 0.0;
    };

    // Articles whose match probability exceeds the threshold, most probable first.
    inline std::vector<Recommendation> recommend(const MatchModel& model, const corpus::TokenSequence& fact,
                                                 const std::vector<ArticleEntry>& store,
                                                 const std::vector<std::vector<Tensor>>* cached = nullptr) {
        if (store.empty()) throw InputError("recommend: the article store is empty");
        const auto fact_levels = model.patterns(fact, Side::fact);
        std::vector<Recommendation> out;
        for (std::size_t a = 0; a < store.size(); ++a) {
            const auto p = model.predict(fact, store[a].tokens, &store[a].knowledge, cached ? &(*cached)[a] : nullptr,
                                         &fact_levels);
            if (p.matched) out.push_back({store[a].id, p.p_match});
        }
        std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.p_match > b.p_match; });
        return out;
    }

}  // namespace mlmn::model
