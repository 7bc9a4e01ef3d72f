#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mlmn/numerics/params.hpp"

namespace mlmn {

    struct AdamConfig {
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
    };

    struct AdamState {
        AdamConfig config;
        std::vector<Tensor> first_moment;
        std::vector<Tensor> second_moment;
        std::size_t step = 0;
    };

    inline AdamState make_adam_state(const ParamStore& params, AdamConfig config = {}) {
        AdamState s;
        s.config = config;
        for (const auto& p : params.all()) {
            s.first_moment.emplace_back(p.value.shape());
            s.second_moment.emplace_back(p.value.shape());
        }
        return s;
    }

    // One bias-corrected Adam update over every trainable parameter using the
    // gradients currently stored in the parameters.
    inline void adam_step(ParamStore& params, AdamState& state) {
        auto& ps = params.all();
        if (ps.size() != state.first_moment.size()) throw ShapeError("adam_step: state does not match parameters");
        state.step += 1;
        const auto& c = state.config;
        const double t = static_cast<double>(state.step);
        const double correction1 = 1.0 - std::pow(c.beta1, t);
        const double correction2 = 1.0 - std::pow(c.beta2, t);
        for (std::size_t k = 0; k < ps.size(); ++k) {
            Parameter& p = ps[k];
            if (!p.trainable) continue;
            if (p.grad.shape() != p.value.shape() || state.first_moment[k].shape() != p.value.shape()) {
                throw ShapeError("adam_step: shape mismatch for " + p.name);
            }
            auto w = p.value.data();
            auto g = p.grad.data();
            auto m = state.first_moment[k].data();
            auto v = state.second_moment[k].data();
            for (std::size_t i = 0; i < w.size(); ++i) {
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
                const double m_hat = m[i] / correction1;
                const double v_hat = v[i] / correction2;
                w[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
            }
        }
    }

}  // namespace mlmn
