#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <unordered_map>
#include <vector>

#include "mlmn/numerics/tape.hpp"
#include "mlmn/util/rng.hpp"

namespace mlmn {

    // Ordered, named collection of parameters. Order is insertion order and is
    // what checkpoints and the optimizer iterate over.
    class ParamStore {
    public:
        Parameter& add(const std::string& name, Tensor value, bool trainable = true) {
            if (index_.count(name)) throw Error("duplicate parameter name: " + name);
            index_.emplace(name, params_.size());
            Parameter p;
            p.name = name;
            p.grad = Tensor(value.shape());
            p.value = std::move(value);
            p.trainable = trainable;
            params_.push_back(std::move(p));
            return params_.back();
        }

        bool contains(const std::string& name) const { return index_.count(name) != 0; }

        Parameter& at(const std::string& name) {
            auto it = index_.find(name);
            if (it == index_.end()) throw Error("unknown parameter: " + name);
            return params_[it->second];
        }

        const Parameter& at(const std::string& name) const {
            auto it = index_.find(name);
            if (it == index_.end()) throw Error("unknown parameter: " + name);
            return params_[it->second];
        }

        std::vector<Parameter>& all() { return params_; }
        const std::vector<Parameter>& all() const { return params_; }
        std::size_t size() const { return params_.size(); }

        std::size_t scalar_count() const {
            std::size_t n = 0;
            for (const auto& p : params_) n += p.value.size();
            return n;
        }

        void zero_grad() {
            for (auto& p : params_) p.zero_grad();
        }

        // FNV-1a over the raw bytes of every value; detects any mutation
        std::uint64_t checksum() const {
            std::uint64_t h = 1469598103934665603ULL;
            for (const auto& p : params_) {
                for (double v : p.value.data()) {
                    unsigned char bytes[sizeof(double)];
                    std::memcpy(bytes, &v, sizeof v);
                    for (unsigned char b : bytes) {
                        h ^= b;
                        h *= 1099511628211ULL;
                    }
                }
            }
            return h;
        }

    private:
        std::vector<Parameter> params_;
        std::unordered_map<std::string, std::size_t> index_;
    };

    // Glorot-uniform initialized tensor; fan_in/fan_out are given explicitly
    // because conv kernels fold the window into fan_in.
    inline Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
        Tensor t(std::move(shape));
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& v : t.data()) v = rng.uniform(-limit, limit);
        return t;
    }

}  // namespace mlmn
