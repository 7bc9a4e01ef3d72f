#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace mlmn {

    // Thin wrapper over mt19937_64. The distribution helpers are written out by
    // hand so sampled values do not depend on the standard library vendor.
    class Rng {
    public:
        explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

        std::uint64_t next_u64() { return engine_(); }

        // uniform in [0, 1)
        double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

        double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

        // uniform in [0, n)
        std::size_t below(std::size_t n) {
            if (n <= 1) return 0;
            const std::uint64_t bound = static_cast<std::uint64_t>(n);
            const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
            std::uint64_t x;
            do {
                x = engine_();
            } while (x >= limit);
            return static_cast<std::size_t>(x % bound);
        }

        bool bernoulli(double p) { return uniform() < p; }

        template <class T>
        void shuffle(std::vector<T>& v) {
            for (std::size_t i = v.size(); i > 1; --i) {
                std::swap(v[i - 1], v[below(i)]);
            }
        }

        // k distinct indices from [0, n), in draw order
        std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
            std::vector<std::size_t> pool(n);
            for (std::size_t i = 0; i < n; ++i) pool[i] = i;
            if (k > n) k = n;
            for (std::size_t i = 0; i < k; ++i) {
                std::swap(pool[i], pool[i + below(n - i)]);
            }
            pool.resize(k);
            return pool;
        }

    private:
        std::mt19937_64 engine_;
    };

    // splitmix64 finalizer, used to derive independent child seeds
    inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

}  // namespace mlmn
