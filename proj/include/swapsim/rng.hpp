#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace swapsim {

// splitmix64 step; used for seed derivation and stateless tie-break keys.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
    return mix64(seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

// Replication seeds are a stable hash of (master_seed, rate index, replication
// index), so extending the rate grid or adding replications never changes the
// seeds of existing cells.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t rate_index,
                                 std::uint64_t replication_index) {
    return hash_combine(hash_combine(master, rate_index + 1), replication_index + 1);
}

// Deterministic RNG. The mt19937_64 output sequence is pinned by the standard;
// every distribution here is hand-rolled so that results are identical across
// compilers and standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform integer in [0, bound), bound >= 1; rejection keeps it unbiased
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % bound;
    }

    // uniform double in [0, 1) with 53 random bits
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Knuth's product-of-uniforms method. Large means are split into chunks
    // (Poisson additivity) so exp(-mean) never underflows.
    std::uint64_t poisson(double mean) {
        std::uint64_t total = 0;
        while (mean > 500.0) {
            total += poisson_small(500.0);
            mean -= 500.0;
        }
        return total + poisson_small(mean);
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[static_cast<std::size_t>(below(i))]);
        }
    }

    // Uniformly ordered sample of m distinct values from {0, ..., n-1}
    // (partial Fisher-Yates), so selection and processing order are drawn at once.
    std::vector<std::uint32_t> sample_indices(std::uint32_t n, std::uint32_t m) {
        std::vector<std::uint32_t> pool(n);
        for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
        std::vector<std::uint32_t> out;
        out.reserve(m);
        for (std::uint32_t i = 0; i < m; ++i) {
            const std::uint64_t j = i + below(n - i);
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

  private:
    std::uint64_t poisson_small(double mean) {
        const double threshold = std::exp(-mean);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform01();
        } while (p > threshold);
        return k - 1;
    }

    std::mt19937_64 engine_;
};

} // namespace swapsim
