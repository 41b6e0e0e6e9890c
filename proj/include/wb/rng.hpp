#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "wb/errors.hpp"

namespace wb {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Randomness for a single kernel step. Draw order within a step is fixed:
// proposal normals first, then the Metropolis-Hastings uniform, then
// minibatch indices. Couplings share draws by reading the same StepRng.
class StepRng {
public:
    explicit StepRng(std::uint64_t seed) : eng_(seed) {}

    // Uniform on (0,1), never returns 0 or 1.
    double uniform() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }

    // Box-Muller without caching, so every call consumes exactly two engine words.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    Eigen::VectorXd normal_vector(int d) {
        Eigen::VectorXd v(d);
        for (int i = 0; i < d; ++i) v(i) = normal();
        return v;
    }

    // k distinct indices from {0,...,n-1}, uniform without replacement
    // (partial Fisher-Yates).
    std::vector<int> sample_indices(int n, int k) {
        if (k < 0 || k > n) throw InvalidInput("sample_indices: need 0 <= k <= n");
        std::vector<int> pool(n);
        for (int i = 0; i < n; ++i) pool[i] = i;
        for (int i = 0; i < k; ++i) {
            const int j = i + static_cast<int>(uniform() * static_cast<double>(n - i));
            std::swap(pool[i], pool[std::min(j, n - 1)]);
        }
        pool.resize(k);
        return pool;
    }

private:
    std::mt19937_64 eng_;
};

// Counter-based stream derivation: every (master_seed, chain, slot, step)
// tuple maps to an independently seeded StepRng. CRN couplings express
// shared randomness by both sides reading the `shared` slot; the
// independent coupling reads disjoint slots. Any step can be replayed in
// isolation, which keeps the marginal-preservation checks auditable.
class ChainRng {
public:
    enum class Slot : std::uint64_t { shared = 0, left_only = 1, right_only = 2, init = 3 };

    ChainRng(std::uint64_t master_seed, std::uint64_t chain_index)
        : master_(master_seed), chain_(chain_index) {}

    StepRng at(Slot slot, std::int64_t step) const {
        std::uint64_t s = splitmix64(master_ + 0x632be59bd9b4e019ULL);
        s = splitmix64(s ^ splitmix64(chain_ + 0x9e3779b97f4a7c15ULL));
        s = splitmix64(s ^ splitmix64(static_cast<std::uint64_t>(slot) + 0xbf58476d1ce4e5b9ULL));
        s = splitmix64(s ^ splitmix64(static_cast<std::uint64_t>(step) + 0x94d049bb133111ebULL));
        return StepRng(s);
    }

    std::uint64_t master_seed() const { return master_; }
    std::uint64_t chain_index() const { return chain_; }

private:
    std::uint64_t master_;
    std::uint64_t chain_;
};

} // namespace wb
