#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace attnrec {

// Deterministic RNG wrapper. mt19937_64 output is fully specified by the
// standard; the distributions below are hand-rolled because the std::
// distribution algorithms are implementation-defined and would break
// run-to-run reproducibility across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n) via rejection sampling (unbiased).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Fisher-Yates; std::shuffle is not bit-stable across implementations.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices out of [0, n), returned in ascending order.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        if (k > n) k = n;
        // Partial Fisher-Yates: the first k slots end up a uniform sample.
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + static_cast<std::size_t>(below(n - i));
            std::swap(all[i], all[j]);
        }
        all.resize(k);
        std::sort(all.begin(), all.end());
        return all;
    }

private:
    std::mt19937_64 engine_;
};

// Stable 64-bit FNV-1a, used to derive substreams and hash configs.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a64(s.data(), s.size(), h);
}

// Derive an independent stream seed from a base seed and a tag.
inline std::uint64_t derive_seed(std::uint64_t seed, const std::string& tag) {
    std::uint64_t h = fnv1a64(tag);
    h = fnv1a64(&seed, sizeof seed, h);
    // splitmix64 finalizer to spread low-entropy seeds
    h += 0x9e3779b97f4a7c15ull;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
    return h ^ (h >> 31);
}

}  // namespace attnrec
