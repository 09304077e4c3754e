#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "attnrec/errors.hpp"
#include "attnrec/rng.hpp"

namespace attnrec {

// Seeded uniform partition of [0, n) into (kept, held_out) index sets, both
// ascending. The same call backs the autoencoder validation split and the
// GBT tuning split so the held-out triplets are identical across stages.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_validation_indices(std::size_t n, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw DomainError("split_validation: fraction must lie in (0,1), got " +
                          std::to_string(fraction));
    if (n < 2) throw DomainError("split_validation: need at least 2 items");
    auto n_val = static_cast<std::size_t>(fraction * static_cast<double>(n) + 0.5);
    if (n_val == 0) n_val = 1;
    if (n_val >= n) n_val = n - 1;
    Rng rng(derive_seed(seed, "validation-split"));
    std::vector<std::size_t> held = rng.sample_indices(n, n_val);
    std::vector<std::size_t> kept;
    kept.reserve(n - n_val);
    std::size_t h = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (h < held.size() && held[h] == i)
            ++h;
        else
            kept.push_back(i);
    }
    return {kept, held};
}

}  // namespace attnrec
