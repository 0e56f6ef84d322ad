#pragma once

#include "idwattn/matrix.hpp"

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace idw {

/// Deterministic generator: xoshiro256++ state, seeded through splitmix64.
///
/// `stream(name)` derives an independent generator from the *construction*
/// seed and the stream name, regardless of how much the parent has been
/// consumed. Consumers (key-init, shuffle, data-noise, ...) each take their
/// own named stream, so adding a consumer never shifts anyone else's draws.
///
/// `normal()` is a deterministic transform of exactly two uniform draws
/// (Box-Muller, cosine branch, no caching, no rejection), so the draw count
/// per sample is fixed.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    Rng stream(std::string_view name) const;

    std::uint64_t next_u64();
    /// Uniform in [0, 1), 53-bit mantissa.
    double uniform();
    /// Standard normal.
    double normal();
    /// Uniform integer in [0, n); n must be > 0.
    std::size_t below(std::size_t n);

    /// Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> state_;
};

/// rows x cols matrix with entry (r,j) ~ Normal(mean(0,j), std(0,j)).
/// std entries must be >= 0; a zero std pins the column to its mean exactly.
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, const Matrix& mean, const Matrix& std,
                       Rng& rng);

} // namespace idw
