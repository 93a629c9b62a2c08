#pragma once

#include <cstdint>
#include <string_view>

namespace urbanflow {

/// Counter-based random stream.
///
/// A stream is fully described by a 64-bit key and a counter. Draw number k
/// (k = 1, 2, ...) is `finalize(key + k * 0x9E3779B97F4A7C15)`, where
/// `finalize` is the SplitMix64 output function. Keys are derived from the
/// tuple (global_seed, year, model_name, agent_id), see derive_stream().
/// Because nothing but the key and the counter matters, results do not depend
/// on the order in which agents are processed or on the number of threads.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t key) noexcept : key_(key) {}

    std::uint64_t next_u64() noexcept;

    /// Uniform double in [0, 1) with 53 bits of resolution.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept;

    /// Standard Gumbel(0, 1) variate.
    double gumbel() noexcept;

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t position() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// SplitMix64 finalizer (bijective 64-bit mixer).
std::uint64_t mix64(std::uint64_t x) noexcept;

/// FNV-1a 64-bit hash of a byte string.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

/// key = M(M(M(M(seed) ^ year) ^ fnv1a(model_name)) ^ agent_id)
/// with M(x) = mix64(x + 0x9E3779B97F4A7C15).
RandomStream derive_stream(std::uint64_t global_seed, std::int64_t year, std::string_view model_name,
                           std::uint64_t agent_id) noexcept;

/// Binds (seed, year) so models only supply their name and the agent id.
struct StreamFactory {
    std::uint64_t global_seed = 0;
    std::int64_t year = 0;

    RandomStream operator()(std::string_view model_name, std::uint64_t agent_id) const noexcept {
        return derive_stream(global_seed, year, model_name, agent_id);
    }
};

} // namespace urbanflow
