#include "urbanflow/random.hpp"

#include <cmath>

namespace urbanflow {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t absorb(std::uint64_t x) noexcept { return mix64(x + kGolden); }
} // namespace

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) noexcept {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t RandomStream::next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

std::uint64_t RandomStream::below(std::uint64_t n) noexcept {
    // Lemire's multiply-shift with rejection; unbiased for every n.
    std::uint64_t x = next_u64();
    auto m = static_cast<unsigned __int128>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = next_u64();
            m = static_cast<unsigned __int128>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double RandomStream::gumbel() noexcept {
    // u in (0, 1) so both logs are finite.
    double u = uniform();
    while (u == 0.0) u = uniform();
    return -std::log(-std::log(u));
}

RandomStream derive_stream(std::uint64_t global_seed, std::int64_t year, std::string_view model_name,
                           std::uint64_t agent_id) noexcept {
    std::uint64_t h = absorb(global_seed);
    h = absorb(h ^ static_cast<std::uint64_t>(year));
    h = absorb(h ^ fnv1a64(model_name));
    h = absorb(h ^ agent_id);
    return RandomStream(h);
}

} // namespace urbanflow
