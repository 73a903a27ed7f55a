#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace autokg {

// Seedable generator with a cross-platform stable output sequence.
//
// std::mt19937_64 has its output fully specified by the standard, but the
// std:: distributions do not, so bounded draws are done here by rejection
// sampling on the raw 64-bit stream. Every consumer that promises
// byte-identical output under a fixed seed must draw through this class.
class PortableRng {
public:
    explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t uniform(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
        std::uint64_t x = engine_();
        while (x >= limit)
            x = engine_();
        return x % bound;
    }

    // Uniform integer in [lo, hi].
    std::int64_t uniform_between(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(uniform(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    // Fisher-Yates, back to front.
    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(uniform(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace autokg
