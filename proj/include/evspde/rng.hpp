#pragma once

#include <cstdint>
#include <limits>

namespace evspde {

/// splitmix64 finalizer; bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent stream key from a master seed and up to two counters
/// (typically replica index and step index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) noexcept;

/// Counter-based uniform random bit generator. The n-th output is a pure
/// function of (key, n), so streams can be re-created at any position.
class CounterEngine {
public:
    using result_type = std::uint64_t;

    explicit CounterEngine(std::uint64_t key) noexcept : key_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t position() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Standard normal variate from a CounterEngine (Box-Muller on two 53-bit
/// uniforms). Platform independent, unlike std::normal_distribution.
double standard_normal(CounterEngine& engine) noexcept;

/// 64-bit FNV-1a hash of a byte string; used for scenario digests.
std::uint64_t fnv1a(const void* data, std::size_t size) noexcept;

} // namespace evspde
