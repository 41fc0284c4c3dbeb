#include "evspde/rng.hpp"

#include <cmath>
#include <numbers>

namespace evspde {

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) noexcept
{
    std::uint64_t h = mix64(master);
    h = mix64(h ^ mix64(a + 0x632be59bd9b4e019ULL));
    h = mix64(h ^ mix64(b + 0x85157af5ULL));
    return h;
}

CounterEngine::result_type CounterEngine::operator()() noexcept
{
    ++counter_;
    return mix64(key_ ^ mix64(counter_));
}

double standard_normal(CounterEngine& engine) noexcept
{
    constexpr double scale = 1.0 / 9007199254740992.0; // 2^-53
    // u1 in (0,1], u2 in [0,1)
    const double u1 = (static_cast<double>(engine() >> 11) + 1.0) * scale;
    const double u2 = static_cast<double>(engine() >> 11) * scale;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t fnv1a(const void* data, std::size_t size) noexcept
{
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace evspde
