// Counter-based splittable random numbers.
//
// A stream is a (key, counter) pair; the n-th output is a keyed hash of n, so
// streams can be split by label without sharing state and the output does not
// depend on the standard library's distribution implementations.

#ifndef SHADOWLAB_RNG_HPP
#define SHADOWLAB_RNG_HPP

#include "core.hpp"

#include <cstdint>
#include <string_view>

namespace shadowlab {

inline constexpr std::uint64_t splitmix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed = 0) : key_(splitmix64(seed ^ 0x5eed5eed5eedULL)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()()
    {
        return splitmix64(key_ ^ splitmix64(counter_++ + 0x632be59bd9b4e019ULL));
    }

    /// Independent child stream identified by an integer label.
    CounterRng split(std::uint64_t label) const
    {
        CounterRng child;
        child.key_ = splitmix64(key_ + 0x9e3779b97f4a7c15ULL * (label + 1));
        return child;
    }

    /// Independent child stream identified by a name (FNV-1a of the label).
    CounterRng split(std::string_view label) const
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (char c : label) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return split(h);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : (*this)() % n; }

    /// Standard normal deviate (Box-Muller, one output per call).
    double normal()
    {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    Vec3 unit_vector()
    {
        Vec3 v(normal(), normal(), normal());
        double n = v.norm();
        while (n < 1e-12) {
            v = Vec3(normal(), normal(), normal());
            n = v.norm();
        }
        return v / n;
    }

    /// Uniform point in the closed ball of the given radius around the origin.
    Vec3 in_ball(double radius) { return unit_vector() * radius * std::cbrt(uniform()); }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace shadowlab

#endif
