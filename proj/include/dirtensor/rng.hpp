#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace dirtensor {

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seeded random stream owned by the caller. Child streams are derived by
/// hashing the parent seed with integer coordinates, so a stream id is a pure
/// function of (root seed, coordinates) and never depends on draw order.
class RngStream {
public:
    using engine_type = std::mt19937_64;
    using result_type = engine_type::result_type;

    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

    RngStream derive(std::initializer_list<std::uint64_t> coords) const {
        std::uint64_t h = mix64(seed_ ^ 0x5851f42d4c957f2dULL);
        for (std::uint64_t c : coords) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
        return RngStream(h);
    }

    std::uint64_t seed() const { return seed_; }

    static constexpr result_type min() { return engine_type::min(); }
    static constexpr result_type max() { return engine_type::max(); }
    result_type operator()() { return engine_(); }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    std::size_t categorical(std::span<const double> weights);

private:
    std::uint64_t seed_;
    engine_type engine_;
};

inline std::size_t RngStream::categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        u -= weights[i];
        if (u < 0.0) return i;
    }
    // Round-off fallback: last index with positive weight.
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0) return i;
    return weights.size() - 1;
}

}  // namespace dirtensor
