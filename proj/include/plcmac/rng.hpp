#ifndef PLCMAC_RNG_HPP
#define PLCMAC_RNG_HPP

#include <cstdint>
#include <random>

namespace plcmac {

/// Seeded 64-bit generator with unbiased integer draws.
///
/// uniform_int_distribution is implementation-defined, so backoff draws go
/// through an explicit rejection loop; with identical seeds, runs are
/// reproducible across platforms using the same mt19937_64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    /// Uniform integer in {0, ..., n-1}, unbiased via rejection.
    std::uint32_t below(std::uint32_t n) {
        const std::uint64_t limit =
            std::uint64_t(-1) - std::uint64_t(-1) % n;
        std::uint64_t v = gen_();
        while (v >= limit) v = gen_();
        return static_cast<std::uint32_t>(v % n);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return (gen_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 gen_;
};

/// Derives an independent stream seed (e.g. per replication or trial).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    // splitmix64 finalizer over the combined value
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace plcmac

#endif
