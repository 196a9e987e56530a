#pragma once

#include <cstdint>
#include <random>

namespace dpsm {

// SplitMix64 step; used both as a generator seeder and as the documented
// substream split function.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Substream split: worker block `block` of a run seeded with `seed` draws
// from mt19937_64(substream_seed(seed, block)). Changing the worker count
// changes only which samples land in which stream, nothing else.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t block) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s = seed ^ (0xA3EC647659359ACDull * (block + 1));
    std::uint64_t b = splitmix64(s);
    return a ^ b;
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on the open interval (0,1); safe as input to log().
    double uniform01() {
        return (static_cast<double>(gen_() >> 12) + 0.5) * 0x1.0p-52;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller; two uniforms per draw, no cached state.
    double gaussian() {
        double u1 = uniform01();
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    bool coin() { return (gen_() >> 63) != 0; }

  private:
    std::mt19937_64 gen_;
};

} // namespace dpsm
