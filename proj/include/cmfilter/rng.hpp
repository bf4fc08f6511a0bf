#pragma once

#include <cstdint>
#include <random>

namespace cmf {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream per (seed, stream, substream); all randomness goes through here.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0)
        : engine_(splitmix64(splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL)) ^
                             (substream * 0x8cb92ba72f3d8dd7ULL))) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

enum Stream : std::uint64_t {
    kStateStream = 0,
    kObservationStream = 1,
    kChainStream = 2,
    kProbeStream = 3,
    kTrialStream = 4,
};

}  // namespace cmf
