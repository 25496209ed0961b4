#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>

namespace netmarl {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stream seed from a master seed and a sequence of discriminators.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t s = mix_seed(master);
    for (auto k : keys) s = mix_seed(s ^ mix_seed(k + 0x632be59bd9b4e019ULL));
    return s;
}

/// Gaussian(mean, sd) restricted to [mean - clip, mean + clip] by redrawing.
inline double truncated_normal(Rng& rng, double mean, double sd, double clip) {
    if (sd == 0.0 || clip == 0.0) return mean;
    if (clip < 0.0 || sd < 0.0) throw std::invalid_argument("truncated_normal: negative sd or clip");
    std::normal_distribution<double> normal(0.0, sd);
    for (;;) {
        double x = normal(rng);
        if (x >= -clip && x <= clip) return mean + x;
    }
}

}  // namespace netmarl
