// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#ifndef MMWSIM_RNG_HPP
#define MMWSIM_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>

namespace mmw {

// Self-contained xoshiro256++ generator. The standard <random> distributions
// are implementation-defined, which breaks byte-identical replay across
// toolchains, so all sampling is done here from raw 64-bit draws.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) { reseed(seed); }

    void reseed(std::uint64_t seed)
    {
        // SplitMix64 expansion of the seed into the xoshiro state.
        std::uint64_t x = seed;
        for (auto &word : state_)
        {
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64()
    {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 significant bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    // Circularly symmetric complex Gaussian CN(0, var): real and imaginary
    // parts are independent N(0, var/2).
    std::complex<double> cgauss(double var)
    {
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-var * std::log(u1));
        const double phi = 2.0 * pi_ * u2;
        return {r * std::cos(phi), r * std::sin(phi)};
    }

    double gauss(double mean, double stddev)
    {
        return mean + stddev * std::sqrt(2.0) * cgauss(1.0).real();
    }

    // Knuth's product method; fine for the means used here (<= a few hundred).
    int poisson(double mean)
    {
        const double limit = std::exp(-mean);
        int k = 0;
        double p = 1.0;
        do
        {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    // Deterministic child stream, decorrelated from the parent and from other
    // indices. Used to give every Monte Carlo trial its own stream.
    Rng substream(std::uint64_t index) const
    {
        std::uint64_t x = state_[0] ^ (0x9e3779b97f4a7c15ULL * (index + 1));
        x ^= state_[2] + 0xd1b54a32d192ed03ULL;
        return Rng(x);
    }

    static Rng for_trial(std::uint64_t master_seed, std::uint64_t trial)
    {
        return Rng(master_seed).substream(trial);
    }

  private:
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
    static constexpr double pi_ = 3.14159265358979323846;
    std::uint64_t state_[4] = {};
};

} // namespace mmw

#endif
