#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "ctrlmv/common.hpp"

namespace ctrlmv {

// Philox4x32-10 counter-based generator (Salmon et al., Random123 family).
// A stream is addressed by (seed, episode, sample); draws advance a 64-bit
// counter within the stream. Streams with distinct addresses are independent,
// so episodes and mini-batch samples can be simulated in any order or in
// parallel and still produce bit-identical results.
class RandomStream {
  public:
    RandomStream(std::uint64_t seed, std::uint64_t episode, std::uint64_t sample)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_{static_cast<std::uint32_t>(episode ^ (episode >> 32)),
                  static_cast<std::uint32_t>(sample ^ (sample >> 32))} {}

    // one 32-bit word
    std::uint32_t next_u32() {
        if (idx_ == 4) refill();
        return block_[idx_++];
    }

    std::uint64_t next_u64() {
        std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // uniform double in the open interval (0, 1)
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * kInv53;
    }

    // standard normal via Box-Muller (pairs cached)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    void fill_normal(Vec& z) {
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal();
    }

    // uniform integer in [0, n)
    std::uint64_t uniform_below(std::uint64_t n) { return next_u64() % n; }

  private:
    static constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53

    void refill() {
        std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(counter_),
                                         static_cast<std::uint32_t>(counter_ >> 32),
                                         stream_[0], stream_[1]};
        std::array<std::uint32_t, 2> key = key_;
        for (int round = 0; round < 10; ++round) {
            std::uint64_t p0 = 0xD2511F53ull * ctr[0];
            std::uint64_t p1 = 0xCD9E8D57ull * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        block_ = ctr;
        ++counter_;
        idx_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 2> stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int idx_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// SplitMix-style diffusion for deriving independent run seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

}  // namespace ctrlmv
