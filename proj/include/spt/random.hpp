#pragma once

// Counter-based random streams.
//
// Every shot of an experiment draws from its own Philox4x32-10 stream keyed
// by the run seed and indexed by the shot number, so results do not depend
// on how shots are scheduled across threads.

#include <array>
#include <cstdint>
#include <limits>

namespace spt {

/// The Philox4x32 block function with 10 rounds (Salmon et al., SC'11).
class Philox4x32 {
  public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            ctr = single_round(ctr, key);
        }
        return ctr;
    }

  private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static Counter single_round(const Counter& c, const Key& k) noexcept {
        const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
        const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// UniformRandomBitGenerator over one Philox substream.
///
/// The key holds the 64-bit seed, the upper counter half holds the 64-bit
/// stream id and the lower half counts blocks within the stream.
class StreamRng {
  public:
    using result_type = std::uint32_t;

    StreamRng(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept {
        if (used_ == 4) refill();
        return buffer_[used_++];
    }

    std::uint64_t seed() const noexcept {
        return (std::uint64_t{key_[1]} << 32) | key_[0];
    }
    std::uint64_t stream() const noexcept { return stream_; }

  private:
    void refill() noexcept {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                      static_cast<std::uint32_t>(block_ >> 32),
                                      static_cast<std::uint32_t>(stream_),
                                      static_cast<std::uint32_t>(stream_ >> 32)};
        buffer_ = Philox4x32::block(ctr, key_);
        ++block_;
        used_ = 0;
    }

    Philox4x32::Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    Philox4x32::Counter buffer_{};
    int used_ = 4;
};

using Rng = StreamRng;

/// splitmix64 finalizer; used to derive independent seeds from a master
/// seed and a tag (sweep point, bootstrap domain, ...).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (tag + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Bernoulli trial from a single 32-bit draw. p <= 0 never fires, p >= 1
/// always fires.
inline bool bernoulli(Rng& rng, double p) noexcept {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    constexpr double kScale = 4294967296.0;  // 2^32
    return static_cast<double>(rng()) < p * kScale;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) noexcept {
    const std::uint64_t hi = rng() >> 5;  // 27 bits
    const std::uint64_t lo = rng() >> 6;  // 26 bits
    return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
}

int poisson(Rng& rng, double mean);
int binomial(Rng& rng, int trials, double p);

}  // namespace spt
