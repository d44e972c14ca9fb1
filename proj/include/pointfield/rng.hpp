#pragma once

// Counter-based random streams (Philox 4x32-10).
//
// Every consumer of randomness owns a RandomStream identified by
// (seed, stream_id). Streams with distinct ids are statistically
// independent and can be drawn from in any order across threads, so a
// parallel run reproduces the serial one bit for bit.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace pointfield {

namespace detail {

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo,
                      std::uint32_t& hi) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
}

// Philox 4x32 round and key schedule constants (Salmon et al., SC 2011).
inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline std::array<std::uint32_t, 4> philox10(std::array<std::uint32_t, 4> ctr,
                                             std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t lo0, hi0, lo1, hi1;
        mul_hi_lo(kPhiloxM0, ctr[0], lo0, hi0);
        mul_hi_lo(kPhiloxM1, ctr[2], lo1, hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

}  // namespace detail

/// Composes a 64-bit stream id from an experiment context and a replica
/// index, so independent estimators never share a stream.
inline constexpr std::uint64_t make_stream_id(std::uint32_t context,
                                              std::uint32_t index) {
    return (static_cast<std::uint64_t>(context) << 32) | index;
}

/// One independent random stream. Cheap to construct; all state is a
/// 128-bit counter plus a small output buffer.
class RandomStream {
  public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_{static_cast<std::uint32_t>(seed),
               static_cast<std::uint32_t>(seed >> 32)},
          stream_{static_cast<std::uint32_t>(stream_id),
                  static_cast<std::uint32_t>(stream_id >> 32)} {}

    std::uint64_t next_u64() {
        if (buffered_ == 0) refill();
        return buffer_[--buffered_];
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via the Marsaglia polar method (second value cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    /// Poisson count by Knuth's product method; means above 500 are split
    /// into chunks so the exp() threshold never underflows.
    std::uint64_t poisson(double mean) {
        if (!(mean >= 0.0))
            throw std::invalid_argument("poisson: mean must be >= 0");
        std::uint64_t total = 0;
        while (mean > 500.0) {
            total += poisson_chunk(500.0);
            mean -= 500.0;
        }
        return total + poisson_chunk(mean);
    }

  private:
    std::uint64_t poisson_chunk(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    void refill() {
        const auto out = detail::philox10(
            {static_cast<std::uint32_t>(block_),
             static_cast<std::uint32_t>(block_ >> 32), stream_[0], stream_[1]},
            key_);
        ++block_;
        buffer_[0] = out[0] | (static_cast<std::uint64_t>(out[1]) << 32);
        buffer_[1] = out[2] | (static_cast<std::uint64_t>(out[3]) << 32);
        buffered_ = 2;
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 2> stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace pointfield
