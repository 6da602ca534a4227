#pragma once

// Counter-based splittable RNG: Philox4x32-10 keyed by the master seed, with
// the path index embedded in the counter block. Stream (seed, i) yields the
// same numbers whether paths run serially or across threads.

#include <array>
#include <cmath>
#include <cstdint>

namespace hetlab {

struct Philox4x32 {
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }
};

class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_id_(stream_id) {}

    // Two independent uniform 64-bit words per Philox block.
    std::uint64_t bits64() {
        if (have_spare_bits_) {
            have_spare_bits_ = false;
            return spare_bits_;
        }
        auto v = next_block();
        spare_bits_ = (static_cast<std::uint64_t>(v[2]) << 32) | v[3];
        have_spare_bits_ = true;
        return (static_cast<std::uint64_t>(v[0]) << 32) | v[1];
    }

    // Uniform on (0, 1), never returning 0 or 1.
    double uniform01() {
        return (static_cast<double>(bits64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal pair by Box-Muller from one Philox block.
    void normal_pair(double& z0, double& z1) {
        auto v = next_block();
        const double u1 =
            (static_cast<double>(((static_cast<std::uint64_t>(v[0]) << 32) | v[1]) >> 11) + 0.5) *
            0x1.0p-53;
        const double u2 =
            (static_cast<double>(((static_cast<std::uint64_t>(v[2]) << 32) | v[3]) >> 11) + 0.5) *
            0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.283185307179586476925286766559 * u2;
        z0 = r * std::cos(t);
        z1 = r * std::sin(t);
    }

    double normal() {
        if (have_spare_normal_) {
            have_spare_normal_ = false;
            return spare_normal_;
        }
        double z0, z1;
        normal_pair(z0, z1);
        spare_normal_ = z1;
        have_spare_normal_ = true;
        return z0;
    }

    std::uint64_t stream_id() const { return stream_id_; }

  private:
    std::array<std::uint32_t, 4> next_block() {
        std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
            static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
        ++counter_;
        return Philox4x32::block(ctr, key_);
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_id_;
    std::uint64_t counter_ = 0;
    std::uint64_t spare_bits_ = 0;
    double spare_normal_ = 0.0;
    bool have_spare_bits_ = false;
    bool have_spare_normal_ = false;
};

}  // namespace hetlab
