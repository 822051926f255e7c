#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstddef>

namespace robinsim {

/// Philox4x64-10 counter-based generator (Salmon et al., Random123).
///
/// Stateless: each (counter, key) pair maps to four independent 64-bit words.
struct Philox4x64 {
  using Counter = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static constexpr std::uint64_t mult0 = 0xD2E7470EE14C6C93ULL;
  static constexpr std::uint64_t mult1 = 0xCA5A826395121157ULL;
  static constexpr std::uint64_t weyl0 = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t weyl1 = 0xBB67AE8584CAA73BULL;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += weyl0;
        key[1] += weyl1;
      }
      const unsigned __int128 p0 = static_cast<unsigned __int128>(mult0) * ctr[0];
      const unsigned __int128 p1 = static_cast<unsigned __int128>(mult1) * ctr[2];
      const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
      const auto lo0 = static_cast<std::uint64_t>(p0);
      const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
      const auto lo1 = static_cast<std::uint64_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

/// Independent random stream for one trajectory.
///
/// Stream `id` under `seed` is a xoshiro256++ generator whose state is the
/// Philox block at counter (0, id, 0, 0) with key (seed, 0). Draw sequences
/// therefore depend only on (seed, id), never on which worker runs the
/// trajectory, and distinct ids start from unrelated states.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t id)
      : state_(Philox4x64::generate({0, id, 0, 0}, {seed, 0})) {
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 0x9E3779B97F4A7C15ULL;
  }

  std::uint64_t next_u64() {
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

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1), never exactly 0 or 1.
  double open_uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal variate (256-layer ziggurat).
  double normal();

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  Philox4x64::Counter state_;
};

namespace detail {

/// Tables of the 256-layer Marsaglia-Tsang ziggurat for the standard normal,
/// scaled for 52-bit magnitudes.
struct ZigguratTables {
  static constexpr double r = 3.6541528853610088;          // start of the tail
  static constexpr double area = 4.92867323399e-3;         // area of each layer
  static constexpr double scale = 4503599627370496.0;      // 2^52

  std::array<std::uint64_t, 256> k{};
  std::array<double, 256> w{};
  std::array<double, 256> f{};

  ZigguratTables() {
    double edge = r;
    double prev = edge;
    const double q = area / std::exp(-0.5 * edge * edge);
    k[0] = static_cast<std::uint64_t>((edge / q) * scale);
    k[1] = 0;
    w[0] = q / scale;
    w[255] = edge / scale;
    f[0] = 1.0;
    f[255] = std::exp(-0.5 * edge * edge);
    for (int i = 254; i >= 1; --i) {
      edge = std::sqrt(-2.0 * std::log(area / edge + std::exp(-0.5 * edge * edge)));
      k[i + 1] = static_cast<std::uint64_t>((edge / prev) * scale);
      prev = edge;
      f[i] = std::exp(-0.5 * edge * edge);
      w[i] = edge / scale;
    }
  }

  static const ZigguratTables& get() {
    static const ZigguratTables tables;
    return tables;
  }
};

}  // namespace detail

inline double RandomStream::normal() {
  const auto& zt = detail::ZigguratTables::get();
  for (;;) {
    const std::uint64_t bits = next_u64();
    const std::size_t layer = bits & 0xff;
    const bool negative = (bits >> 8) & 1;
    const std::uint64_t magnitude = bits >> 12;  // 52 bits
    const double x = static_cast<double>(magnitude) * zt.w[layer];
    if (magnitude < zt.k[layer]) return negative ? -x : x;
    if (layer == 0) {
      // Tail beyond r by Marsaglia's exponential rejection.
      for (;;) {
        const double tx = -std::log(open_uniform()) / detail::ZigguratTables::r;
        const double ty = -std::log(open_uniform());
        if (ty + ty >= tx * tx) {
          const double v = detail::ZigguratTables::r + tx;
          return negative ? -v : v;
        }
      }
    }
    if (zt.f[layer] + open_uniform() * (zt.f[layer - 1] - zt.f[layer]) < std::exp(-0.5 * x * x)) {
      return negative ? -x : x;
    }
  }
}

}  // namespace robinsim
