#pragma once

// Counter-based random streams (Philox4x32-10) and the two primitive
// variates everything else is built on: open-interval uniforms and
// ziggurat normals.

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace bougerol {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint32_t mulhilo32(std::uint32_t a, std::uint32_t b,
                                         std::uint32_t& hi) noexcept {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  return static_cast<std::uint32_t>(product);
}

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline constexpr PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
  constexpr std::uint32_t kM0 = 0xD2511F53U;
  constexpr std::uint32_t kM1 = 0xCD9E8D57U;
  constexpr std::uint32_t kW0 = 0x9E3779B9U;
  constexpr std::uint32_t kW1 = 0xBB67AE85U;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0 = 0;
    std::uint32_t hi1 = 0;
    const std::uint32_t lo0 = mulhilo32(kM0, ctr[0], hi0);
    const std::uint32_t lo1 = mulhilo32(kM1, ctr[2], hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

}  // namespace detail

/// FNV-1a, used to turn test and purpose names into stream ids.
inline constexpr std::uint64_t hash_name(std::string_view name) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Combines stream-id components into one 64-bit stream id.
inline constexpr std::uint64_t mix_stream(std::uint64_t a, std::uint64_t b) noexcept {
  return detail::splitmix64(a ^ detail::splitmix64(b + 0x632BE59BD9B4E019ULL));
}

/// A reproducible random stream. The key is derived from the master seed and
/// the upper half of the 128-bit counter holds the stream id, so distinct
/// (master_seed, stream_id) pairs never share counter space.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept
      : master_seed_(master_seed), stream_id_(stream_id) {
    const std::uint64_t k = detail::splitmix64(master_seed);
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t blocks_used() const noexcept { return block_; }

  /// Child stream for a sub-purpose; independent of this stream's position.
  RngStream substream(std::uint64_t tag) const noexcept {
    return RngStream(master_seed_, mix_stream(stream_id_, tag));
  }

  std::uint64_t next_u64() noexcept {
    if (buffered_ == 0) {
      refill();
    }
    return buffer_[--buffered_];
  }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Unbiased integer in [0, bound) (Lemire's multiply-shift rejection).
  std::uint64_t below(std::uint64_t bound) noexcept {
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double normal() noexcept;

 private:
  void refill() noexcept {
    const detail::PhiloxCounter ctr = {
        static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
    const auto out = detail::philox4x32_10(ctr, key_);
    buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    buffered_ = 2;
    ++block_;
  }

  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  detail::PhiloxKey key_{};
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

namespace detail {

// Ziggurat tables for the standard normal, 128 layers (Doornik's layout).
struct ZigguratTables {
  static constexpr int kLayers = 128;
  static constexpr double kTailStart = 3.442619855899;
  static constexpr double kLayerArea = 9.91256303526217e-3;

  std::array<double, kLayers + 1> x{};
  std::array<double, kLayers> ratio{};

  ZigguratTables() {
    double f = std::exp(-0.5 * kTailStart * kTailStart);
    x[0] = kLayerArea / f;
    x[1] = kTailStart;
    x[kLayers] = 0.0;
    for (int i = 2; i < kLayers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kLayerArea / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < kLayers; ++i) {
      ratio[i] = x[i + 1] / x[i];
    }
  }
};

inline const ZigguratTables& ziggurat_tables() {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace detail

inline double RngStream::normal() noexcept {
  const auto& z = detail::ziggurat_tables();
  for (;;) {
    const std::uint64_t bits = next_u64();
    const auto layer = static_cast<int>(bits & 0x7F);
    const double u = 2.0 * ((static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53) - 1.0;
    if (std::fabs(u) < z.ratio[layer]) {
      return u * z.x[layer];
    }
    if (layer == 0) {
      // Tail beyond the base layer (Marsaglia's exponential rejection).
      double x = 0.0;
      double y = 0.0;
      do {
        x = std::log(uniform()) / detail::ZigguratTables::kTailStart;
        y = std::log(uniform());
      } while (-2.0 * y < x * x);
      return u < 0.0 ? x - detail::ZigguratTables::kTailStart
                     : detail::ZigguratTables::kTailStart - x;
    }
    const double x = u * z.x[layer];
    const double f0 = std::exp(-0.5 * (z.x[layer] * z.x[layer] - x * x));
    const double f1 = std::exp(-0.5 * (z.x[layer + 1] * z.x[layer + 1] - x * x));
    if (f1 + uniform() * (f0 - f1) < 1.0) {
      return x;
    }
  }
}

}  // namespace bougerol
