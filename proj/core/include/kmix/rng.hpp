#pragma once

#include <array>
#include <cmath>
#include <cstdint>

// Counter-based random number streams.
//
// Every random draw in this project is a pure function of
// (master seed, stream index, step index, draw index within the step), so an
// ensemble can be sharded across any number of workers and still produce
// bit-identical results. The generator is Philox4x32-10 (Salmon, Moraes,
// Dror, Shaw, SC'11), a 10-round bijective mixer on a 128-bit counter with a
// 64-bit key.

namespace kmix {

namespace philox {

inline constexpr std::uint32_t kMult0 = 0xD2511F53u;
inline constexpr std::uint32_t kMult1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

// One 128-bit block: counter (ctr_hi, ctr_lo), key -> 4 x u32.
inline std::array<std::uint32_t, 4> block(std::uint64_t key, std::uint64_t ctr_hi,
                                          std::uint64_t ctr_lo) noexcept {
  std::uint32_t c0 = static_cast<std::uint32_t>(ctr_lo);
  std::uint32_t c1 = static_cast<std::uint32_t>(ctr_lo >> 32);
  std::uint32_t c2 = static_cast<std::uint32_t>(ctr_hi);
  std::uint32_t c3 = static_cast<std::uint32_t>(ctr_hi >> 32);
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMult0) * c0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMult1) * c2;
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    c0 = hi1 ^ c1 ^ k0;
    c1 = lo1;
    c2 = hi0 ^ c3 ^ k1;
    c3 = lo0;
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return {c0, c1, c2, c3};
}

}  // namespace philox

// splitmix64 finalizer; used to derive per-stream Philox keys.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(seed + 0x9E3779B97F4A7C15ull * (stream + 1));
}

// Domain separation tags so distinct consumers of the same master seed never
// share a stream.
inline constexpr std::uint64_t kDispersionTag = 0x64697370ull;
inline constexpr std::uint64_t kTangentTag = 0x74616e67ull;
inline constexpr std::uint64_t kSamplerTag = 0x73616d70ull;
inline constexpr std::uint64_t kScalarTag = 0x7363616cull;
inline constexpr std::uint64_t kBootstrapTag = 0x626f6f74ull;
inline constexpr std::uint64_t kDirectionTag = 0x64697230ull;
inline constexpr std::uint64_t kVerifyTag = 0x76657266ull;
inline constexpr std::uint64_t kSnapshotTag = 0x736e6170ull;

// Standard-normal stream for one (key, substream) pair. Draws are produced by
// Box-Muller on Philox blocks; the block counter starts at zero, so a stream
// is fully determined by its identifiers.
class NormalStream {
 public:
  NormalStream(std::uint64_t key, std::uint64_t substream) noexcept
      : key_(key), hi_(substream) {}

  double next() noexcept {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const auto b = philox::block(key_, hi_, lo_++);
    const double u1 = 1.0 - make_unit(b[0], b[1]);  // (0, 1]
    const double u2 = make_unit(b[2], b[3]);        // [0, 1)
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  void fill(double* out, int n) noexcept {
    for (int i = 0; i < n; ++i) out[i] = next();
  }

  // Uniform in [0, 1); advances the same counter as next().
  double uniform() noexcept {
    const auto b = philox::block(key_, hi_, lo_++);
    return make_unit(b[0], b[1]);
  }

 private:
  static double make_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t x = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>(x >> 11) * 0x1.0p-53;
  }

  std::uint64_t key_;
  std::uint64_t hi_;
  std::uint64_t lo_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace kmix
