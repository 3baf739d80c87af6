#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "geomask/errors.hpp"

namespace geomask {

/// SplitMix64 finalizer. A bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic random stream keyed by (seed, stream_id).
///
/// The engine is xoshiro256**. Each of its four state words combines one
/// SplitMix64 output started at `seed` with one started at `stream_id`
/// (the latter passed through an extra keyed mix so the two roles are not
/// interchangeable). Every word depends on both halves of the key; seeding
/// from the seed alone for some words would make streams sharing a seed emit
/// near-identical first draws. All floating-point draws are derived from
/// the 64-bit output with fixed formulas, which keeps sequences identical
/// across platforms and standard libraries.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept : seed_(seed), stream_id_(stream_id) {
    std::uint64_t a = seed;
    std::uint64_t b = stream_id;
    for (auto& w : s_) w = splitmix_next(a) ^ mix64(splitmix_next(b) ^ 0xd1b54a32d192ed03ULL);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9e3779b97f4a7c15ULL;
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

  /// Standard normal by Box-Muller; both variates of a pair are used.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  bool bernoulli(double p) noexcept { return uniform01() < p; }

 private:
  static std::uint64_t splitmix_next(std::uint64_t& state) noexcept {
    state += 0x9e3779b97f4a7c15ULL;
    return mix64(state);
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t s_[4]{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Stream for replication `rep_index` of grid cell `theta_index`.
///
/// stream_id = mix64((theta_index << 32) | rep_index). Both indices must fit
/// in 32 bits, so the packing is injective and mix64 keeps it injective.
/// Theta indices at and above kReservedThetaIndex are reserved for
/// population, choice and efficiency streams.
inline constexpr std::uint64_t kReservedThetaIndex = 0xFFFFFF00ULL;

inline RngStream derive_stream(std::uint64_t seed, std::uint64_t theta_index, std::uint64_t rep_index) {
  if (theta_index > 0xFFFFFFFFULL || rep_index > 0xFFFFFFFFULL) {
    throw InvalidArgument("derive_stream: indices must fit in 32 bits");
  }
  return RngStream(seed, mix64((theta_index << 32) | rep_index));
}

/// Named purposes that live in the reserved theta-index range.
enum class StreamPurpose : std::uint64_t {
  population = kReservedThetaIndex,
  choices = kReservedThetaIndex + 1,
  efficiency_true_choices = kReservedThetaIndex + 2,
  efficiency_masked_choices = kReservedThetaIndex + 3,
  bootstrap = kReservedThetaIndex + 4,
};

inline RngStream purpose_stream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t index = 0) {
  return derive_stream(seed, static_cast<std::uint64_t>(purpose), index);
}

}  // namespace geomask
