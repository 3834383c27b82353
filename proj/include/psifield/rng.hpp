#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace psifield {

/// Philox4x32-10 (Salmon et al., SC'11). Stateless: output is a pure function
/// of (counter, key), which is what makes per-trajectory streams independent
/// of scheduling.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Identity of one trajectory's noise.
struct NoiseSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// Independent purposes drawn from the same (seed, stream) pair.
enum class StreamPurpose : std::uint32_t { increments = 0, initial_sample = 1 };

/// Sequential reader over one Philox substream: counter = (stream, block,
/// purpose), key = master seed. Produces uniforms in (0, 1) with 53 random
/// bits and standard normals by Box-Muller (two per block).
class RandomStream {
 public:
  RandomStream() = default;
  explicit RandomStream(NoiseSpec spec, StreamPurpose purpose = StreamPurpose::increments)
      : key_{static_cast<std::uint32_t>(spec.master_seed), static_cast<std::uint32_t>(spec.master_seed >> 32)},
        stream_lo_(static_cast<std::uint32_t>(spec.stream_id)),
        stream_hi_(static_cast<std::uint32_t>(spec.stream_id >> 32)),
        purpose_(static_cast<std::uint32_t>(purpose)) {}

  /// Uniform in the open interval (0, 1).
  double uniform() {
    if (cursor_ >= 2) refill();
    return uniforms_[cursor_++];
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t blocks_consumed() const { return block_; }

 private:
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  void refill() {
    const auto out = Philox4x32::generate(
        {stream_lo_, stream_hi_, static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32) ^ (purpose_ << 24)},
        key_);
    ++block_;
    uniforms_ = {to_unit(out[0], out[1]), to_unit(out[2], out[3])};
    cursor_ = 0;
  }

  Philox4x32::Key key_{0, 0};
  std::uint32_t stream_lo_ = 0;
  std::uint32_t stream_hi_ = 0;
  std::uint32_t purpose_ = 0;
  std::uint64_t block_ = 0;
  std::array<double, 2> uniforms_{};
  int cursor_ = 2;
  double spare_ = 0;
  bool has_spare_ = false;
};

}  // namespace psifield
