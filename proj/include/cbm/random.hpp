#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace cbm {

/// Philox4x32-10 block function. Exposed for known-answer testing.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Counter-based random stream keyed by (seed, stream_id).
///
/// The seed is the Philox key and the stream id occupies the upper half of the
/// 128-bit counter, so every (seed, stream_id) pair addresses a disjoint run of
/// 2^64 blocks. Streams are cheap to create and can be handed to worker threads.
/// Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : seed_(seed), stream_id_(stream_id) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Uniform double on the open interval (0, 1), 53 bits of resolution.
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

/// Purpose tags folded into the high byte of a stream id so that the streams a
/// component derives from one master seed never collide.
enum class StreamPurpose : std::uint64_t {
  Degradation = 1,
  Repair = 2,
  Exploration = 3,
  Replay = 4,
  Initialization = 5,
};

constexpr std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t index) noexcept {
  return (static_cast<std::uint64_t>(purpose) << 56) | (index & ((1ULL << 56) - 1));
}

struct TruncNormalParams {
  double mu = 0.0;
  double sigma = 1.0;
  double lower = 0.0;
  double upper = 0.0;

  void validate() const;
};

double sample_std_normal(RngStream& rng);
double sample_gamma(double shape, double rate, RngStream& rng);
double sample_trunc_normal(const TruncNormalParams& p, RngStream& rng);

double std_normal_pdf(double x) noexcept;
double std_normal_cdf(double x) noexcept;
double std_normal_quantile(double p);

}  // namespace cbm
