#pragma once

#include <array>
#include <cstdint>

namespace addsub {

/// Identifies an independent random stream. The sequence produced for a
/// given (seed, stream_index) never depends on scheduling.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;

  /// Child stream family: draw i of a Monte Carlo loop uses substream(i).
  /// Distinct (seed, stream_index) parents give unrelated families.
  [[nodiscard]] RngStream substream(std::uint64_t i) const;

  friend bool operator==(const RngStream&, const RngStream&) = default;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Satisfies UniformRandomBitGenerator so it works with <random>.
class Philox {
 public:
  using result_type = std::uint64_t;

  explicit Philox(RngStream stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double exponential();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 4> block_{};
  int next_ = 4;
};

}  // namespace addsub
