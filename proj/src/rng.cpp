#include "addsub/rng.hpp"

#include <cmath>
#include <numbers>

namespace addsub {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream RngStream::substream(std::uint64_t i) const {
  return RngStream{splitmix64(seed ^ splitmix64(stream_index + 0x5851f42d4c957f2dULL)), i};
}

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox::Philox(RngStream stream) {
  key_ = {static_cast<std::uint32_t>(stream.seed), static_cast<std::uint32_t>(stream.seed >> 32)};
  counter_ = {0, 0, static_cast<std::uint32_t>(stream.stream_index),
              static_cast<std::uint32_t>(stream.stream_index >> 32)};
}

void Philox::refill() {
  std::array<std::uint32_t, 4> x = counter_;
  std::array<std::uint32_t, 2> k = key_;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, x[0], hi0, lo0);
    mulhilo(kMul1, x[2], hi1, lo1);
    x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  block_ = x;
  next_ = 0;
  // 64-bit block counter in the low words; the stream index owns the high words.
  if (++counter_[0] == 0) ++counter_[1];
}

Philox::result_type Philox::operator()() {
  if (next_ > 2) refill();
  const std::uint64_t v = (static_cast<std::uint64_t>(block_[next_]) << 32) | block_[next_ + 1];
  next_ += 2;
  return v;
}

double Philox::uniform() {
  // 53 random bits centred in their cell, so 0 and 1 are never returned.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double Philox::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Philox::exponential() { return -std::log(uniform()); }

}  // namespace addsub
