#pragma once

// Counter-based random number generation (Philox4x32-10).
//
// Every consumer of randomness in this library draws from an RngStream,
// which is addressed by (seed, stream). Streams with distinct ids are
// statistically independent, so parallel workers can each own the stream
// for their replicate index and produce results that do not depend on
// scheduling. All integer arithmetic, so sequences are identical across
// platforms.

#include <array>
#include <cmath>
#include <cstdint>

namespace nma {

namespace detail {

struct PhiloxBlock {
  std::array<std::uint32_t, 4> x;
};

// One 10-round Philox4x32 keystream block (constants from Salmon et al. 2011).
inline PhiloxBlock philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                 std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
    const std::array<std::uint32_t, 4> next = {
        static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
        static_cast<std::uint32_t>(p1),
        static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
        static_cast<std::uint32_t>(p0)};
    ctr = next;
    key[0] += W0;
    key[1] += W1;
  }
  return PhiloxBlock{ctr};
}

}  // namespace detail

// A deterministic stream of random numbers: block b of stream s under seed k
// is philox4x32_10(ctr = (b_lo, b_hi, s_lo, s_hi), key = (k_lo, k_hi)).
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint32_t next_u32() {
    if (have_ == 0) refill();
    return buf_[--have_];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform on [2^-54, 1 - 2^-53]; never 0 or 1, safe under log and logit.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  // Uniform integer in [0, n). Multiply-shift map; bias < n/2^64.
  std::uint64_t uniform_below(std::uint64_t n) {
    const unsigned __int128 m =
        static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(m >> 64);
  }

  double normal(double mean = 0.0, double sd = 1.0);
  long poisson(double mean);

 private:
  void refill() {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    const std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
    const auto out = detail::philox4x32_10(ctr, key);
    for (int i = 0; i < 4; ++i) buf_[i] = out.x[i];
    have_ = 4;
    ++block_;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::uint32_t buf_[4] = {};
  int have_ = 0;
};

// Standard normal quantile function, Wichura's AS241 (PPND16).
double norm_ppf(double p);

// Derive an independent child seed (splitmix64 finalizer); used to give
// each simulation replicate its own seed for generation and bootstrap.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Stream ids for the different consumers; replicate indexes are mixed in so
// that replicate r of one purpose never collides with another purpose.
namespace stream_id {
constexpr std::uint64_t bootstrap(std::uint64_t replicate) {
  return 0x1000000000000000ull + replicate;
}
constexpr std::uint64_t sim_study(std::uint64_t replicate, std::uint64_t study) {
  return 0x2000000000000000ull + replicate * 0x100000ull + study;
}
constexpr std::uint64_t generic(std::uint64_t k) {
  return 0x3000000000000000ull + k;
}
}  // namespace stream_id

}  // namespace nma
