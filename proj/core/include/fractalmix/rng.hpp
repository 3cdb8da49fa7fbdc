#pragma once

#include <cstdint>
#include <string_view>

namespace fractalmix {

/// Counter-based generator: the n-th output of a stream is a bijective mix
/// of (key, n), so any (seed, stream) pair can be replayed independently.
/// Streams are cheap to create; one is used per Monte Carlo sample.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() noexcept {
    std::uint64_t z = key_ + (++counter_) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound). Multiply-shift; bias is below 2^-64*bound.
  std::uint64_t bounded(std::uint64_t bound) noexcept {
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>(next_u64()) * bound) >> 64);
  }

  // Fair coin, drawn from a buffered 64-bit word.
  bool coin() noexcept {
    if (bits_left_ == 0) {
      bit_buffer_ = next_u64();
      bits_left_ = 64;
    }
    const bool b = bit_buffer_ & 1U;
    bit_buffer_ >>= 1;
    --bits_left_;
    return b;
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::uint64_t bit_buffer_ = 0;
  unsigned bits_left_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

// Stream for sample `stream` of an experiment seeded with `seed`.
CounterRng make_stream(std::uint64_t seed, std::uint64_t stream) noexcept;

// Sub-experiment seed from a master seed and a name (FNV-1a of the name).
std::uint64_t derive_seed(std::uint64_t master, std::string_view name) noexcept;

}  // namespace fractalmix
