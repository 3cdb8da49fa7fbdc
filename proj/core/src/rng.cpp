#include "fractalmix/rng.hpp"

namespace fractalmix {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

CounterRng make_stream(std::uint64_t seed, std::uint64_t stream) noexcept {
  return CounterRng(mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL)));
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(master ^ h);
}

}  // namespace fractalmix
