#include "keat/rng.hpp"

namespace keat {

namespace {

// splitmix64 finalizer
auto mix(std::uint64_t x) -> std::uint64_t {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

auto fnv1a(std::string_view s) -> std::uint64_t {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

auto substream_seed(std::uint64_t seed, std::string_view name) -> std::uint64_t {
  return mix(mix(seed) ^ fnv1a(name));
}

auto substream_seed(std::uint64_t seed, std::string_view name, std::uint64_t index)
    -> std::uint64_t {
  return mix(substream_seed(seed, name) ^ mix(index + 1));
}

auto make_rng(std::uint64_t seed, std::string_view name) -> Rng {
  return Rng(substream_seed(seed, name));
}

}  // namespace keat
