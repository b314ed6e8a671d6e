#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace keat {

using Rng = std::mt19937_64;

/// Seed for a named substream of a run seed, e.g. substream_seed(7, "train").
/// Components seeded this way can be reproduced in isolation.
[[nodiscard]] auto substream_seed(std::uint64_t seed, std::string_view name) -> std::uint64_t;
[[nodiscard]] auto substream_seed(std::uint64_t seed, std::string_view name, std::uint64_t index)
    -> std::uint64_t;
[[nodiscard]] auto make_rng(std::uint64_t seed, std::string_view name) -> Rng;

/// Uniform double in [0, 1) from the top 53 bits of one draw.
[[nodiscard]] inline auto uniform01(Rng& rng) -> double {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace keat
