#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace grdme {

using Rng = std::mt19937_64;

// Stream for trajectory `index` of an ensemble seeded with `master`:
// mt19937_64 initialised through std::seed_seq over the 32-bit halves of
// (master, index). Distinct indices give independent, replayable streams.
inline Rng make_stream(std::uint64_t master, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double exponential(Rng& rng, double rate) { return -std::log1p(-uniform01(rng)) / rate; }

// Uniform integer in [0, n) by multiply-shift on the top 32 bits; n < 2^32.
inline std::uint32_t uniform_index(Rng& rng, std::uint32_t n) {
  return static_cast<std::uint32_t>(((rng() >> 32) * n) >> 32);
}

}  // namespace grdme
