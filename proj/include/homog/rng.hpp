#pragma once

// Counter-based random numbers (Philox4x32-10). Every variate is a pure
// function of (seed, stream, replica, step, component), so results do not
// depend on evaluation order or thread count.

#include <array>
#include <cstdint>

namespace homog::rng {

enum class Stream : std::uint32_t {
  macro = 1,   // Brownian increments of the slow/homogenized equation
  micro = 2,   // HMM micro-solver bursts
  fast = 3,    // fast noise in direct multiscale simulation
  initial = 4, // random initial states
  test = 15,
};

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

Counter philox4x32(Counter ctr, Key key);

struct Address {
  Stream stream;
  std::uint32_t replica;
  std::uint64_t step;
  std::uint32_t component;  // < 2^24
};

/// Uniform in (0, 1) with 53 random bits.
double uniform(std::uint64_t seed, const Address& a);

/// Standard normal by inversion of the CDF.
double normal(std::uint64_t seed, const Address& a);

double inverse_normal_cdf(double p);

}  // namespace homog::rng
