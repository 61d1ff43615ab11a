#pragma once

#include <cstdint>
#include <random>

namespace corrsmooth {

//! Seeded generator used by the simulation harness.
//!
//! Bits come from MT19937-64 (std::mt19937_64, fully specified by the C++
//! standard). Uniforms take the top 53 bits: u = (x >> 11) * 2^-53, in [0, 1).
//! Normals use the Box-Muller transform on two consecutive uniforms,
//! z0 = sqrt(-2 ln(1 - u1)) cos(2 pi u2), z1 = sqrt(-2 ln(1 - u1)) sin(2 pi u2),
//! returned in the order z0, z1. Nothing depends on library-specific
//! distribution objects, so streams reproduce across platforms.
class Rng
{
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double normal();

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

//! SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

//! Seed for child stream `index` of a master seed.
std::uint64_t child_seed(std::uint64_t master, std::uint64_t index);

} // namespace corrsmooth
