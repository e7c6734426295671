#ifndef OLSBPI_RNG_HPP
#define OLSBPI_RNG_HPP

#include <cstdint>

// Deterministic random number generation with a pinned algorithm identity,
// so that a (seed, config) pair reproduces trajectories bit for bit and can
// be re-implemented in another language from this description alone:
//
//   * stream:   xoshiro256** (Blackman & Vigna), state seeded by four
//               successive outputs of splitmix64(seed);
//   * uniform:  double in [0,1) from the top 53 bits, u = (x >> 11) * 2^-53;
//   * normal:   Box-Muller, n = sqrt(-2 ln(1-u1)) * cos(2 pi u2), consuming
//               exactly two fresh uniforms per normal (the sine twin is
//               discarded; no state is cached between calls).

namespace olsbpi {

std::uint64_t splitmix64_next(std::uint64_t& state);

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double next_uniform();  // [0, 1)
  double next_normal();   // standard normal

 private:
  std::uint64_t s_[4];
};

}  // namespace olsbpi

#endif
