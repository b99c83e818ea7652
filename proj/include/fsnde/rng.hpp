#pragma once

// Counter-based Gaussian increments: Philox4x32-10 keyed by the run seed,
// counter = (step, block, path_lo, path_hi). Every increment is a pure
// function of (seed, path_id, step, component), so paths are reproducible
// and independent of execution order or thread count.

#include <array>
#include <cmath>
#include <cstdint>

namespace fsnde {

namespace philox {

inline constexpr uint32_t kM0 = 0xD2511F53u;
inline constexpr uint32_t kM1 = 0xCD9E8D57u;
inline constexpr uint32_t kW0 = 0x9E3779B9u;
inline constexpr uint32_t kW1 = 0xBB67AE85u;

inline void round_once(std::array<uint32_t, 4>& c, uint32_t k0, uint32_t k1) {
  const uint64_t p0 = static_cast<uint64_t>(kM0) * c[0];
  const uint64_t p1 = static_cast<uint64_t>(kM1) * c[2];
  const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
  const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
}

inline std::array<uint32_t, 4> block(uint64_t seed, std::array<uint32_t, 4> ctr) {
  uint32_t k0 = static_cast<uint32_t>(seed);
  uint32_t k1 = static_cast<uint32_t>(seed >> 32);
  for (int r = 0; r < 10; ++r) {
    round_once(ctr, k0, k1);
    k0 += kW0;
    k1 += kW1;
  }
  return ctr;
}

}  // namespace philox

// Two standard normals from one Philox block via Box-Muller. The uniforms
// take 53 bits each and are offset by half an ulp, so log(0) cannot occur.
inline void normal_pair(uint64_t seed, uint64_t path_id, uint32_t step, uint32_t block_idx,
                        double& z0, double& z1) {
  const auto r = philox::block(
      seed, {step, block_idx, static_cast<uint32_t>(path_id),
             static_cast<uint32_t>(path_id >> 32)});
  const uint64_t u64a = (static_cast<uint64_t>(r[0]) << 32) | r[1];
  const uint64_t u64b = (static_cast<uint64_t>(r[2]) << 32) | r[3];
  const double u1 = (static_cast<double>(u64a >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = (static_cast<double>(u64b >> 11) + 0.5) * 0x1.0p-53;
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * M_PI * u2;
  z0 = rad * std::cos(ang);
  z1 = rad * std::sin(ang);
}

inline double normal_at(uint64_t seed, uint64_t path_id, uint32_t step, uint32_t component) {
  double z0, z1;
  normal_pair(seed, path_id, step, component / 2, z0, z1);
  return (component % 2 == 0) ? z0 : z1;
}

}  // namespace fsnde
