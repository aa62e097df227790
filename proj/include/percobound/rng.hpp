#pragma once

#include <cstdint>

namespace percobound {

// Counter-based generator: every vertex state is a pure function of
// (seed, replica, vertex id).  There is no sequential stream, so replicas can
// be evaluated in any order on any number of workers, configurations can be
// regenerated bit-identically, and the same uniform drives the open/closed
// decision at every occupation probability p.  The latter yields the monotone
// coupling: open(p) is a subset of open(p') pathwise whenever p <= p'.

inline std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// Uniform in [0,1) with 53 random bits, keyed by (seed, replica, vertex id).
inline double vertex_uniform(std::uint64_t seed, std::uint64_t replica,
                             std::uint64_t vertex_id) {
  std::uint64_t h = mix64(seed + kGolden * (replica + 1));
  h = mix64(h ^ (vertex_id * kGolden + 0x2545f4914f6cdd1dULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Open/closed decision for one vertex; monotone in p by construction.
inline bool vertex_open(std::uint64_t seed, std::uint64_t replica,
                        std::uint64_t vertex_id, double p) {
  return vertex_uniform(seed, replica, vertex_id) < p;
}

}  // namespace percobound
