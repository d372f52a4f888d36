#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ergosim {

// Named RNG streams. Every realization of an experiment derives its own
// independent streams from (master_seed, realization_index, role), so results
// do not depend on scheduling or worker count.
enum class StreamRole : std::uint64_t {
  initial_state = 1,
  disorder = 2,
  gates = 3,
  generic = 4,
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Stable hash-based seed derivation (splitmix64 chain). Platform-independent.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t realization,
                                 StreamRole role) {
  std::uint64_t s = master;
  std::uint64_t a = detail::splitmix64(s);
  s ^= realization * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull;
  std::uint64_t b = detail::splitmix64(s);
  s ^= static_cast<std::uint64_t>(role) * 0x9e6c63d0876a9a47ull;
  std::uint64_t c = detail::splitmix64(s);
  return a ^ (b << 1) ^ c;
}

// Seed for a gate at (layer, position) within a realization's gate stream;
// makes sampled circuits reproducible gate-by-gate.
inline std::uint64_t derive_gate_seed(std::uint64_t gate_stream_seed,
                                      std::uint64_t layer, std::uint64_t position) {
  std::uint64_t s = gate_stream_seed ^ (layer * 0xda942042e4dd58b5ull);
  detail::splitmix64(s);
  s ^= position * 0xca5a826395121157ull;
  return detail::splitmix64(s);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace ergosim
