#pragma once

#include <cstdint>
#include <random>

namespace pnn {

// splitmix64 finalizer. Used to derive statistically independent substreams
// from a run seed plus structural tags (epoch, batch, example, purpose).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed) { return splitmix64(seed); }

template <typename... Tags>
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag, Tags... rest) {
  return mix_seed(splitmix64(seed ^ splitmix64(tag)),
                  static_cast<std::uint64_t>(rest)...);
}

// Engine for the substream identified by (seed, tags...). Same inputs, same
// stream, on any thread.
template <typename... Tags>
std::mt19937_64 make_rng(std::uint64_t seed, Tags... tags) {
  return std::mt19937_64(mix_seed(seed, static_cast<std::uint64_t>(tags)...));
}

}  // namespace pnn
