#pragma once

#include <cstdint>
#include <random>

namespace spdelab {

/// Tags separating the independent streams derived from one master seed.
enum class StreamTag : std::uint64_t {
  trajectory = 0x7472616a65637472ULL,
  gaussian = 0x6761757373696e63ULL,
  jump = 0x6a756d706576656eULL,
  probe = 0x70726f6265766563ULL,
  quadrature = 0x7175616472617475ULL,
};

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-style seed derivation keyed by (master, index, tag). The result depends
/// only on its arguments, never on the order in which streams are requested.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    StreamTag tag) noexcept {
  return splitmix64(splitmix64(splitmix64(master) ^ index) ^ static_cast<std::uint64_t>(tag));
}

constexpr std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t trajectory) noexcept {
  return derive_seed(master, trajectory, StreamTag::trajectory);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, StreamTag tag) {
  return Engine(derive_seed(seed, 0, tag));
}

}  // namespace spdelab
