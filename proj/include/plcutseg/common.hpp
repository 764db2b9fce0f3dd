#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace plcutseg {

/// Thrown when a caller breaks a documented precondition.
class ContractError : public std::logic_error {
public:
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

/// Thrown for runtime failures (I/O, malformed files, diverged training).
class RuntimeError : public std::runtime_error {
public:
  explicit RuntimeError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

inline void expect(bool cond, const std::string& msg) {
  if (!cond) throw RuntimeError(msg);
}

using Rng = std::mt19937_64;

/// FNV-1a over arbitrary bytes; used for parameter hashing and seed derivation.
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a(s.data(), s.size(), h);
}

/// Derives an independent named RNG stream from a master seed. Every source of
/// randomness in the pipeline goes through here so a single --seed pins a run.
inline Rng seeded_rng(std::uint64_t seed, const std::string& stream, std::uint64_t index = 0) {
  std::uint64_t h = fnv1a(stream);
  h = fnv1a(&seed, sizeof(seed), h);
  h = fnv1a(&index, sizeof(index), h);
  return Rng(h);
}

}  // namespace plcutseg
