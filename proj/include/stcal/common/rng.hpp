#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace stcal {

// splitmix64 finalizer; used to derive independent substream seeds.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index);

// Deterministic random stream. Substreams are derived from (seed, path...) so
// that results never depend on how work is scheduled across threads.
class Rng {
 public:
  using Engine = std::mt19937_64;

  explicit Rng(std::uint64_t seed);

  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  std::uint64_t seed() const { return seed_; }
  // Fresh 64-bit key for deriving a child stream.
  std::uint64_t next_key() { return engine_(); }

  double uniform(double lo, double hi);
  double normal(double mean, double stddev);
  // Inclusive on both ends.
  int uniform_int(int lo, int hi);
  Engine& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  Engine engine_;
};

}  // namespace stcal
