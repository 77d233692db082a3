#pragma once

#include <cstdint>
#include <span>

namespace ligs {

// xoshiro256** seeded through splitmix64. Every draw is computed with integer
// arithmetic and explicit bit-to-double conversion, so a given seed produces the
// same stream on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  // Substream keyed on (seed, stream_id) only; the parent's position in its
  // own stream does not matter.
  Rng fork(std::uint64_t stream_id) const;

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  // Index drawn from unnormalized nonnegative weights.
  int categorical(std::span<const double> probs);

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

// Stream ids for seed-derived substreams. Each actor forks its own Rng and then
// forks one of these per module, so adding actors never shifts other draws.
namespace streams {
inline constexpr std::uint64_t kEnv = 1;
inline constexpr std::uint64_t kAgents = 2;
inline constexpr std::uint64_t kGenerator = 3;
inline constexpr std::uint64_t kInit = 4;
inline constexpr std::uint64_t kMinibatch = 5;
inline constexpr std::uint64_t kOpponent = 6;
inline constexpr std::uint64_t kActorBase = 1000;
}  // namespace streams

}  // namespace ligs
