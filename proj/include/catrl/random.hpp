#pragma once

// Seed derivation and per-stream random draws.
//
// Every stochastic component (each environment, each action sampler, the
// minibatch shuffler, ...) owns its own RandomStream derived from the master
// seed.  Streams never share state, so serial and sharded collection produce
// bit-identical results and a rerun with the same seed reproduces a run
// exactly (within one build).

#include <cmath>
#include <cstdint>
#include <random>

namespace catrl {

// splitmix64 step; good avalanche, used only to derive stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Independent seed for stream `stream` (optionally salted by purpose).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t salt = 0) {
  std::uint64_t s = master;
  (void)splitmix64(s);
  s ^= 0x517cc1b727220a95ull * (stream + 1);
  (void)splitmix64(s);
  s ^= 0x2545f4914f6cdd1dull * (salt + 1);
  return splitmix64(s);
}

// mt19937_64 plus explicit uniform/gaussian mappings.  The mappings are
// written out (instead of std::*_distribution) so draws are identical across
// standard libraries and fully under our control.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1), 53-bit resolution
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // uniform integer in [0, n)
  std::uint64_t uniform_index(std::uint64_t n) {
    // modulo bias is negligible for the small n used here, but reject anyway
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
  }

  // standard normal via Box-Muller; second value of each pair is cached
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps log() finite
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace catrl
