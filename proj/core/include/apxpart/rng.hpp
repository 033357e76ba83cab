#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace apxpart {

// Seeded generator whose output is fixed across platforms.
//
// std::mt19937_64 has a standard-mandated output sequence, but the standard
// distributions (and std::shuffle) do not, so the helpers below derive bounded
// integers and unit doubles from raw 64-bit draws themselves:
//   - uniform_below(n): rejection sampling, discarding draws below 2^64 mod n,
//     then taking the draw mod n.
//   - unit(): top 53 bits of one draw scaled by 2^-53, in [0, 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  std::uint64_t uniform_below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = engine_();
      if (x >= threshold) return x % n;
    }
  }

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

// Uniformly random permutation of 0..n-1 (Fisher-Yates, back to front).
inline std::vector<std::uint64_t> random_permutation(std::uint64_t n, std::uint64_t seed) {
  std::vector<std::uint64_t> order(n);
  std::iota(order.begin(), order.end(), std::uint64_t{0});
  Rng rng(seed);
  for (std::uint64_t i = n; i > 1; --i) {
    const std::uint64_t j = rng.uniform_below(i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

// Visit order of a pointer chase through a single random cycle (Sattolo's
// algorithm), starting at element 0.
inline std::vector<std::uint64_t> chase_order(std::uint64_t n, std::uint64_t seed) {
  if (n == 0) return {};
  std::vector<std::uint64_t> next(n);
  std::iota(next.begin(), next.end(), std::uint64_t{0});
  Rng rng(seed);
  for (std::uint64_t i = n; i > 1; --i) {
    const std::uint64_t j = rng.uniform_below(i - 1);
    std::swap(next[i - 1], next[j]);
  }
  std::vector<std::uint64_t> order;
  order.reserve(n);
  std::uint64_t cur = 0;
  for (std::uint64_t k = 0; k < n; ++k) {
    order.push_back(cur);
    cur = next[cur];
  }
  return order;
}

}  // namespace apxpart
