#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace pilot::detail {

// mt19937_64 output is fixed by the standard; the reductions here are
// written out so results match across standard libraries, which the
// <random> distributions do not guarantee.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(engine_() % n); }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pilot::detail
