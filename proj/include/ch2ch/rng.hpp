// Self-contained seeded RNG so shuffles and samples are byte-identical
// across platforms and standard libraries (std::shuffle is not).

#pragma once

#include <cstdint>
#include <vector>

namespace ch2ch {

// splitmix64; passes BigCrush-scale statistical needs for shuffling and
// sampling corpus indices.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound) by rejection; bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = ~0ULL - (~0ULL % bound);
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % bound;
  }

  // Uniform in [lo, hi] inclusive.
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double real01() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {  // Fisher-Yates
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace ch2ch
