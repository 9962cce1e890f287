#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fedssta {

// Deterministic RNG built on mt19937_64 with hand-rolled value mappings, so
// identical seeds give identical streams on any platform (std::
// distributions are implementation-defined and are deliberately avoided).
//
// child() derives an independent stream from the parent's *seed* (not its
// current state), so derivation order never changes results.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();

  // [0, 1), 53-bit resolution
  double uniform01();
  double uniform(double lo, double hi);
  // Box-Muller, one fresh pair of draws per call
  double normal(double mean = 0.0, double stddev = 1.0);
  // [0, n), n > 0
  std::uint64_t below(std::uint64_t n);

  Rng child(std::string_view tag) const;
  Rng child(std::string_view tag, std::uint64_t a) const;
  Rng child(std::string_view tag, std::uint64_t a, std::uint64_t b) const;
  Rng child(std::string_view tag, std::uint64_t a, std::uint64_t b,
            std::uint64_t c) const;

  // Fisher-Yates
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace fedssta
