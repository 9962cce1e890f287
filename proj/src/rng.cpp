#include "fedssta/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fedssta {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("uniform: lo must be <= hi");
  return lo + (hi - lo) * uniform01();
}

double Rng::normal(double mean, double stddev) {
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("below: n must be > 0");
  // multiply-high range reduction; bias is negligible for desk-scale n
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

namespace {
std::uint64_t mix_tag(std::uint64_t seed, std::string_view tag) {
  return splitmix64(seed ^ fnv1a64(tag));
}
}  // namespace

Rng Rng::child(std::string_view tag) const {
  return Rng(mix_tag(seed_, tag));
}

Rng Rng::child(std::string_view tag, std::uint64_t a) const {
  return Rng(splitmix64(mix_tag(seed_, tag) ^ splitmix64(a)));
}

Rng Rng::child(std::string_view tag, std::uint64_t a, std::uint64_t b) const {
  std::uint64_t h = splitmix64(mix_tag(seed_, tag) ^ splitmix64(a));
  return Rng(splitmix64(h ^ splitmix64(b ^ 0x5851f42d4c957f2dULL)));
}

Rng Rng::child(std::string_view tag, std::uint64_t a, std::uint64_t b,
               std::uint64_t c) const {
  std::uint64_t h = splitmix64(mix_tag(seed_, tag) ^ splitmix64(a));
  h = splitmix64(h ^ splitmix64(b ^ 0x5851f42d4c957f2dULL));
  return Rng(splitmix64(h ^ splitmix64(c ^ 0x14057b7ef767814fULL)));
}

}  // namespace fedssta
