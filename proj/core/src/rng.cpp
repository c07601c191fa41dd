#include "rsplit/rng.hpp"

#include <cmath>

namespace rsplit {

namespace {
__extension__ typedef unsigned __int128 u128;
}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  std::uint64_t state = seed;
  std::uint64_t key = splitmix64(state);
  state = key ^ (index * 0xD1B54A32D192ED03ULL);
  key = splitmix64(state);
  return splitmix64(state) ^ key;
}

Rng::Rng(std::uint64_t seed) noexcept {
  std::uint64_t state = seed;
  for (auto& word : s_) word = splitmix64(state);
}

std::uint64_t Rng::below(std::uint64_t bound) noexcept {
  if (bound <= 1) return 0;
  u128 m = static_cast<u128>((*this)()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = -bound % bound;
    while (low < threshold) {
      m = static_cast<u128>((*this)()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal() noexcept {
  double u = 0.0, v = 0.0, s = 0.0;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  // Only one of the pair is returned so the stream position stays simple.
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

}  // namespace rsplit
