#include "latcap/rng.hpp"

namespace latcap {

Stream::Stream(std::uint64_t seed) noexcept {
  std::uint64_t x = seed;
  for (auto& word : s_) {
    x += 0x9E3779B97F4A7C15ULL;
    word = splitmix64(x);
  }
}

Stream Stream::derive(std::uint64_t master, std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = splitmix64(master ^ 0x6A09E667F3BCC908ULL);
  for (std::uint64_t t : tags) h = splitmix64(h ^ splitmix64(t + 0x3C6EF372FE94F82BULL));
  return Stream(h);
}

}  // namespace latcap
