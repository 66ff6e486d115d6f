#include "nettomo/rng.hpp"

namespace nettomo {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
__extension__ using u128 = unsigned __int128;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed) : key_(mix64(seed ^ 0x5851f42d4c957f2dULL)) {}

RngStream::RngStream(std::uint64_t master_seed, StreamKey key) {
  std::uint64_t k = mix64(master_seed);
  k = mix64(k ^ mix64(key.scenario + 0x1000));
  k = mix64(k ^ mix64(key.run + 0x2000));
  k = mix64(k ^ mix64(key.policy + 0x3000));
  key_ = k;
}

RngStream::result_type RngStream::operator()() {
  const std::uint64_t c = counter_++;
  return mix64(key_ ^ mix64(c * kGolden));
}

double RngStream::uniform() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

std::size_t RngStream::uniform_index(std::size_t n) {
  // Lemire's multiply-shift with rejection; unbiased for any n.
  const std::uint64_t range = n;
  std::uint64_t x = (*this)();
  u128 m = static_cast<u128>(x) * range;
  std::uint64_t low = static_cast<std::uint64_t>(m);
  if (low < range) {
    const std::uint64_t threshold = (0 - range) % range;
    while (low < threshold) {
      x = (*this)();
      m = static_cast<u128>(x) * range;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

}  // namespace nettomo
