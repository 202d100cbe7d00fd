#include "rng.hpp"

#include <cmath>
#include <numbers>

namespace svgp {

namespace {

constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85;
constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53;
constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

inline PhiloxCounter round(const PhiloxCounter& c, const PhiloxKey& k) {
  std::uint32_t lo0, hi0, lo1, hi1;
  mulhilo(kPhiloxM4x32A, c[0], lo0, hi0);
  mulhilo(kPhiloxM4x32B, c[2], lo1, hi1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

// 53-bit uniform in (0, 1) from two 32-bit words.
inline double to_unit(std::uint32_t a, std::uint32_t b) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(a >> 5) << 26) | (b >> 6);
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key) {
  for (int r = 0; r < 10; ++r) {
    counter = round(counter, key);
    key[0] += kPhiloxW32A;
    key[1] += kPhiloxW32B;
  }
  return counter;
}

RngStream::RngStream(std::uint64_t seed, Purpose purpose, std::uint32_t step,
                     std::uint32_t index, std::uint32_t sample)
    : key_{static_cast<std::uint32_t>(seed),
           static_cast<std::uint32_t>(seed >> 32) ^
               (static_cast<std::uint32_t>(purpose) * kPhiloxM4x32A)},
      step_(step),
      index_(index),
      sample_(sample) {}

std::array<double, 2> RngStream::uniform_pair(std::uint32_t block) const {
  const PhiloxCounter out = philox4x32({block, sample_, index_, step_}, key_);
  return {to_unit(out[0], out[1]), to_unit(out[2], out[3])};
}

double RngStream::uniform(std::uint32_t k) const { return uniform_pair(k / 2)[k % 2]; }

double RngStream::normal(std::uint32_t k) const {
  // Box-Muller on the pair of uniforms of block k/2.
  const auto u = uniform_pair(k / 2);
  const double r = std::sqrt(-2.0 * std::log(u[0]));
  const double theta = 2.0 * std::numbers::pi * u[1];
  return (k % 2 == 0) ? r * std::cos(theta) : r * std::sin(theta);
}

std::vector<double> RngStream::normals(std::uint32_t n) const {
  std::vector<double> out(n);
  for (std::uint32_t k = 0; k < n; k += 2) {
    const auto u = uniform_pair(k / 2);
    const double r = std::sqrt(-2.0 * std::log(u[0]));
    const double theta = 2.0 * std::numbers::pi * u[1];
    out[k] = r * std::cos(theta);
    if (k + 1 < n) out[k + 1] = r * std::sin(theta);
  }
  return out;
}

std::vector<std::size_t> permutation(std::size_t n, const RngStream& stream) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(stream.uniform(static_cast<std::uint32_t>(i)) *
                                            static_cast<double>(i));
    std::swap(p[i - 1], p[j < i ? j : i - 1]);
  }
  return p;
}

}  // namespace svgp
