#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace svgp {

// What a random draw is used for. Part of the stream key, so draws for
// different purposes never collide.
enum class Purpose : std::uint32_t {
  kPropagate = 1,   // per-layer reparameterized samples in a deep GP
  kLatent = 2,      // h_n ~ q(h_n)
  kMinibatch = 3,   // epoch shuffles
  kInit = 4,        // inducing point and weight initialization
  kDataGen = 5,     // synthetic datasets
  kPredict = 6,     // predictive path sampling
  kOuter = 7,       // outer Monte Carlo repetitions of an estimator
};

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

// Philox4x32-10 block function (Salmon et al., 2011).
PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key);

// Counter-based stream identified by (seed, purpose, step, index, sample).
// Draw k of a stream depends only on the key and k, never on call order.
class RngStream {
 public:
  RngStream(std::uint64_t seed, Purpose purpose, std::uint32_t step, std::uint32_t index,
            std::uint32_t sample);

  // k-th standard normal of the stream.
  double normal(std::uint32_t k) const;
  // k-th uniform in (0, 1).
  double uniform(std::uint32_t k) const;
  // First n standard normals.
  std::vector<double> normals(std::uint32_t n) const;

 private:
  std::array<double, 2> uniform_pair(std::uint32_t block) const;

  PhiloxKey key_;
  std::uint32_t step_;
  std::uint32_t index_;
  std::uint32_t sample_;
};

// Seed-level factory; sample streams with `stream(purpose, step, index, sample)`.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t seed() const { return seed_; }
  RngStream stream(Purpose purpose, std::uint32_t step, std::uint32_t index,
                   std::uint32_t sample = 0) const {
    return RngStream(seed_, purpose, step, index, sample);
  }

 private:
  std::uint64_t seed_;
};

// Deterministic Fisher-Yates permutation of 0..n-1 driven by a stream.
std::vector<std::size_t> permutation(std::size_t n, const RngStream& stream);

}  // namespace svgp
