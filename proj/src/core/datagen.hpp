#pragma once

// Synthetic datasets: piecewise-constant steps, a two-branch mixture, the
// dark pixels of rasterized letters, and deep-GP prior draws on a grid.

#include <array>
#include <string>

#include "trainer.hpp"

namespace svgp {

struct StepsParams {
  std::size_t n = 200;
  std::size_t jumps = 3;
  double lo = -1.0, hi = 1.0;
  double noise = 0.05;
};

struct MixtureParams {
  std::size_t n = 500;
  double gap = 2.0;  // vertical distance between the two branches
  double noise = 0.1;
  double lo = -3.0, hi = 3.0;
};

struct LettersParams {
  std::string text = "DGP";
  std::size_t scale = 1;  // points per lit pixel
  double noise = 0.0;     // jitter standard deviation, in normalized units
};

struct PriorDrawParams {
  std::size_t depth = 1;
  std::size_t grid = 200;
  double lo = 0.0, hi = 10.0;
  double lengthscale = 0.7;
  double variance = 1.0;
  std::size_t draws = 5;
};

Dataset gen_steps(const StepsParams& p, std::uint64_t seed);
Dataset gen_mixture(const MixtureParams& p, std::uint64_t seed);
Dataset gen_letters(const LettersParams& p, std::uint64_t seed);

// Grid in x, one target column per draw holding the depth-L output.
Dataset gen_prior_draws(const PriorDrawParams& p, std::uint64_t seed);

// Rows of a 5 x 7 glyph, top first; bit 4 is the leftmost column.
using Glyph = std::array<std::uint8_t, 7>;
const Glyph& glyph(char c);

}  // namespace svgp
