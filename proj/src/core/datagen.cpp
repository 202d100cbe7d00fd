#include "datagen.hpp"

#include <cctype>
#include <cmath>

namespace svgp {

namespace {

std::uint32_t u32(std::size_t v) { return static_cast<std::uint32_t>(v); }

enum : std::uint32_t { kSteps = 1, kMixture = 2, kLetters = 3, kPriorDraw = 4 };

constexpr std::array<Glyph, 26> kFont = {{
    {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},  // A
    {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},  // B
    {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E},  // C
    {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C},  // D
    {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F},  // E
    {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},  // F
    {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F},  // G
    {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},  // H
    {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E},  // I
    {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},  // J
    {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11},  // K
    {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},  // L
    {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11},  // M
    {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},  // N
    {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},  // O
    {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},  // P
    {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D},  // Q
    {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},  // R
    {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E},  // S
    {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},  // T
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},  // U
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},  // V
    {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A},  // W
    {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},  // X
    {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04},  // Y
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},  // Z
}};

constexpr Glyph kBlank = {0, 0, 0, 0, 0, 0, 0};

void require_param(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

const Glyph& glyph(char c) {
  if (c == ' ') return kBlank;
  const int u = std::toupper(static_cast<unsigned char>(c));
  if (u < 'A' || u > 'Z') throw ConfigError(std::string("letters: no glyph for '") + c + "'");
  return kFont[static_cast<std::size_t>(u - 'A')];
}

Dataset gen_steps(const StepsParams& p, std::uint64_t seed) {
  require_param(p.n >= 1, "steps: n must be positive");
  require_param(p.hi > p.lo, "steps: hi must exceed lo");
  require_param(p.noise >= 0.0, "steps: noise must be non-negative");
  Dataset d{MatrixD(p.n, 1), MatrixD(p.n, 1)};
  const double width = (p.hi - p.lo) / static_cast<double>(p.jumps + 1);
  for (std::size_t i = 0; i < p.n; ++i) {
    const RngStream s(seed, Purpose::kDataGen, kSteps, u32(i), 0);
    const double x = p.lo + (p.hi - p.lo) * s.uniform(0);
    const auto k = std::min<std::size_t>(p.jumps, static_cast<std::size_t>((x - p.lo) / width));
    d.x(i, 0) = x;
    d.y(i, 0) = (k % 2 == 0 ? 0.0 : 1.0) + p.noise * s.normal(1);
  }
  return d;
}

Dataset gen_mixture(const MixtureParams& p, std::uint64_t seed) {
  require_param(p.n >= 1, "mixture: n must be positive");
  require_param(p.hi > p.lo, "mixture: hi must exceed lo");
  require_param(p.noise >= 0.0 && p.gap >= 0.0, "mixture: noise and gap must be non-negative");
  Dataset d{MatrixD(p.n, 1), MatrixD(p.n, 1)};
  for (std::size_t i = 0; i < p.n; ++i) {
    const RngStream s(seed, Purpose::kDataGen, kMixture, u32(i), 0);
    const double x = p.lo + (p.hi - p.lo) * s.uniform(0);
    const double branch = s.uniform(1) < 0.5 ? 0.5 : -0.5;
    d.x(i, 0) = x;
    d.y(i, 0) = std::sin(1.5 * x) + branch * p.gap + p.noise * s.normal(2);
  }
  return d;
}

Dataset gen_letters(const LettersParams& p, std::uint64_t seed) {
  require_param(!p.text.empty(), "letters: text must not be empty");
  require_param(p.scale >= 1, "letters: scale must be positive");
  require_param(p.noise >= 0.0, "letters: noise must be non-negative");
  // Glyphs are 5 columns wide with one blank column between them.
  const std::size_t width = 6 * p.text.size() - 1;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t c = 0; c < p.text.size(); ++c) {
    const Glyph& g = glyph(p.text[c]);
    for (std::size_t row = 0; row < 7; ++row)
      for (std::size_t col = 0; col < 5; ++col)
        if (g[row] & (0x10 >> col))
          for (std::size_t k = 0; k < p.scale; ++k) {
            const double x = (static_cast<double>(6 * c + col) + 0.5) / static_cast<double>(width);
            const double y = (6.5 - static_cast<double>(row)) / 7.0;
            pts.emplace_back(x, y);
          }
  }
  if (pts.empty()) throw ConfigError("letters: text has no lit pixels");
  Dataset d{MatrixD(pts.size(), 1), MatrixD(pts.size(), 1)};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double jx = 0.0, jy = 0.0;
    if (p.noise > 0.0) {
      const RngStream s(seed, Purpose::kDataGen, kLetters, u32(i), 0);
      jx = p.noise * s.normal(0);
      jy = p.noise * s.normal(1);
    }
    d.x(i, 0) = pts[i].first + jx;
    d.y(i, 0) = pts[i].second + jy;
  }
  return d;
}

Dataset gen_prior_draws(const PriorDrawParams& p, std::uint64_t seed) {
  require_param(p.depth >= 1 && p.depth <= 8, "prior-draw: depth must be between 1 and 8");
  require_param(p.grid >= 2, "prior-draw: grid needs at least 2 points");
  require_param(p.hi > p.lo, "prior-draw: hi must exceed lo");
  require_param(p.lengthscale > 0.0 && p.variance > 0.0,
                "prior-draw: lengthscale and variance must be positive");
  require_param(p.draws >= 1, "prior-draw: draws must be positive");
  // Prior-state layers: q(w) = N(0, I) makes every layer's predictive equal
  // its prior, whatever the inducing point.
  DeepModel<double> model;
  for (std::size_t l = 0; l < p.depth; ++l) {
    SVGPLayer<double> g;
    g.kernel.variance = p.variance;
    g.kernel.lengthscales = {p.lengthscale};
    g.mean.input_dim = 1;
    g.inducing.points = MatrixD(1, 1);
    g.vstate.q_mean = MatrixD(1, 1);
    g.vstate.q_sqrt = {MatrixD::identity(1)};
    MOLayer<double> mo;
    mo.latents.push_back(std::move(g));
    model.layers.push_back(std::move(mo));
  }
  Dataset d{MatrixD(p.grid, 1), MatrixD(p.grid, p.draws)};
  for (std::size_t i = 0; i < p.grid; ++i)
    d.x(i, 0) = p.lo + (p.hi - p.lo) * static_cast<double>(i) / static_cast<double>(p.grid - 1);
  const auto paths = sample_paths(model, d.x, p.draws, EvalSettings{seed, kPriorDraw, {}});
  for (std::size_t k = 0; k < p.draws; ++k)
    for (std::size_t i = 0; i < p.grid; ++i) d.y(i, k) = paths[k].back()(i, 0);
  return d;
}

}  // namespace svgp
