#pragma once

// Building an initialized model state from a topology description and data.

#include <optional>

#include "trainer.hpp"

namespace svgp {

struct LayerTopology {
  std::size_t outputs = 0;  // 0 on the final layer: whatever the likelihood consumes
  std::size_t num_inducing = 20;
  MixingKind mixing = MixingKind::kSeparate;
  std::size_t latent_outputs = 0;  // D_g for LMC; 0 means D
  bool shared_inducing = true;     // false: one latent block (own Z) per latent output
  InducingKind inducing = InducingKind::kDirac;
  std::optional<double> kernel_variance;  // default: 1 at the end, 0.1 inside
  double lengthscale = 1.0;
  std::optional<MeanFamily> mean;  // default: identity/linear inside, zero at the end
  std::optional<double> q_sqrt_scale;  // default: 1 at the end, 1e-5 inside
};

struct ModelTopology {
  std::vector<LayerTopology> layers{LayerTopology{}};
  std::size_t latent_dim = 0;
  LikelihoodKind likelihood = LikelihoodKind::kGaussian;
  double noise_variance = 0.1;
  Whitening whitening = Whitening::kFull;
  double latent_mean_scale = 0.0;  // q(h_n) means start at this times N(0, 1)
  double latent_scale = 1.0;       // q(h_n) standard deviations start here
};

ModelState<double> build_model(const ModelTopology& topo, const Dataset& data, std::uint64_t seed);

}  // namespace svgp
