#include "init.hpp"

namespace svgp {

namespace {

std::uint32_t u32(std::size_t v) { return static_cast<std::uint32_t>(v); }

// Inner-layer prior mean: identity when widths agree, otherwise a linear map
// with a truncated or padded identity weight.
MeanSpec<double> inner_mean(std::size_t in, std::size_t out, std::optional<MeanFamily> family) {
  MeanSpec<double> m;
  m.input_dim = in;
  m.output_dim = out;
  m.family = family.value_or(in == out ? MeanFamily::kIdentity : MeanFamily::kLinear);
  if (m.family == MeanFamily::kIdentity && in != out)
    throw ConfigError("identity mean needs equal input and output widths (" + std::to_string(in) +
                      " vs " + std::to_string(out) + ")");
  if (m.family == MeanFamily::kLinear) {
    m.weight = MatrixD(out, in);
    for (std::size_t g = 0; g < std::min(in, out); ++g) m.weight(g, g) = 1.0;
    m.bias.assign(out, 0.0);
  }
  if (m.family == MeanFamily::kConstant) m.constant.assign(out, 0.0);
  return m;
}

MeanSpec<double> final_mean(std::size_t in, std::size_t out, std::optional<MeanFamily> family) {
  if (!family || *family == MeanFamily::kZero) {
    MeanSpec<double> m;
    m.input_dim = in;
    m.output_dim = out;
    return m;
  }
  return inner_mean(in, out, family);
}

// Row d of a mean as a single-output mean.
MeanSpec<double> mean_row(const MeanSpec<double>& m, std::size_t d) {
  MeanSpec<double> r;
  r.input_dim = m.input_dim;
  r.output_dim = 1;
  switch (m.family) {
    case MeanFamily::kZero:
      break;
    case MeanFamily::kConstant:
      r.family = MeanFamily::kConstant;
      r.constant = {m.constant[d]};
      break;
    case MeanFamily::kIdentity:
    case MeanFamily::kLinear:
      r.family = MeanFamily::kLinear;
      r.weight = MatrixD(1, m.input_dim);
      if (m.family == MeanFamily::kIdentity) r.weight(0, d) = 1.0;
      else
        for (std::size_t j = 0; j < m.input_dim; ++j) r.weight(0, j) = m.weight(d, j);
      r.bias = {m.family == MeanFamily::kLinear ? m.bias[d] : 0.0};
      break;
  }
  return r;
}

// M input rows for a layer: a seeded subset of the data (cycled when M > N),
// with fresh prior draws in the latent columns, pushed through the prior
// means of the layers below.
MatrixD inducing_inputs(const Dataset& data, std::size_t latent_dim, std::size_t m,
                        const std::vector<MOLayer<double>>& below, std::uint64_t seed,
                        std::size_t layer) {
  const std::size_t n = data.size(), d = data.x.cols();
  const auto perm = permutation(n, RngStream(seed, Purpose::kInit, u32(layer), 0, 0));
  MatrixD z(m, d + latent_dim);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t row = perm[i % n];
    const RngStream s(seed, Purpose::kInit, u32(layer), u32(i + 1), 1);
    for (std::size_t j = 0; j < d; ++j)
      z(i, j) = data.x(row, j) + (i >= n ? 0.1 * s.normal(u32(j)) : 0.0);
    for (std::size_t j = 0; j < latent_dim; ++j) z(i, d + j) = s.normal(u32(d + j));
  }
  for (const auto& l : below) {
    if (l.mixing == MixingKind::kLmc) {
      z = mean_vector(l.mean, z);
      continue;
    }
    MatrixD next(m, l.outputs());
    std::size_t off = 0;
    for (const auto& b : l.latents) {
      const MatrixD part = mean_vector(b.mean, z);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < part.cols(); ++k) next(i, off + k) = part(i, k);
      off += part.cols();
    }
    z = next;
  }
  return z;
}

SVGPLayer<double> block(const MatrixD& z, std::size_t outputs, const LayerTopology& t,
                        MeanSpec<double> mean, Whitening w, double q_scale, double kvar) {
  SVGPLayer<double> g;
  g.kernel.variance = kvar;
  g.kernel.lengthscales.assign(z.cols(), t.lengthscale);
  g.mean = std::move(mean);
  g.inducing.kind = t.inducing;
  g.inducing.points = z;
  if (t.inducing == InducingKind::kDerivative)
    for (std::size_t i = 0; i < z.rows(); ++i) g.inducing.dims.push_back(i % z.cols());
  g.vstate.whitening = w;
  g.vstate.q_mean = MatrixD(z.rows(), outputs);
  MatrixD s(z.rows(), z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) s(i, i) = q_scale;
  g.vstate.q_sqrt.assign(outputs, s);
  if (w != Whitening::kFull) {
    // Same prior-scaled start in the other parameterizations.
    SVGPLayer<double> white = g;
    white.vstate.whitening = Whitening::kFull;
    g = convert_whitening(white, w);
    // Keep the factor's diagonal inside the positive transform's range.
    for (auto& l : g.vstate.q_sqrt)
      for (std::size_t i = 0; i < l.rows(); ++i) l(i, i) = std::max(l(i, i), 1e-5);
  }
  return g;
}

}  // namespace

ModelState<double> build_model(const ModelTopology& topo, const Dataset& data, std::uint64_t seed) {
  if (topo.layers.empty()) throw ConfigError("model.layers must not be empty");
  if (data.size() == 0) throw DataError("dataset is empty");
  if (!(topo.noise_variance > kPositiveFloor)) throw ConfigError("model.noise_variance must exceed 1e-6");
  if (!(topo.latent_scale > kPositiveFloor)) throw ConfigError("model.latent_scale must exceed 1e-6");
  ModelState<double> s;
  s.model.data_dim = data.x.cols();
  s.model.latent_dim = topo.latent_dim;
  s.model.likelihood.kind = topo.likelihood;
  s.model.likelihood.variance = topo.noise_variance;
  s.model.likelihood.outputs = topo.likelihood == LikelihoodKind::kGaussian ? data.y.cols() : 1;
  if (data.y.cols() != s.model.likelihood.targets())
    throw DataError(to_string(topo.likelihood) + " likelihood needs " +
                    std::to_string(s.model.likelihood.targets()) + " target column(s), data has " +
                    std::to_string(data.y.cols()));

  std::size_t in = s.model.data_dim + topo.latent_dim;
  if (in == 0) throw ConfigError("model has no inputs: data has no x columns and latent_dim is 0");
  for (std::size_t l = 0; l < topo.layers.size(); ++l) {
    const LayerTopology& t = topo.layers[l];
    const bool last = l + 1 == topo.layers.size();
    std::size_t out = t.outputs;
    if (last) {
      const std::size_t need = s.model.likelihood.arity();
      if (out == 0) out = need;
      if (out != need)
        throw ConfigError("model.layers[" + std::to_string(l) + "].outputs is " + std::to_string(out) +
                          " but the likelihood consumes " + std::to_string(need));
    }
    if (out == 0) throw ConfigError("model.layers[" + std::to_string(l) + "].outputs must be positive");
    if (t.num_inducing == 0)
      throw ConfigError("model.layers[" + std::to_string(l) + "].num_inducing must be positive");
    const double kvar = t.kernel_variance.value_or(last ? 1.0 : 0.1);
    if (!(kvar > kPositiveFloor) || !(t.lengthscale > kPositiveFloor))
      throw ConfigError("model.layers[" + std::to_string(l) + "]: kernel values must exceed 1e-6");
    const double q_scale = t.q_sqrt_scale.value_or(last ? 1.0 : 1e-5);
    if (!(q_scale > kPositiveFloor))
      throw ConfigError("model.layers[" + std::to_string(l) + "].q_sqrt_scale must exceed 1e-6");

    const MatrixD z = inducing_inputs(data, topo.latent_dim, t.num_inducing,
                                      s.model.layers, seed, l);
    const MeanSpec<double> mean = last ? final_mean(in, out, t.mean) : inner_mean(in, out, t.mean);
    MOLayer<double> layer;
    layer.mixing = t.mixing;
    if (t.mixing == MixingKind::kLmc) {
      const std::size_t dg = t.latent_outputs == 0 ? out : t.latent_outputs;
      layer.weight = MatrixD(out, dg);
      const RngStream s_w(seed, Purpose::kInit, u32(l), 0, 2);
      for (std::size_t a = 0; a < out; ++a)
        for (std::size_t k = 0; k < dg; ++k)
          layer.weight(a, k) = (a == k ? 1.0 : 0.0) + 0.01 * s_w.normal(u32(a * dg + k));
      layer.mean = mean;
      MeanSpec<double> zero;
      zero.input_dim = in;
      if (t.shared_inducing) {
        zero.output_dim = dg;
        layer.latents.push_back(block(z, dg, t, zero, topo.whitening, q_scale, kvar));
      } else {
        zero.output_dim = 1;
        for (std::size_t k = 0; k < dg; ++k)
          layer.latents.push_back(block(z, 1, t, zero, topo.whitening, q_scale, kvar));
      }
    } else if (t.shared_inducing) {
      layer.latents.push_back(block(z, out, t, mean, topo.whitening, q_scale, kvar));
    } else {
      for (std::size_t k = 0; k < out; ++k)
        layer.latents.push_back(block(z, 1, t, mean_row(mean, k), topo.whitening, q_scale, kvar));
    }
    s.model.layers.push_back(std::move(layer));
    in = out;
  }
  s.model.validate();

  if (topo.latent_dim > 0) {
    const std::size_t n = data.size();
    s.table.mean = MatrixD(n, topo.latent_dim);
    s.table.scale = MatrixD(n, topo.latent_dim, topo.latent_scale);
    for (std::size_t i = 0; i < n; ++i) {
      const RngStream r(seed, Purpose::kInit, 0, u32(i), 3);
      for (std::size_t k = 0; k < topo.latent_dim; ++k)
        s.table.mean(i, k) = topo.latent_mean_scale * r.normal(u32(k));
    }
  }
  return s;
}

}  // namespace svgp
