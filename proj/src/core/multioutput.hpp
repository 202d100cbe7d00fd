#pragma once

// Multioutput layers built from SVGP latent blocks: separate independent
// outputs, or a linear model of coregionalization f = mu(x) + W g(x) over
// independent latent processes g. Also the prior derivative GP.

#include "svgp.hpp"

namespace svgp {

enum class MixingKind { kSeparate, kLmc };

inline std::string to_string(MixingKind m) {
  return m == MixingKind::kSeparate ? "separate" : "lmc";
}

template <class T>
struct MOLayer {
  // Latent blocks. Outputs of one block share a kernel and inducing set.
  std::vector<SVGPLayer<T>> latents;
  MixingKind mixing = MixingKind::kSeparate;
  Matrix<T> weight;  // kLmc: D x D_g
  MeanSpec<T> mean;  // kLmc: applied after mixing; latent blocks carry zero means

  std::size_t input_dim() const { return latents.front().input_dim(); }
  std::size_t latent_outputs() const {
    std::size_t n = 0;
    for (const auto& l : latents) n += l.outputs();
    return n;
  }
  std::size_t outputs() const {
    return mixing == MixingKind::kSeparate ? latent_outputs() : weight.rows();
  }

  void validate() const {
    require_shape(!latents.empty(), "multioutput layer needs at least one latent block");
    for (const auto& l : latents) {
      l.validate();
      require_shape(l.input_dim() == input_dim(), "multioutput: latent blocks disagree on input dim");
    }
    if (mixing == MixingKind::kLmc) {
      require_shape(weight.cols() == latent_outputs() && weight.rows() >= 1,
                    "LMC: W must be D x D_g");
      for (const T& w : weight.data())
        if (!std::isfinite(value_of(w))) throw NonFiniteError("LMC: W has non-finite entries");
      mean.validate();
      require_shape(mean.input_dim == input_dim() && mean.output_dim == weight.rows(),
                    "LMC: mean shape");
    }
  }
};

template <class T>
struct MOCache {
  std::vector<LayerCache<T>> latents;
};

template <class T>
MOCache<T> prepare(const MOLayer<T>& layer) {
  layer.validate();
  MOCache<T> c;
  for (const auto& l : layer.latents) c.latents.push_back(prepare(l));
  return c;
}

// Per-point output marginals; output_cov holds one D x D block per point when
// requested.
template <class T>
struct MOPrediction {
  Matrix<T> mean;  // N x D
  Matrix<T> var;   // N x D
  std::vector<Matrix<T>> output_cov;
};

// Concatenated latent marginals, N x D_g.
template <class T>
Marginals<T> latent_marginals(const MOLayer<T>& layer, const MOCache<T>& c, const Matrix<T>& x) {
  if (layer.latents.size() == 1) return predict_marginals(layer.latents[0], c.latents[0], x);
  const std::size_t n = x.rows();
  Marginals<T> g{Matrix<T>(n, layer.latent_outputs()), Matrix<T>(n, layer.latent_outputs())};
  std::size_t off = 0;
  for (std::size_t b = 0; b < layer.latents.size(); ++b) {
    const Marginals<T> m = predict_marginals(layer.latents[b], c.latents[b], x);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < m.mean.cols(); ++d) {
        g.mean(i, off + d) = m.mean(i, d);
        g.var(i, off + d) = m.var(i, d);
      }
    off += m.mean.cols();
  }
  return g;
}

// f = mu(x) + W g for one point's latent vector.
template <class T>
std::vector<T> mix_point(const MOLayer<T>& layer, std::span<const T> mu_row, std::span<const T> g) {
  std::vector<T> f(layer.weight.rows());
  for (std::size_t d = 0; d < f.size(); ++d) f[d] = dot_plus(mu_row[d], layer.weight.row(d), g, 1.0);
  return f;
}

template <class T>
MOPrediction<T> mo_predict(const MOLayer<T>& layer, const MOCache<T>& c, const Matrix<T>& x,
                           bool full_output_cov = false) {
  const Marginals<T> g = latent_marginals(layer, c, x);
  const std::size_t n = x.rows(), d_out = layer.outputs();
  MOPrediction<T> out;
  if (layer.mixing == MixingKind::kSeparate) {
    out.mean = g.mean;
    out.var = g.var;
    if (full_output_cov)
      for (std::size_t i = 0; i < n; ++i) {
        Matrix<T> cov(d_out, d_out);
        for (std::size_t d = 0; d < d_out; ++d) cov(d, d) = g.var(i, d);
        out.output_cov.push_back(std::move(cov));
      }
    return out;
  }
  const Matrix<T> mu = mean_vector(layer.mean, x);
  const std::size_t dg = layer.latent_outputs();
  out.mean = Matrix<T>(n, d_out);
  out.var = Matrix<T>(n, d_out);
  std::vector<T> wv(dg);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<T> f = mix_point(layer, mu.row(i), g.mean.row(i));
    for (std::size_t d = 0; d < d_out; ++d) out.mean(i, d) = f[d];
    // (W diag(v) W^T)[a, b] = sum_k W_ak v_k W_bk
    Matrix<T> cov(d_out, d_out);
    for (std::size_t a = 0; a < d_out; ++a) {
      for (std::size_t k = 0; k < dg; ++k) wv[k] = layer.weight(a, k) * g.var(i, k);
      for (std::size_t b = 0; b <= a; ++b) {
        cov(a, b) = dot<T>(std::span<const T>(wv), layer.weight.row(b));
        cov(b, a) = cov(a, b);
      }
      out.var(i, a) = cov(a, a);
    }
    if (full_output_cov) out.output_cov.push_back(std::move(cov));
  }
  return out;
}

template <class T>
MOPrediction<T> mo_predict(const MOLayer<T>& layer, const Matrix<T>& x, bool full_output_cov = false) {
  return mo_predict(layer, prepare(layer), x, full_output_cov);
}

// The KL factorizes over latent outputs, so no D_g M x D_g M factorization.
template <class T>
T mo_prior_kl(const MOCache<T>& c) {
  T total(0.0);
  for (const auto& l : c.latents) total += prior_kl(l);
  return total;
}

template <class T>
T mo_prior_kl(const MOLayer<T>& layer) {
  return mo_prior_kl(prepare(layer));
}

// Prior GP over the gradient of f at Xnew. Entries are ordered output-major:
// index a * N + n is d f(x_n) / d x_a.
template <class T>
Gaussian<T> derivative_gp_predict(const KernelSpec<T>& kernel, const MeanSpec<T>& mean,
                                  const Matrix<T>& xnew) {
  const std::size_t n = xnew.rows(), d = kernel.input_dim();
  require_shape(xnew.cols() == d, "derivative GP: input dimension mismatch");
  require_shape(mean.output_dim == 1, "derivative GP: single-output base process expected");
  Gaussian<T> g{std::vector<T>(n * d), Matrix<T>(n * d, n * d)};
  for (std::size_t a = 0; a < d; ++a) {
    const T grad = mean_gradient(mean, 0, a);
    for (std::size_t i = 0; i < n; ++i) g.mean[a * n + i] = grad;
  }
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t b = 0; b < d; ++b)
        for (std::size_t j = 0; j < n; ++j)
          g.cov(a * n + i, b * n + j) = kern_cross_hess(kernel, xnew.row(i), xnew.row(j), a, b);
  return g;
}

}  // namespace svgp
