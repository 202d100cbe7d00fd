#pragma once

// Deep GP stacks with doubly stochastic propagation, per-datapoint latent
// inputs at the first layer, and the deep / latent-variable /
// importance-weighted latent-variable ELBOs.
//
// Random numbers: draw k of stream (purpose, step, datapoint, sample) is the
// k-th standard normal of that counter-based stream. Propagation uses draw
// offset_l + j for latent output j of layer l, so results do not depend on
// evaluation order or batch composition.

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

#include "multioutput.hpp"
#include "rng.hpp"

namespace svgp {

// q(h_n) = N(mean_n, diag(scale_n^2)); the prior is N(0, I).
template <class T>
struct LatentTable {
  Matrix<T> mean;   // N x latent_dim
  Matrix<T> scale;  // N x latent_dim, positive

  std::size_t rows() const { return mean.rows(); }
  std::size_t dim() const { return mean.cols(); }
};

template <class T>
struct DeepModel {
  std::vector<MOLayer<T>> layers;
  std::size_t data_dim = 1;
  std::size_t latent_dim = 0;
  LikelihoodSpec<T> likelihood;

  std::size_t depth() const { return layers.size(); }

  void validate() const {
    require_shape(!layers.empty(), "model needs at least one layer");
    require_shape(data_dim + latent_dim >= 1, "model input has no dimensions");
    require_shape(layers[0].input_dim() == data_dim + latent_dim,
                  "layer 1 input dim must equal data dim + latent dim");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      layers[l].validate();
      if (l > 0)
        require_shape(layers[l].input_dim() == layers[l - 1].outputs(),
                      "layer " + std::to_string(l + 1) + " input dim must equal layer " +
                          std::to_string(l) + " output count");
    }
    const MOLayer<T>& last = layers.back();
    if (likelihood.arity() != last.outputs())
      throw ArityError(to_string(likelihood.kind) + " likelihood consumes " +
                       std::to_string(likelihood.arity()) + " latent output(s) but the final layer has " +
                       std::to_string(last.outputs()));
    if (likelihood.kind == LikelihoodKind::kHeteroscedastic && last.mixing == MixingKind::kLmc)
      throw ArityError("heteroscedastic likelihood needs independent final-layer outputs");
  }
};

struct IWConfig {
  std::size_t samples = 1;   // S
  std::size_t outer_mc = 1;  // repetitions of the outer expectation
};

// Everything an objective needs besides parameters and data.
struct EvalSettings {
  std::uint64_t seed = 0;
  std::uint32_t step = 0;
  QuadratureRule quad;
};

// How lv_elbo treats KL(q(h_n) || p(h_n)).
enum class LatentKl {
  kAnalytic,  // closed form
  kSampled,   // ln q(h) - ln p(h) at the drawn h; the S = 1 importance-weighted form
};

namespace detail {

inline constexpr std::uint32_t kPathLatentStep = 1;  // Predict-purpose step for h* draws

template <class T>
T draw_marginal(const T& mean, const T& var, double eps) {
  using std::sqrt;
  if (!(value_of(var) > 0.0)) return mean;
  return mean + sqrt(var) * T(eps);
}

template <class T>
std::vector<MOCache<T>> prepare_all(const DeepModel<T>& model) {
  model.validate();
  std::vector<MOCache<T>> caches;
  caches.reserve(model.depth());
  for (const auto& layer : model.layers) caches.push_back(prepare(layer));
  return caches;
}

inline std::vector<std::size_t> latent_offsets(std::span<const std::size_t> widths) {
  std::vector<std::size_t> off(widths.size() + 1, 0);
  for (std::size_t l = 0; l < widths.size(); ++l) off[l + 1] = off[l] + widths[l];
  return off;
}

template <class T>
std::vector<std::size_t> layer_offsets(const DeepModel<T>& model) {
  std::vector<std::size_t> widths;
  for (const auto& layer : model.layers) widths.push_back(layer.latent_outputs());
  return latent_offsets(widths);
}

// One reparameterized draw of layer `l` at every row of `input`. Rows are
// grouped in consecutive blocks of `group`; draws within a block are joint,
// blocks are independent. group == 1 gives per-row marginal draws.
template <class T>
Matrix<T> sample_layer(const MOLayer<T>& layer, const MOCache<T>& cache, const Matrix<T>& input,
                       std::span<const RngStream> streams, std::size_t offset, std::size_t group) {
  const std::size_t rows = input.rows(), dg = layer.latent_outputs();
  require_shape(group >= 1 && rows % group == 0, "propagate: rows must split into groups");
  require_shape(streams.size() == rows, "propagate: one stream per row");
  Matrix<T> g(rows, dg);
  if (group == 1) {
    const Marginals<T> m = latent_marginals(layer, cache, input);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t k = 0; k < dg; ++k)
        g(r, k) = draw_marginal(m.mean(r, k), m.var(r, k),
                                streams[r].normal(static_cast<std::uint32_t>(offset + k)));
  } else {
    for (std::size_t start = 0; start < rows; start += group) {
      Matrix<T> sub(group, input.cols());
      for (std::size_t s = 0; s < group; ++s)
        std::copy(input.row(start + s).begin(), input.row(start + s).end(), sub.row(s).begin());
      std::size_t k0 = 0;
      for (std::size_t b = 0; b < layer.latents.size(); ++b) {
        const FullPrediction<T> fp = predict_full(layer.latents[b], cache.latents[b], sub);
        for (std::size_t k = 0; k < fp.cov.size(); ++k) {
          MatrixD noise(1, group);
          for (std::size_t s = 0; s < group; ++s)
            noise(0, s) = streams[start + s].normal(static_cast<std::uint32_t>(offset + k0 + k));
          const Matrix<T> draw = sample(Gaussian<T>{fp.mean.col(k), fp.cov[k]}, noise);
          for (std::size_t s = 0; s < group; ++s) g(start + s, k0 + k) = draw(0, s);
        }
        k0 += fp.cov.size();
      }
    }
  }
  if (layer.mixing == MixingKind::kSeparate) return g;
  const Matrix<T> mu = mean_vector(layer.mean, input);
  Matrix<T> f(rows, layer.outputs());
  for (std::size_t r = 0; r < rows; ++r) {
    const std::vector<T> fr = mix_point(layer, mu.row(r), std::as_const(g).row(r));
    std::copy(fr.begin(), fr.end(), f.row(r).begin());
  }
  return f;
}

// Propagates `input` through every layer but the last and returns the final
// layer's marginals conditional on the penultimate draw.
template <class T>
MOPrediction<T> propagate_rows(const DeepModel<T>& model, const std::vector<MOCache<T>>& caches,
                               Matrix<T> input, std::span<const RngStream> streams,
                               std::size_t group, std::vector<Matrix<T>>* trace = nullptr) {
  const std::vector<std::size_t> off = layer_offsets(model);
  for (std::size_t l = 0; l + 1 < model.depth(); ++l) {
    input = sample_layer(model.layers[l], caches[l], input, streams, off[l], group);
    if (trace) trace->push_back(input);
  }
  return mo_predict(model.layers.back(), caches.back(), input);
}

template <class T>
Matrix<T> data_input(const MatrixD& x) {
  return lift<T>(x);
}

// [X_n || h] rows.
template <class T>
Matrix<T> augment(const MatrixD& x, const Matrix<T>& h) {
  return hcat(lift<T>(x), h);
}

template <class T>
void check_table(const LatentTable<T>& table, std::size_t latent_dim,
                 std::span<const std::size_t> index) {
  require_shape(table.dim() == latent_dim && table.scale.cols() == latent_dim &&
                    table.scale.rows() == table.rows(),
                "latent table: width must equal latent_dim");
  for (std::size_t n : index)
    if (n >= table.rows())
      throw MissingLatentRow("latent table has no row for datapoint " + std::to_string(n));
}

inline double log_std_normal(double z) { return -0.5 * 1.8378770664093454836 - 0.5 * z * z; }

template <class T>
T analytic_latent_kl(const LatentTable<T>& table, std::size_t n) {
  using std::log;
  T kl(0.0);
  for (std::size_t k = 0; k < table.dim(); ++k) {
    const T m = table.mean(n, k), s = table.scale(n, k);
    kl += T(0.5) * (s * s + m * m - T(1.0)) - log(s);
  }
  return kl;
}

template <class T>
T log_sum_exp(std::span<const T> t) {
  using std::exp;
  using std::log;
  double top = -INFINITY;
  for (const T& v : t) top = std::max(top, value_of(v));
  if (!std::isfinite(top)) return T(top);
  T acc(0.0);
  for (const T& v : t) acc += exp(v - T(top));
  return T(top) + log(acc);
}

}  // namespace detail

// Per-layer draws and the final conditional for one sample per row.
template <class T>
struct Propagation {
  std::vector<Matrix<T>> samples;  // layers 1 .. L-1
  MOPrediction<T> final;
};

// Marginal propagation of X (with h rows when latent_dim > 0) for sample
// index `sample`.
template <class T>
Propagation<T> propagate(const DeepModel<T>& model, const MatrixD& x,
                         std::span<const std::size_t> index, const EvalSettings& ev,
                         std::uint32_t sample = 0, const Matrix<T>* h = nullptr) {
  const auto caches = detail::prepare_all(model);
  require_shape(x.cols() == model.data_dim && index.size() == x.rows(), "propagate: batch shape");
  Matrix<T> input = detail::data_input<T>(x);
  if (model.latent_dim > 0) {
    require_shape(h != nullptr && h->rows() == x.rows() && h->cols() == model.latent_dim,
                  "propagate: latent rows required");
    input = detail::augment(x, *h);
  }
  std::vector<RngStream> streams;
  for (std::size_t n : index)
    streams.emplace_back(ev.seed, Purpose::kPropagate, ev.step, static_cast<std::uint32_t>(n), sample);
  Propagation<T> out;
  out.final = detail::propagate_rows(model, caches, std::move(input), streams, 1, &out.samples);
  return out;
}

namespace detail {

template <class T>
T batch_kl(const std::vector<MOCache<T>>& caches) {
  T kl(0.0);
  for (const auto& c : caches) kl += mo_prior_kl(c);
  return kl;
}

template <class T>
T row_expectation(const LikelihoodSpec<T>& lik, const MOPrediction<T>& f, std::size_t row,
                  std::span<const double> y, const QuadratureRule& quad) {
  PointMarginal<T> p;
  p.mean.assign(f.mean.row(row).begin(), f.mean.row(row).end());
  p.var.assign(f.var.row(row).begin(), f.var.row(row).end());
  return variational_expectation(lik, y, p, quad);
}

template <class T>
void check_batch(const DeepModel<T>& model, const MatrixD& x, const MatrixD& y,
                 std::span<const std::size_t> index) {
  require_shape(x.rows() >= 1, "objective: batch must be nonempty");
  require_shape(x.cols() == model.data_dim, "objective: X has " + std::to_string(x.cols()) +
                                                " columns, model expects " +
                                                std::to_string(model.data_dim));
  require_shape(y.rows() == x.rows() && index.size() == x.rows(), "objective: batch rows differ");
}

}  // namespace detail

// Deep ELBO without latent inputs: n_mc propagated samples per point.
template <class T>
T deep_elbo(const DeepModel<T>& model, const MatrixD& x, const MatrixD& y,
            std::span<const std::size_t> index, std::size_t total_n, const EvalSettings& ev,
            std::size_t n_mc = 1) {
  require_shape(model.latent_dim == 0, "deep_elbo: model has latent inputs, use lv_elbo");
  require_shape(n_mc >= 1, "deep_elbo: n_mc must be positive");
  detail::check_batch(model, x, y, index);
  const auto caches = detail::prepare_all(model);
  T data(0.0);
  if (model.depth() == 1) {
    // Nothing is sampled: the single layer's marginals are exact.
    const MOPrediction<T> f = mo_predict(model.layers[0], caches[0], detail::data_input<T>(x));
    for (std::size_t i = 0; i < x.rows(); ++i)
      data += detail::row_expectation(model.likelihood, f, i, y.row(i), ev.quad);
  } else {
    for (std::size_t s = 0; s < n_mc; ++s) {
      std::vector<RngStream> streams;
      for (std::size_t n : index)
        streams.emplace_back(ev.seed, Purpose::kPropagate, ev.step, static_cast<std::uint32_t>(n),
                             static_cast<std::uint32_t>(s));
      const MOPrediction<T> f =
          detail::propagate_rows(model, caches, detail::data_input<T>(x), streams, 1);
      T part(0.0);
      for (std::size_t i = 0; i < x.rows(); ++i)
        part += detail::row_expectation(model.likelihood, f, i, y.row(i), ev.quad);
      data += part;
    }
    data = data / T(static_cast<double>(n_mc));
  }
  return assemble_elbo(data, x.rows(), total_n, detail::batch_kl(caches));
}

// Latent-variable ELBO: h_n ~ q(h_n) reparameterized, n_mc draws per point.
template <class T>
T lv_elbo(const DeepModel<T>& model, const LatentTable<T>& table, const MatrixD& x,
          const MatrixD& y, std::span<const std::size_t> index, std::size_t total_n,
          const EvalSettings& ev, std::size_t n_mc = 1, LatentKl kl_mode = LatentKl::kAnalytic) {
  require_shape(model.latent_dim >= 1, "lv_elbo: model has no latent inputs");
  require_shape(n_mc >= 1, "lv_elbo: n_mc must be positive");
  detail::check_batch(model, x, y, index);
  detail::check_table(table, model.latent_dim, index);
  const auto caches = detail::prepare_all(model);
  const std::size_t b = x.rows(), q = model.latent_dim;
  std::vector<T> per_point(b, T(0.0));
  for (std::size_t s = 0; s < n_mc; ++s) {
    const auto sample = static_cast<std::uint32_t>(s);
    Matrix<T> h(b, q);
    std::vector<T> log_ratio(b, T(0.0));  // ln p(h) - ln q(h)
    std::vector<RngStream> streams;
    for (std::size_t i = 0; i < b; ++i) {
      const auto n = static_cast<std::uint32_t>(index[i]);
      const RngStream hs(ev.seed, Purpose::kLatent, ev.step, n, sample);
      for (std::size_t k = 0; k < q; ++k) {
        const double eps = hs.normal(static_cast<std::uint32_t>(k));
        h(i, k) = table.mean(index[i], k) + table.scale(index[i], k) * T(eps);
        if (kl_mode == LatentKl::kSampled) {
          using std::log;
          const T lp = T(-0.5 * 1.8378770664093454836) - T(0.5) * h(i, k) * h(i, k);
          const T lq = T(detail::log_std_normal(eps)) - log(table.scale(index[i], k));
          log_ratio[i] += lp - lq;
        }
      }
      streams.emplace_back(ev.seed, Purpose::kPropagate, ev.step, n, sample);
    }
    const MOPrediction<T> f =
        detail::propagate_rows(model, caches, detail::augment(x, h), streams, 1);
    for (std::size_t i = 0; i < b; ++i) {
      T t = detail::row_expectation(model.likelihood, f, i, y.row(i), ev.quad);
      if (kl_mode == LatentKl::kSampled) t = t + log_ratio[i];
      per_point[i] += t;
    }
  }
  T data(0.0);
  for (std::size_t i = 0; i < b; ++i) {
    T term = per_point[i] / T(static_cast<double>(n_mc));
    if (kl_mode == LatentKl::kAnalytic) term = term - detail::analytic_latent_kl(table, index[i]);
    data += term;
  }
  return assemble_elbo(data, b, total_n, detail::batch_kl(caches));
}

// Importance-weighted latent-variable ELBO. For each point, S replicates of
// h_n are propagated jointly through the inner layers; the final layer is
// evaluated per replicate and the log-mean of explik * p(h) / q(h) is taken.
template <class T>
T iw_lv_elbo(const DeepModel<T>& model, const LatentTable<T>& table, const MatrixD& x,
             const MatrixD& y, std::span<const std::size_t> index, std::size_t total_n,
             const IWConfig& iw, const EvalSettings& ev) {
  require_shape(model.latent_dim >= 1, "iw_lv_elbo: model has no latent inputs");
  require_shape(iw.samples >= 1 && iw.outer_mc >= 1, "iw_lv_elbo: S and outer_mc must be positive");
  detail::check_batch(model, x, y, index);
  detail::check_table(table, model.latent_dim, index);
  const auto caches = detail::prepare_all(model);
  const std::size_t b = x.rows(), q = model.latent_dim, s_count = iw.samples;
  const double log_s = std::log(static_cast<double>(s_count));
  std::vector<T> per_point(b, T(0.0));
  for (std::size_t r = 0; r < iw.outer_mc; ++r) {
    // Rows are point-major: row i * S + s.
    Matrix<T> h(b * s_count, q);
    MatrixD xr(b * s_count, x.cols());
    std::vector<T> log_ratio(b * s_count, T(0.0));
    std::vector<RngStream> streams;
    for (std::size_t i = 0; i < b; ++i) {
      const auto n = static_cast<std::uint32_t>(index[i]);
      for (std::size_t s = 0; s < s_count; ++s) {
        const std::size_t row = i * s_count + s;
        const auto sample = static_cast<std::uint32_t>(r * s_count + s);
        const RngStream hs(ev.seed, Purpose::kLatent, ev.step, n, sample);
        for (std::size_t k = 0; k < q; ++k) {
          using std::log;
          const double eps = hs.normal(static_cast<std::uint32_t>(k));
          h(row, k) = table.mean(index[i], k) + table.scale(index[i], k) * T(eps);
          const T lp = T(-0.5 * 1.8378770664093454836) - T(0.5) * h(row, k) * h(row, k);
          const T lq = T(detail::log_std_normal(eps)) - log(table.scale(index[i], k));
          log_ratio[row] += lp - lq;
        }
        std::copy(x.row(i).begin(), x.row(i).end(), xr.row(row).begin());
        streams.emplace_back(ev.seed, Purpose::kPropagate, ev.step, n, sample);
      }
    }
    const MOPrediction<T> f =
        detail::propagate_rows(model, caches, detail::augment(xr, h), streams, s_count);
    std::vector<T> t(s_count);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t s = 0; s < s_count; ++s) {
        const std::size_t row = i * s_count + s;
        t[s] = detail::row_expectation(model.likelihood, f, row, y.row(i), ev.quad) + log_ratio[row];
      }
      per_point[i] += detail::log_sum_exp(std::span<const T>(t)) - T(log_s);
    }
  }
  T data(0.0);
  for (std::size_t i = 0; i < b; ++i) data += per_point[i] / T(static_cast<double>(iw.outer_mc));
  return assemble_elbo(data, b, total_n, detail::batch_kl(caches));
}

// exp of the expected log likelihood under one final-layer marginal.
template <class T>
T explik(const LikelihoodSpec<T>& lik, std::span<const double> y, const PointMarginal<T>& f,
         const QuadratureRule& quad = {}) {
  using std::exp;
  return exp(variational_expectation(lik, y, f, quad));
}

struct PredictOptions {
  std::size_t paths = 1;
  bool joint = false;  // sample each path jointly across the test points
};

struct DeepPrediction {
  std::vector<MatrixD> path_mean;  // per path, N x D final-layer mean
  std::vector<MatrixD> path_var;
  std::vector<PredictiveSummary> pooled;  // per test point, moments of y
  std::vector<double> log_density;        // per test point, when targets are given
};

namespace detail {

inline std::vector<RngStream> path_streams(const EvalSettings& ev, std::size_t rows,
                                           std::uint32_t path) {
  std::vector<RngStream> streams;
  for (std::size_t n = 0; n < rows; ++n)
    streams.emplace_back(ev.seed, Purpose::kPredict, 0, static_cast<std::uint32_t>(n), path);
  return streams;
}

inline MatrixD path_latents(const EvalSettings& ev, std::size_t rows, std::size_t dim,
                            std::uint32_t path) {
  MatrixD h(rows, dim);
  for (std::size_t n = 0; n < rows; ++n) {
    const RngStream s(ev.seed, Purpose::kPredict, kPathLatentStep, static_cast<std::uint32_t>(n), path);
    for (std::size_t k = 0; k < dim; ++k) h(n, k) = s.normal(static_cast<std::uint32_t>(k));
  }
  return h;
}

}  // namespace detail

// Predictive distribution by path averaging; latent inputs come from the prior.
inline DeepPrediction predict_deep(const DeepModel<double>& model, const MatrixD& xnew,
                                   const PredictOptions& opts, const EvalSettings& ev,
                                   const MatrixD* ynew = nullptr) {
  require_shape(opts.paths >= 1, "predict: paths must be positive");
  require_shape(xnew.cols() == model.data_dim, "predict: X has " + std::to_string(xnew.cols()) +
                                                   " columns, model expects " +
                                                   std::to_string(model.data_dim));
  detail::require_finite_inputs(xnew, "predict");
  if (ynew) require_shape(ynew->rows() == xnew.rows(), "predict: X and y rows differ");
  const auto caches = detail::prepare_all(model);
  const std::size_t n = xnew.rows();
  DeepPrediction out;
  std::vector<std::vector<double>> log_dens(n);
  for (std::size_t p = 0; p < opts.paths; ++p) {
    const auto path = static_cast<std::uint32_t>(p);
    MatrixD input = xnew;
    if (model.latent_dim > 0) input = hcat(xnew, detail::path_latents(ev, n, model.latent_dim, path));
    const auto streams = detail::path_streams(ev, n, path);
    const MOPrediction<double> f =
        detail::propagate_rows(model, caches, input, streams, opts.joint ? n : 1);
    out.path_mean.push_back(f.mean);
    out.path_var.push_back(f.var);
    if (ynew)
      for (std::size_t i = 0; i < n; ++i) {
        PointMarginal<double> pm{f.mean.col(0), {}};
        pm.mean.assign(f.mean.row(i).begin(), f.mean.row(i).end());
        pm.var.assign(f.var.row(i).begin(), f.var.row(i).end());
        log_dens[i].push_back(predictive_log_density(model.likelihood, ynew->row(i), pm, ev.quad));
      }
  }
  const double paths = static_cast<double>(opts.paths);
  for (std::size_t i = 0; i < n; ++i) {
    PredictiveSummary pooled;
    for (std::size_t p = 0; p < opts.paths; ++p) {
      PointMarginal<double> pm;
      pm.mean.assign(out.path_mean[p].row(i).begin(), out.path_mean[p].row(i).end());
      pm.var.assign(out.path_var[p].row(i).begin(), out.path_var[p].row(i).end());
      const PredictiveSummary s = predict_y(model.likelihood, pm, ev.quad);
      if (p == 0) {
        pooled.mean.assign(s.mean.size(), 0.0);
        pooled.var.assign(s.mean.size(), 0.0);
      }
      for (std::size_t d = 0; d < s.mean.size(); ++d) {
        pooled.mean[d] += s.mean[d];
        pooled.var[d] += s.var[d] + s.mean[d] * s.mean[d];
      }
    }
    for (std::size_t d = 0; d < pooled.mean.size(); ++d) {
      pooled.mean[d] /= paths;
      pooled.var[d] = std::max(0.0, pooled.var[d] / paths - pooled.mean[d] * pooled.mean[d]);
    }
    if (opts.paths == 1) {
      // A single path is the path's own predictive; avoid the moment round trip.
      PointMarginal<double> pm;
      pm.mean.assign(out.path_mean[0].row(i).begin(), out.path_mean[0].row(i).end());
      pm.var.assign(out.path_var[0].row(i).begin(), out.path_var[0].row(i).end());
      pooled = predict_y(model.likelihood, pm, ev.quad);
    }
    out.pooled.push_back(std::move(pooled));
    if (ynew)
      out.log_density.push_back(detail::log_sum_exp(std::span<const double>(log_dens[i])) -
                                std::log(paths));
  }
  return out;
}

// Joint draws of every layer's outputs (the final layer included) at xnew;
// layer l of path p is result[p][l]. Latent inputs come from the prior.
inline std::vector<std::vector<MatrixD>> sample_paths(const DeepModel<double>& model,
                                                      const MatrixD& xnew, std::size_t paths,
                                                      const EvalSettings& ev) {
  const auto caches = detail::prepare_all(model);
  const std::size_t n = xnew.rows();
  const std::vector<std::size_t> off = detail::layer_offsets(model);
  // The first layer's inputs are the same for every path when there are no
  // latent inputs, so its joint predictive is factorized once.
  std::optional<std::vector<FullPrediction<double>>> first;
  std::vector<CholFactor<double>> first_chol;
  if (model.latent_dim == 0 && model.layers[0].mixing == MixingKind::kSeparate) {
    first.emplace();
    for (std::size_t b = 0; b < model.layers[0].latents.size(); ++b) {
      first->push_back(predict_full(model.layers[0].latents[b], caches[0].latents[b], xnew));
      for (const auto& cov : first->back().cov) first_chol.push_back(cholesky(cov));
    }
  }
  std::vector<std::vector<MatrixD>> out;
  for (std::size_t p = 0; p < paths; ++p) {
    const auto path = static_cast<std::uint32_t>(p);
    const auto streams = detail::path_streams(ev, n, path);
    MatrixD input = xnew;
    if (model.latent_dim > 0) input = hcat(xnew, detail::path_latents(ev, n, model.latent_dim, path));
    std::vector<MatrixD> layers;
    for (std::size_t l = 0; l < model.depth(); ++l) {
      if (l == 0 && first) {
        MatrixD f(n, model.layers[0].outputs());
        std::size_t k = 0;
        for (const auto& fp : *first)
          for (std::size_t j = 0; j < fp.cov.size(); ++j, ++k) {
            const MatrixD& lower = first_chol[k].lower;
            std::vector<double> eps(n);
            for (std::size_t i = 0; i < n; ++i) eps[i] = streams[i].normal(static_cast<std::uint32_t>(off[0] + k));
            for (std::size_t i = 0; i < n; ++i)
              f(i, k) = dot_plus(fp.mean(i, j), lower.row(i).subspan(0, i + 1),
                                 std::span<const double>(eps.data(), i + 1), 1.0);
          }
        input = f;
      } else {
        input = detail::sample_layer(model.layers[l], caches[l], input, streams, off[l], n);
      }
      layers.push_back(input);
    }
    out.push_back(std::move(layers));
  }
  return out;
}

}  // namespace svgp
