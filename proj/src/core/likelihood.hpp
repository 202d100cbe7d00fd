#pragma once

// Observation models: pointwise log densities, variational expectations
// E_q(f)[ln p(y | f)] and predictive densities, closed form for the
// homoscedastic Gaussian and Gauss-Hermite quadrature otherwise.

#include <cmath>
#include <numbers>
#include <string>

#include "matrix.hpp"

namespace svgp {

enum class LikelihoodKind { kGaussian, kHeteroscedastic, kBernoulli };

std::string to_string(LikelihoodKind kind);

// Nodes and weights for int exp(-x^2) f(x) dx; weights sum to sqrt(pi).
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Cached, immutable tables (Golub-Welsch).
const GaussHermite& gauss_hermite(std::size_t order);

struct QuadratureRule {
  std::size_t order = 20;          // one latent dimension
  std::size_t order_per_dim = 10;  // tensor product over two latent dimensions
  std::size_t mc_samples = 1000;   // Monte Carlo fallback for predictive checks
};

template <class T>
struct LikelihoodSpec {
  LikelihoodKind kind = LikelihoodKind::kGaussian;
  T variance = T(1.0);  // kGaussian noise variance
  std::size_t outputs = 1;  // kGaussian: number of targets (one latent per target)

  // Number of latent function values consumed per observation.
  std::size_t arity() const {
    switch (kind) {
      case LikelihoodKind::kGaussian:
        return outputs;
      case LikelihoodKind::kHeteroscedastic:
        return 2;
      case LikelihoodKind::kBernoulli:
        return 1;
    }
    return 0;
  }
  // Number of target columns per observation.
  std::size_t targets() const { return kind == LikelihoodKind::kGaussian ? outputs : 1; }
};

// Independent Gaussian marginals of the latent outputs at one data point.
template <class T>
struct PointMarginal {
  std::vector<T> mean;
  std::vector<T> var;
};

struct PredictiveSummary {
  std::vector<double> mean;
  std::vector<double> var;
};

namespace detail {

inline constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2 pi)
inline constexpr double kLogProbFloor = -1e12;

template <class T>
void check_arity(const LikelihoodSpec<T>& lik, std::size_t targets, std::size_t latents) {
  if (targets != lik.targets())
    throw ArityError(to_string(lik.kind) + " likelihood expects " + std::to_string(lik.targets()) +
                     " target(s), got " + std::to_string(targets));
  if (latents != lik.arity())
    throw ArityError(to_string(lik.kind) + " likelihood consumes " + std::to_string(lik.arity()) +
                     " latent output(s), got " + std::to_string(latents));
}

template <class T>
void check_finite(std::span<const double> y, const PointMarginal<T>& f) {
  for (double v : y)
    if (!std::isfinite(v)) throw NonFiniteError("likelihood: non-finite target");
  for (std::size_t i = 0; i < f.mean.size(); ++i)
    if (!std::isfinite(value_of(f.mean[i])) || !std::isfinite(value_of(f.var[i])))
      throw NonFiniteError("likelihood: non-finite latent marginal");
}

// sqrt(2 v), with the derivative dropped at exactly zero variance.
template <class T>
T gh_scale(const T& v) {
  using std::sqrt;
  if (!(value_of(v) > 0.0)) return T(0.0);
  return sqrt(T(2.0) * v);
}

template <class T>
T gaussian_log_density(double y, const T& mean, const T& var) {
  using std::log;
  const T r = T(y) - mean;
  return T(-0.5 * kLog2Pi) - T(0.5) * log(var) - T(0.5) * r * r / var;
}

}  // namespace detail

template <class T>
T log_prob(const LikelihoodSpec<T>& lik, std::span<const double> y, std::span<const T> f) {
  detail::check_arity(lik, y.size(), f.size());
  switch (lik.kind) {
    case LikelihoodKind::kGaussian: {
      T s(0.0);
      for (std::size_t d = 0; d < y.size(); ++d)
        s += detail::gaussian_log_density(y[d], f[d], lik.variance);
      return s;
    }
    case LikelihoodKind::kHeteroscedastic:
      return detail::gaussian_log_density(y[0], f[0], positive(f[1]));
    case LikelihoodKind::kBernoulli: {
      const T lp = log_sigmoid(y[0] > 0.5 ? f[0] : T(-f[0]));
      if (value_of(lp) < detail::kLogProbFloor) return T(detail::kLogProbFloor);
      return lp;
    }
  }
  throw ArityError("unknown likelihood");
}

template <class T>
T variational_expectation(const LikelihoodSpec<T>& lik, std::span<const double> y,
                          const PointMarginal<T>& fmar, const QuadratureRule& quad = {}) {
  detail::check_arity(lik, y.size(), fmar.mean.size());
  detail::check_finite(y, fmar);
  switch (lik.kind) {
    case LikelihoodKind::kGaussian: {
      using std::log;
      const T half_log = T(0.5) * log(T(2.0 * std::numbers::pi) * lik.variance);
      const T inv2 = T(0.5) / lik.variance;
      T s(0.0);
      for (std::size_t d = 0; d < y.size(); ++d) {
        const T r = T(y[d]) - fmar.mean[d];
        s += -half_log - (r * r + fmar.var[d]) * inv2;
      }
      return s;
    }
    case LikelihoodKind::kBernoulli: {
      const GaussHermite& gh = gauss_hermite(quad.order);
      const T scale = detail::gh_scale(fmar.var[0]);
      const double sign = y[0] > 0.5 ? 1.0 : -1.0;
      T s(0.0);
      for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
        const T f = fmar.mean[0] + scale * T(gh.nodes[i]);
        s += T(gh.weights[i]) * log_sigmoid(T(sign) * f);
      }
      return s / T(std::sqrt(std::numbers::pi));
    }
    case LikelihoodKind::kHeteroscedastic: {
      const GaussHermite& gh = gauss_hermite(quad.order_per_dim);
      const T s0 = detail::gh_scale(fmar.var[0]);
      const T s1 = detail::gh_scale(fmar.var[1]);
      T s(0.0);
      for (std::size_t j = 0; j < gh.nodes.size(); ++j) {
        const T noise = positive(T(fmar.mean[1] + s1 * T(gh.nodes[j])));
        T inner(0.0);
        for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
          const T f = fmar.mean[0] + s0 * T(gh.nodes[i]);
          inner += T(gh.weights[i]) * detail::gaussian_log_density(y[0], f, noise);
        }
        s += T(gh.weights[j]) * inner;
      }
      return s / T(std::numbers::pi);
    }
  }
  throw ArityError("unknown likelihood");
}

// Predictive moments of y under q(f).
template <class T>
PredictiveSummary predict_y(const LikelihoodSpec<T>& lik, const PointMarginal<T>& fmar,
                            const QuadratureRule& quad = {}) {
  detail::check_arity(lik, lik.targets(), fmar.mean.size());
  PredictiveSummary out;
  switch (lik.kind) {
    case LikelihoodKind::kGaussian:
      for (std::size_t d = 0; d < fmar.mean.size(); ++d) {
        out.mean.push_back(value_of(fmar.mean[d]));
        out.var.push_back(value_of(fmar.var[d]) + value_of(lik.variance));
      }
      return out;
    case LikelihoodKind::kBernoulli: {
      const GaussHermite& gh = gauss_hermite(quad.order);
      const double scale = value_of(detail::gh_scale(fmar.var[0]));
      double p = 0.0;
      if (scale == 0.0) {
        p = std::exp(log_sigmoid(value_of(fmar.mean[0])));
        out.mean.push_back(p);
        out.var.push_back(p * (1.0 - p));
        return out;
      }
      for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
        const double f = value_of(fmar.mean[0]) + scale * gh.nodes[i];
        p += gh.weights[i] * std::exp(log_sigmoid(f));
      }
      p /= std::sqrt(std::numbers::pi);
      out.mean.push_back(p);
      out.var.push_back(p * (1.0 - p));
      return out;
    }
    case LikelihoodKind::kHeteroscedastic: {
      const GaussHermite& gh = gauss_hermite(quad.order);
      const double scale = value_of(detail::gh_scale(fmar.var[1]));
      double noise = 0.0;
      for (std::size_t i = 0; i < gh.nodes.size(); ++i)
        noise += gh.weights[i] * positive(value_of(fmar.mean[1]) + scale * gh.nodes[i]);
      noise /= std::sqrt(std::numbers::pi);
      out.mean.push_back(value_of(fmar.mean[0]));
      out.var.push_back(value_of(fmar.var[0]) + noise);
      return out;
    }
  }
  throw ArityError("unknown likelihood");
}

// ln p(y) = ln int p(y | f) q(f) df
template <class T>
double predictive_log_density(const LikelihoodSpec<T>& lik, std::span<const double> y,
                              const PointMarginal<T>& fmar, const QuadratureRule& quad = {}) {
  detail::check_arity(lik, y.size(), fmar.mean.size());
  switch (lik.kind) {
    case LikelihoodKind::kGaussian: {
      double s = 0.0;
      for (std::size_t d = 0; d < y.size(); ++d)
        s += detail::gaussian_log_density(y[d], value_of(fmar.mean[d]),
                                          value_of(fmar.var[d]) + value_of(lik.variance));
      return s;
    }
    case LikelihoodKind::kBernoulli: {
      const PredictiveSummary p = predict_y(lik, fmar, quad);
      const double p1 = p.mean[0];
      return std::log(y[0] > 0.5 ? p1 : 1.0 - p1);
    }
    case LikelihoodKind::kHeteroscedastic: {
      // Closed form over the mean output, quadrature over the noise output.
      const GaussHermite& gh = gauss_hermite(quad.order);
      const double scale = value_of(detail::gh_scale(fmar.var[1]));
      std::vector<double> terms(gh.nodes.size());
      double top = -INFINITY;
      for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
        const double noise = positive(value_of(fmar.mean[1]) + scale * gh.nodes[i]);
        terms[i] = std::log(gh.weights[i]) +
                   detail::gaussian_log_density(y[0], value_of(fmar.mean[0]),
                                                value_of(fmar.var[0]) + noise);
        top = std::max(top, terms[i]);
      }
      double acc = 0.0;
      for (double t : terms) acc += std::exp(t - top);
      return top + std::log(acc) - 0.5 * std::log(std::numbers::pi);
    }
  }
  throw ArityError("unknown likelihood");
}

}  // namespace svgp
