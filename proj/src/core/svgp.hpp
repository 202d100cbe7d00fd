#pragma once

// Shallow sparse variational GP layer. Every parameterization of q(u) is
// mapped to whitened form (q_w, S_w) with w = L^{-1}(u - mu_u), L L^T = K_uu,
// and all predictive and KL computations run on that form:
//
//   mean(x) = mu(x) + a^T q_w,   var(x) = k(x, x) - |a|^2 + |S_w^T a|^2,
//   a = L^{-1} k_u(x).

#include <cmath>
#include <numbers>
#include <string>

#include "gauss.hpp"
#include "inducing.hpp"
#include "likelihood.hpp"

namespace svgp {

enum class Whitening { kNone, kMeanOnly, kFull };

inline std::string to_string(Whitening w) {
  switch (w) {
    case Whitening::kNone:
      return "none";
    case Whitening::kMeanOnly:
      return "mean_only";
    case Whitening::kFull:
      return "full";
  }
  return "unknown";
}

// q(u) (kNone), q(v) with v = u - mu_u (kMeanOnly) or q(w) (kFull), one
// column of q_mean and one lower-triangular q_sqrt per output.
template <class T>
struct VariationalState {
  Matrix<T> q_mean;             // M x D
  std::vector<Matrix<T>> q_sqrt;  // D of M x M, lower triangular
  Whitening whitening = Whitening::kFull;

  std::size_t size() const { return q_mean.rows(); }
  std::size_t outputs() const { return q_mean.cols(); }
};

template <class T>
struct SVGPLayer {
  KernelSpec<T> kernel;
  MeanSpec<T> mean;
  InducingSet<T> inducing;
  VariationalState<T> vstate;

  std::size_t input_dim() const { return kernel.input_dim(); }
  std::size_t outputs() const { return vstate.outputs(); }

  void validate() const {
    inducing.validate();
    mean.validate();
    const std::size_t m = inducing.size();
    require_shape(inducing.input_dim() == kernel.input_dim(),
                  "layer: inducing dimension differs from kernel dimension");
    require_shape(mean.input_dim == kernel.input_dim(), "layer: mean input dimension");
    require_shape(mean.output_dim == outputs(), "layer: mean output dimension");
    require_shape(vstate.size() == m, "layer: q_mean rows must equal the inducing count");
    require_shape(vstate.q_sqrt.size() == outputs(), "layer: one q_sqrt per output");
    for (const auto& s : vstate.q_sqrt)
      require_shape(s.rows() == m && s.cols() == m, "layer: q_sqrt must be M x M");
  }
};

// Per-evaluation quantities shared by every prediction from one layer.
template <class T>
struct LayerCache {
  CholFactor<T> chol;               // of K_uu
  Matrix<T> q_white_t;              // D x M, rows are q_w per output
  std::vector<Matrix<T>> s_white_t;  // per output, S_w^T (upper triangular)
  std::vector<std::vector<T>> mu_u;  // prior inducing mean per output
};

// Diagonal marginals, N x D.
template <class T>
struct Marginals {
  Matrix<T> mean;
  Matrix<T> var;
};

namespace detail {

// L^{-1} S for lower-triangular L and S; the result is lower triangular.
template <class T>
Matrix<T> solve_lower_lower(const Matrix<T>& lower, const Matrix<T>& s) {
  const std::size_t m = lower.rows();
  const Matrix<T> st = s.transpose();
  Matrix<T> xt(m, m);  // row j is column j of the result
  for (std::size_t j = 0; j < m; ++j) {
    std::span<T> x = xt.row(j);
    for (std::size_t i = j; i < m; ++i) {
      std::span<const T> li = lower.row(i).subspan(j, i - j);
      std::span<const T> xi(x.data() + j, i - j);
      x[i] = dot_plus(st(j, i), li, xi, -1.0) / lower(i, i);
    }
  }
  return xt.transpose();
}

// L S for lower-triangular L and S.
template <class T>
Matrix<T> mul_lower_lower(const Matrix<T>& lower, const Matrix<T>& s) {
  const std::size_t m = lower.rows();
  const Matrix<T> st = s.transpose();
  Matrix<T> out(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      std::span<const T> li = lower.row(i).subspan(j, i - j + 1);
      std::span<const T> sj = st.row(j).subspan(j, i - j + 1);
      out(i, j) = dot<T>(li, sj);
    }
  return out;
}

template <class T>
std::vector<T> mul_lower_vec(const Matrix<T>& lower, std::span<const T> v) {
  std::vector<T> out(lower.rows());
  for (std::size_t i = 0; i < lower.rows(); ++i)
    out[i] = dot<T>(lower.row(i).subspan(0, i + 1), v.subspan(0, i + 1));
  return out;
}

template <class T>
void require_finite_inputs(const Matrix<T>& x, const char* what) {
  for (const T& v : x.data())
    if (!std::isfinite(value_of(v))) throw NonFiniteError(std::string(what) + ": non-finite input");
}

}  // namespace detail

template <class T>
LayerCache<T> prepare(const SVGPLayer<T>& layer) {
  layer.validate();
  LayerCache<T> c;
  c.chol = cholesky(kuu(layer.inducing, layer.kernel));
  const std::size_t m = layer.inducing.size(), d_out = layer.outputs();
  c.q_white_t = Matrix<T>(d_out, m);
  c.s_white_t.resize(d_out);
  c.mu_u.resize(d_out);
  for (std::size_t d = 0; d < d_out; ++d) {
    c.mu_u[d] = prior_mu_u(layer.inducing, layer.mean, d);
    std::vector<T> q = layer.vstate.q_mean.col(d);
    const Matrix<T>& s = layer.vstate.q_sqrt[d];
    switch (layer.vstate.whitening) {
      case Whitening::kFull:
        c.s_white_t[d] = s.transpose();
        break;
      case Whitening::kNone:
        for (std::size_t i = 0; i < m; ++i) q[i] = q[i] - c.mu_u[d][i];
        [[fallthrough]];
      case Whitening::kMeanOnly:
        q = solve_lower(c.chol.lower, std::span<const T>(q));
        c.s_white_t[d] = detail::solve_lower_lower(c.chol.lower, s).transpose();
        break;
    }
    for (std::size_t i = 0; i < m; ++i) c.q_white_t(d, i) = q[i];
  }
  return c;
}

// Rows a_n = L^{-1} k_u(x_n).
template <class T>
Matrix<T> projection_rows(const SVGPLayer<T>& layer, const LayerCache<T>& c, const Matrix<T>& x) {
  return solve_lower_rows(c.chol.lower, kfu(x, layer.inducing, layer.kernel));
}

namespace detail {

// S_w^T a for upper-triangular S_w^T.
template <class T>
std::vector<T> s_t_times(const Matrix<T>& s_t, std::span<const T> a) {
  const std::size_t m = a.size();
  std::vector<T> b(m);
  for (std::size_t j = 0; j < m; ++j) b[j] = dot<T>(s_t.row(j).subspan(j), a.subspan(j));
  return b;
}

}  // namespace detail

// Diagonal predictive q(f(x_n)) for every output; never forms N x N.
template <class T>
Marginals<T> predict_marginals(const SVGPLayer<T>& layer, const LayerCache<T>& c,
                               const Matrix<T>& x) {
  detail::require_finite_inputs(x, "predict_f");
  const std::size_t n = x.rows(), d_out = layer.outputs();
  const Matrix<T> a = projection_rows(layer, c, x);
  const Matrix<T> mu = mean_vector(layer.mean, x);
  Marginals<T> out{Matrix<T>(n, d_out), Matrix<T>(n, d_out)};
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const T> ai = a.row(i);
    const T prior_var = layer.kernel.variance - sum_squares(ai);
    for (std::size_t d = 0; d < d_out; ++d) {
      out.mean(i, d) = dot_plus(mu(i, d), ai, c.q_white_t.row(d), 1.0);
      const std::vector<T> b = detail::s_t_times(c.s_white_t[d], ai);
      out.var(i, d) = prior_var + sum_squares(std::span<const T>(b));
    }
  }
  return out;
}

// Full covariance across the N inputs, per output.
template <class T>
struct FullPrediction {
  Matrix<T> mean;             // N x D
  std::vector<Matrix<T>> cov;  // D of N x N
};

template <class T>
FullPrediction<T> predict_full(const SVGPLayer<T>& layer, const LayerCache<T>& c,
                               const Matrix<T>& x) {
  detail::require_finite_inputs(x, "predict_f");
  const std::size_t n = x.rows(), d_out = layer.outputs();
  const Matrix<T> a = projection_rows(layer, c, x);
  const Matrix<T> mu = mean_vector(layer.mean, x);
  const Matrix<T> kff = kern_matrix(layer.kernel, x);
  FullPrediction<T> out{Matrix<T>(n, d_out), std::vector<Matrix<T>>(d_out, Matrix<T>(n, n))};
  for (std::size_t d = 0; d < d_out; ++d) {
    Matrix<T> b(n, a.cols());
    for (std::size_t i = 0; i < n; ++i) {
      out.mean(i, d) = dot_plus(mu(i, d), a.row(i), c.q_white_t.row(d), 1.0);
      const std::vector<T> bi = detail::s_t_times(c.s_white_t[d], a.row(i));
      std::copy(bi.begin(), bi.end(), b.row(i).begin());
    }
    Matrix<T>& cov = out.cov[d];
    for (std::size_t i = 0; i < n; ++i) {
      // The diagonal follows the same arithmetic as predict_marginals.
      cov(i, i) = kff(i, i) - sum_squares(a.row(i)) + sum_squares(b.row(i));
      for (std::size_t j = 0; j < i; ++j) {
        const T v = dot_plus(kff(i, j), a.row(i), a.row(j), -1.0);
        cov(i, j) = dot_plus(v, b.row(i), b.row(j), 1.0);
        cov(j, i) = cov(i, j);
      }
    }
  }
  return out;
}

template <class T>
Marginals<T> predict_f(const SVGPLayer<T>& layer, const Matrix<T>& x) {
  return predict_marginals(layer, prepare(layer), x);
}

template <class T>
FullPrediction<T> predict_f_full(const SVGPLayer<T>& layer, const Matrix<T>& x) {
  return predict_full(layer, prepare(layer), x);
}

// Sum over outputs of KL(q(w) || N(0, I)); equals the unwhitened KL against
// N(mu_u, K_uu) for the same posterior.
template <class T>
T prior_kl(const LayerCache<T>& c) {
  using std::log;
  const std::size_t m = c.q_white_t.cols();
  T total(0.0);
  for (std::size_t d = 0; d < c.s_white_t.size(); ++d) {
    const Matrix<T>& st = c.s_white_t[d];
    T log_diag(0.0);
    for (std::size_t i = 0; i < m; ++i) log_diag += log(st(i, i));
    T frob(0.0);
    for (std::size_t j = 0; j < m; ++j) frob += sum_squares(st.row(j).subspan(j));
    const T quad = sum_squares(c.q_white_t.row(d));
    T kl_d = T(0.5) * (frob + quad - T(static_cast<double>(m))) - log_diag;
    if (value_of(kl_d) < 0.0 && value_of(kl_d) > -1e-10) kl_d = T(0.0);
    total += kl_d;
  }
  return total;
}

template <class T>
T prior_kl(const SVGPLayer<T>& layer) {
  return prior_kl(prepare(layer));
}

// Shared ELBO assembly so every objective scales and subtracts identically.
template <class T>
T assemble_elbo(const T& data_term, std::size_t batch, std::size_t total_n, const T& kl_term) {
  require_shape(batch >= 1, "elbo: batch must be nonempty");
  require_shape(total_n >= batch, "elbo: total_N must be at least the batch size");
  const double scale = static_cast<double>(total_n) / static_cast<double>(batch);
  return T(scale) * data_term - kl_term;
}

template <class T>
PointMarginal<T> point_marginal(const Marginals<T>& m, std::size_t i) {
  PointMarginal<T> p;
  p.mean.assign(m.mean.row(i).begin(), m.mean.row(i).end());
  p.var.assign(m.var.row(i).begin(), m.var.row(i).end());
  return p;
}

// Sum over the batch of E_q[ln p(y_n | f(x_n))].
template <class T>
T expected_log_lik(const LikelihoodSpec<T>& lik, const Marginals<T>& f, const MatrixD& y,
                   const QuadratureRule& quad) {
  require_shape(y.rows() == f.mean.rows(), "elbo: X and y row counts differ");
  T s(0.0);
  for (std::size_t i = 0; i < y.rows(); ++i)
    s += variational_expectation(lik, y.row(i), point_marginal(f, i), quad);
  return s;
}

template <class T>
T elbo(const SVGPLayer<T>& layer, const LikelihoodSpec<T>& lik, const Matrix<T>& x,
       const MatrixD& y, std::size_t total_n, const QuadratureRule& quad = {}) {
  require_shape(x.rows() >= 1, "elbo: batch must be nonempty");
  require_shape(lik.arity() == layer.outputs(),
                "elbo: likelihood arity differs from the layer's output count");
  const LayerCache<T> c = prepare(layer);
  const Marginals<T> f = predict_marginals(layer, c, x);
  return assemble_elbo(expected_log_lik(lik, f, y, quad), x.rows(), total_n, prior_kl(c));
}

// Re-express q in another parameterization; the posterior process is unchanged.
template <class T>
SVGPLayer<T> convert_whitening(const SVGPLayer<T>& layer, Whitening target) {
  const LayerCache<T> c = prepare(layer);
  SVGPLayer<T> out = layer;
  out.vstate.whitening = target;
  const std::size_t m = layer.inducing.size();
  for (std::size_t d = 0; d < layer.outputs(); ++d) {
    const std::vector<T> qw(c.q_white_t.row(d).begin(), c.q_white_t.row(d).end());
    const Matrix<T> sw = c.s_white_t[d].transpose();
    std::vector<T> q = qw;
    Matrix<T> s = sw;
    if (target != Whitening::kFull) {
      q = detail::mul_lower_vec(c.chol.lower, std::span<const T>(qw));
      s = detail::mul_lower_lower(c.chol.lower, sw);
      if (target == Whitening::kNone)
        for (std::size_t i = 0; i < m; ++i) q[i] = q[i] + c.mu_u[d][i];
    }
    for (std::size_t i = 0; i < m; ++i) out.vstate.q_mean(i, d) = q[i];
    out.vstate.q_sqrt[d] = std::move(s);
  }
  return out;
}

template <class T>
SVGPLayer<T> to_whitened(const SVGPLayer<T>& layer) {
  return convert_whitening(layer, Whitening::kFull);
}

template <class T>
SVGPLayer<T> from_whitened(const SVGPLayer<T>& layer, Whitening target = Whitening::kNone) {
  return convert_whitening(layer, target);
}

// Dense GP regression with a homoscedastic Gaussian likelihood.
struct ExactGP {
  Gaussian<double> posterior;  // at Xnew
  double log_marginal = 0.0;
};

ExactGP exact_gp_oracle(const KernelSpec<double>& kernel, const MeanSpec<double>& mean,
                        double noise_variance, const MatrixD& x, const std::vector<double>& y,
                        const MatrixD& xnew);

}  // namespace svgp
