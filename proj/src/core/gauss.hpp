#pragma once

// Dense multivariate-Gaussian algebra: conditioning, marginal mixing, linear
// transforms, KL divergence and reparameterized sampling. Every inverse is a
// pair of triangular solves against a Cholesky factor.

#include <cmath>
#include <string>

#include "linalg.hpp"

namespace svgp {

template <class T>
struct Gaussian {
  std::vector<T> mean;
  Matrix<T> cov;

  std::size_t dim() const { return mean.size(); }
};

// Joint Gaussian over (f, u), stored by blocks.
template <class T>
struct PartitionedGaussian {
  std::vector<T> mean_f;
  std::vector<T> mean_u;
  Matrix<T> cov_ff;
  Matrix<T> cov_fu;
  Matrix<T> cov_uu;
  bool possibly_singular = false;  // e.g. produced by linear_push
};

struct LinearMap {
  MatrixD matrix;
};

// Everything needed to condition f on u: the factor of Sigma_uu,
// B = L^{-1} Sigma_uf (stored transposed, one row per f) and the residual
// covariance Sigma_ff - Sigma_fu Sigma_uu^{-1} Sigma_uf.
template <class T>
struct GaussianConditional {
  std::vector<T> mean_f;
  std::vector<T> mean_u;
  CholFactor<T> factor_uu;
  Matrix<T> projection_t;  // (L^{-1} Sigma_uf)^T, nf x nu
  Matrix<T> residual_cov;
};

template <class T>
void check_partition(const PartitionedGaussian<T>& j) {
  const std::size_t nf = j.mean_f.size(), nu = j.mean_u.size();
  require_shape(j.cov_ff.rows() == nf && j.cov_ff.cols() == nf, "partition: cov_ff shape");
  require_shape(j.cov_fu.rows() == nf && j.cov_fu.cols() == nu, "partition: cov_fu shape");
  require_shape(j.cov_uu.rows() == nu && j.cov_uu.cols() == nu, "partition: cov_uu shape");
}

template <class T>
GaussianConditional<T> conditional(const PartitionedGaussian<T>& joint) {
  check_partition(joint);
  GaussianConditional<T> c;
  c.mean_f = joint.mean_f;
  c.mean_u = joint.mean_u;
  c.factor_uu = cholesky(joint.cov_uu);
  c.projection_t = solve_lower_rows(c.factor_uu.lower, joint.cov_fu);
  const std::size_t nf = joint.mean_f.size();
  c.residual_cov = Matrix<T>(nf, nf);
  for (std::size_t i = 0; i < nf; ++i)
    for (std::size_t j = 0; j < nf; ++j)
      c.residual_cov(i, j) =
          dot_plus(joint.cov_ff(i, j), c.projection_t.row(i), c.projection_t.row(j), -1.0);
  return c;
}

// p(f | u = u_obs)
template <class T>
Gaussian<T> condition(const GaussianConditional<T>& c, std::span<const T> u_obs) {
  require_shape(u_obs.size() == c.mean_u.size(), "condition: u_obs has wrong length");
  std::vector<T> diff(u_obs.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = u_obs[i] - c.mean_u[i];
  const std::vector<T> white = solve_lower(c.factor_uu.lower, std::span<const T>(diff));
  std::vector<T> mean(c.mean_f.size());
  for (std::size_t i = 0; i < mean.size(); ++i)
    mean[i] = dot_plus(c.mean_f[i], c.projection_t.row(i), std::span<const T>(white), 1.0);
  return {std::move(mean), c.residual_cov};
}

template <class T>
Gaussian<T> condition(const PartitionedGaussian<T>& joint, std::span<const T> u_obs) {
  return condition(conditional(joint), u_obs);
}

// int p(f | u) q(u) du
template <class T>
Gaussian<T> mix_marginal(const GaussianConditional<T>& c, const Gaussian<T>& q_u) {
  const std::size_t nu = c.mean_u.size();
  require_shape(q_u.dim() == nu && q_u.cov.rows() == nu && q_u.cov.cols() == nu,
                "mix_marginal: q_u dimension differs from the conditioning dimension");
  Gaussian<T> out = condition(c, std::span<const T>(q_u.mean));
  // B^T L^{-1} Q L^{-T} B added back onto the residual covariance.
  const Matrix<T>& lower = c.factor_uu.lower;
  const Matrix<T> x = solve_lower_matrix(lower, q_u.cov);               // L^{-1} Q
  const Matrix<T> g = solve_lower_matrix(lower, x.transpose());        // L^{-1} Q L^{-T}
  const Matrix<T> bg = matmul(c.projection_t, g);                     // nf x nu
  for (std::size_t i = 0; i < out.mean.size(); ++i)
    for (std::size_t j = 0; j < out.mean.size(); ++j)
      out.cov(i, j) = dot_plus(out.cov(i, j), bg.row(i), c.projection_t.row(j), 1.0);
  return out;
}

template <class T>
Gaussian<T> mix_marginal(const PartitionedGaussian<T>& joint, const Gaussian<T>& q_u) {
  return mix_marginal(conditional(joint), q_u);
}

// Joint over (f, u = Phi f). The joint covariance is singular whenever Phi
// has fewer columns of rank than rows of the joint.
template <class T>
PartitionedGaussian<T> linear_push(const Gaussian<T>& p_f, const LinearMap& phi) {
  const std::size_t n = p_f.dim();
  require_shape(phi.matrix.cols() == n, "linear_push: map width must equal Gaussian dimension");
  require_shape(p_f.cov.rows() == n && p_f.cov.cols() == n, "linear_push: covariance shape");
  for (double v : phi.matrix.data())
    if (!std::isfinite(v)) throw NonFiniteError("linear_push: map has non-finite entries");
  const Matrix<T> map = lift<T>(phi.matrix);
  PartitionedGaussian<T> j;
  j.mean_f = p_f.mean;
  j.mean_u = matvec(map, std::span<const T>(p_f.mean));
  j.cov_ff = p_f.cov;
  j.cov_fu = matmul_nt(p_f.cov, map);           // Sigma_ff Phi^T
  j.cov_uu = matmul(map, j.cov_fu);             // Phi Sigma_ff Phi^T
  j.possibly_singular = true;
  return j;
}

// KL(q || p) in nats.
template <class T>
T kl(const Gaussian<T>& q, const Gaussian<T>& p) {
  const std::size_t n = q.dim();
  require_shape(p.dim() == n && q.cov.rows() == n && p.cov.rows() == n,
                "kl: dimensions differ");
  const CholFactor<T> lq = cholesky(q.cov);
  const CholFactor<T> lp = cholesky(p.cov);
  // tr(P^{-1} Q) = ||Lp^{-1} Lq||_F^2
  const Matrix<T> r = solve_lower_matrix(lp.lower, lq.lower);
  std::vector<T> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = p.mean[i] - q.mean[i];
  const std::vector<T> white = solve_lower(lp.lower, std::span<const T>(diff));
  const T value = T(0.5) * (sum_squares(std::span<const T>(r.data())) +
                            sum_squares(std::span<const T>(white)) -
                            T(static_cast<double>(n)) + log_det_from_factor(lp.lower) -
                            log_det_from_factor(lq.lower));
  if (value_of(value) < 0.0) return T(0.0);
  return value;
}

// mean + L eps for every row eps of `noise`.
template <class T>
Matrix<T> sample(const Gaussian<T>& p, const MatrixD& noise) {
  require_shape(noise.cols() == p.dim(), "sample: noise width must equal Gaussian dimension");
  const CholFactor<T> l = cholesky(p.cov);
  Matrix<T> out(noise.rows(), p.dim());
  for (std::size_t s = 0; s < noise.rows(); ++s) {
    const std::vector<T> eps(noise.row(s).begin(), noise.row(s).end());
    for (std::size_t i = 0; i < p.dim(); ++i) {
      std::span<const T> li = l.lower.row(i).subspan(0, i + 1);
      out(s, i) = dot_plus(p.mean[i], li, std::span<const T>(eps.data(), i + 1), 1.0);
    }
  }
  return out;
}

}  // namespace svgp
