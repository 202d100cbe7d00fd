#include "svgp.hpp"

namespace svgp {

ExactGP exact_gp_oracle(const KernelSpec<double>& kernel, const MeanSpec<double>& mean,
                        double noise_variance, const MatrixD& x, const std::vector<double>& y,
                        const MatrixD& xnew) {
  require_shape(noise_variance > 0.0, "exact GP: noise variance must be positive");
  require_shape(x.rows() == y.size(), "exact GP: X and y lengths differ");
  ExactGP out;
  const Matrix<double> mu_new = mean_vector(mean, xnew);
  const Matrix<double> kss = kern_matrix(kernel, xnew);
  out.posterior.mean = mu_new.col(0);
  out.posterior.cov = kss;
  if (x.rows() == 0) return out;

  const std::size_t n = x.rows();
  MatrixD kxx = kern_matrix(kernel, x);
  for (std::size_t i = 0; i < n; ++i) kxx(i, i) += noise_variance;
  const CholFactor<double> f = cholesky(kxx);
  const Matrix<double> mu = mean_vector(mean, x);
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - mu(i, 0);
  const std::vector<double> white = solve_lower(f.lower, std::span<const double>(r));
  out.log_marginal = -0.5 * sum_squares(std::span<const double>(white)) -
                     0.5 * log_det_from_factor(f.lower) -
                     0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  // V = L^{-1} K(X, Xnew), stored as rows per test point.
  const MatrixD v = solve_lower_rows(f.lower, kern_matrix(kernel, xnew, x));
  for (std::size_t i = 0; i < xnew.rows(); ++i) {
    out.posterior.mean[i] = dot_plus(mu_new(i, 0), v.row(i), std::span<const double>(white), 1.0);
    for (std::size_t j = 0; j < xnew.rows(); ++j)
      out.posterior.cov(i, j) = dot_plus(kss(i, j), v.row(i), v.row(j), -1.0);
  }
  return out;
}

}  // namespace svgp
