#pragma once

// Inducing-variable constructions. Dirac features are ordinary inducing
// points u_m = f(Z_m); derivative features are u_m = d f(x) / d x_{d(m)} at
// x = Z_m. Both reduce to kernel evaluations, so K_uu and K_fu are all a
// model needs from them.

#include <memory>

#include "kernel.hpp"

namespace svgp {

enum class InducingKind { kDirac, kDerivative };

template <class T>
struct InducingSet {
  InducingKind kind = InducingKind::kDirac;
  Matrix<T> points;                 // M x d
  std::vector<std::size_t> dims;    // kDerivative: d(m) per point

  std::size_t size() const { return points.rows(); }
  std::size_t input_dim() const { return points.cols(); }

  void validate() const {
    require_shape(points.rows() >= 1, "inducing set must hold at least one point");
    for (const T& v : points.data())
      if (!std::isfinite(value_of(v))) throw NonFiniteError("inducing points must be finite");
    if (kind == InducingKind::kDerivative) {
      require_shape(dims.size() == points.rows(), "derivative features need one dim per point");
      for (std::size_t d : dims)
        require_shape(d < points.cols(), "derivative feature dim out of range");
    }
  }
};

template <class T>
Matrix<T> kuu(const InducingSet<T>& ind, const KernelSpec<T>& k) {
  ind.validate();
  if (ind.kind == InducingKind::kDirac) return kern_matrix(k, ind.points);
  const std::size_t m = ind.size();
  Matrix<T> out(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      out(i, j) = kern_cross_hess(k, ind.points.row(i), ind.points.row(j), ind.dims[i], ind.dims[j]);
      out(j, i) = out(i, j);
    }
  return out;
}

// N x M cross-covariance between f(X) and u.
template <class T>
Matrix<T> kfu(const Matrix<T>& x, const InducingSet<T>& ind, const KernelSpec<T>& k) {
  ind.validate();
  require_shape(x.cols() == ind.input_dim(), "kfu: input dimension differs from inducing set");
  if (ind.kind == InducingKind::kDirac) return kern_matrix(k, x, ind.points);
  Matrix<T> out(x.rows(), ind.size());
  for (std::size_t n = 0; n < x.rows(); ++n)
    for (std::size_t m = 0; m < ind.size(); ++m)
      out(n, m) = kern_grad(k, x.row(n), ind.points.row(m), ind.dims[m]);
  return out;
}

// Prior mean of u for output g of the mean function.
template <class T>
std::vector<T> prior_mu_u(const InducingSet<T>& ind, const MeanSpec<T>& mean, std::size_t g = 0) {
  ind.validate();
  std::vector<T> mu(ind.size());
  if (ind.kind == InducingKind::kDirac) {
    const Matrix<T> values = mean_vector(mean, ind.points);
    for (std::size_t m = 0; m < ind.size(); ++m) mu[m] = values(m, g);
  } else {
    for (std::size_t m = 0; m < ind.size(); ++m) mu[m] = mean_gradient(mean, g, ind.dims[m]);
  }
  return mu;
}

// Interdomain features whose K_uu is diagonal (spectral or eigenfunction
// features). Only the interface ships; implementations supply K_uu's
// diagonal and the cross-covariance.
template <class T>
class DiagKuuFeatures {
 public:
  virtual ~DiagKuuFeatures() = default;
  virtual std::size_t size() const = 0;
  virtual std::vector<T> kuu_diagonal(const KernelSpec<T>& k) const = 0;
  virtual Matrix<T> kfu(const Matrix<T>& x, const KernelSpec<T>& k) const = 0;
};

template <class T>
Matrix<T> kuu(const DiagKuuFeatures<T>& features, const KernelSpec<T>& k) {
  const std::vector<T> diag = features.kuu_diagonal(k);
  require_shape(diag.size() == features.size(), "diagonal features: wrong diagonal length");
  Matrix<T> out(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) {
    if (!(value_of(diag[i]) > 0.0))
      throw FactorizationError("diagonal features: K_uu entry " + std::to_string(i) +
                               " is not positive");
    out(i, i) = diag[i];
  }
  return out;
}

}  // namespace svgp
