#pragma once

// Stationary covariance functions with ARD lengthscales, their first and
// mixed second derivatives, and prior mean functions.

#include <cmath>
#include <string>

#include "matrix.hpp"

namespace svgp {

enum class KernelFamily { kRbf };

inline std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::kRbf:
      return "rbf";
  }
  return "unknown";
}

// Profile g(r2) of a stationary kernel k = variance * g(r2) with
// r2 = sum_d (x_d - x'_d)^2 / l_d^2, plus dg/dr2 and d2g/dr2^2.
template <class T>
struct Profile {
  T g, dg, d2g;
};

template <class T>
Profile<T> profile(KernelFamily family, const T& r2) {
  using std::exp;
  switch (family) {
    case KernelFamily::kRbf: {
      const T g = exp(T(-0.5) * r2);
      return {g, T(-0.5) * g, T(0.25) * g};
    }
  }
  throw ShapeError("unknown kernel family");
}

template <class T>
struct KernelSpec {
  KernelFamily family = KernelFamily::kRbf;
  T variance = T(1.0);
  std::vector<T> lengthscales;

  std::size_t input_dim() const { return lengthscales.size(); }
};

namespace detail {

template <class T>
Matrix<T> scale_inputs(const KernelSpec<T>& k, const Matrix<T>& a) {
  require_shape(a.cols() == k.input_dim(), "kernel: input dimension " + std::to_string(a.cols()) +
                                               " does not match " +
                                               std::to_string(k.input_dim()) + " lengthscales");
  std::vector<T> inv(k.input_dim());
  for (std::size_t d = 0; d < inv.size(); ++d) inv[d] = T(1.0) / k.lengthscales[d];
  Matrix<T> out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t d = 0; d < a.cols(); ++d) out(i, d) = a(i, d) * inv[d];
  return out;
}

}  // namespace detail

// K[i, j] = k(A_i, B_j)
template <class T>
Matrix<T> kern_matrix(const KernelSpec<T>& k, const Matrix<T>& a, const Matrix<T>& b) {
  const Matrix<T> as = detail::scale_inputs(k, a);
  const Matrix<T> bs = detail::scale_inputs(k, b);
  Matrix<T> out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j)
      out(i, j) = k.variance * profile(k.family, squared_distance(as.row(i), bs.row(j))).g;
  return out;
}

// Symmetric K(A, A); entries above the diagonal are mirrored, never recomputed.
template <class T>
Matrix<T> kern_matrix(const KernelSpec<T>& k, const Matrix<T>& a) {
  const Matrix<T> as = detail::scale_inputs(k, a);
  Matrix<T> out(a.rows(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    out(i, i) = k.variance;
    for (std::size_t j = 0; j < i; ++j) {
      out(i, j) = k.variance * profile(k.family, squared_distance(as.row(i), as.row(j))).g;
      out(j, i) = out(i, j);
    }
  }
  return out;
}

template <class T>
std::vector<T> kern_diag(const KernelSpec<T>& k, std::size_t n) {
  return std::vector<T>(n, k.variance);
}

// d k(x, x') / d x'_d
template <class T>
T kern_grad(const KernelSpec<T>& k, std::span<const T> x, std::span<const T> xp, std::size_t d) {
  require_shape(x.size() == k.input_dim() && xp.size() == k.input_dim() && d < k.input_dim(),
                "kern_grad: dimension mismatch");
  T r2(0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T diff = (x[i] - xp[i]) / k.lengthscales[i];
    r2 += diff * diff;
  }
  const Profile<T> p = profile(k.family, r2);
  const T l2 = k.lengthscales[d] * k.lengthscales[d];
  // dr2/dx'_d = -2 (x_d - x'_d) / l_d^2
  return k.variance * p.dg * T(-2.0) * (x[d] - xp[d]) / l2;
}

// d^2 k(x, x') / d x_a d x'_b
template <class T>
T kern_cross_hess(const KernelSpec<T>& k, std::span<const T> x, std::span<const T> xp,
                  std::size_t a, std::size_t b) {
  require_shape(x.size() == k.input_dim() && xp.size() == k.input_dim() && a < k.input_dim() &&
                    b < k.input_dim(),
                "kern_cross_hess: dimension mismatch");
  T r2(0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T diff = (x[i] - xp[i]) / k.lengthscales[i];
    r2 += diff * diff;
  }
  const Profile<T> p = profile(k.family, r2);
  const T la2 = k.lengthscales[a] * k.lengthscales[a];
  const T lb2 = k.lengthscales[b] * k.lengthscales[b];
  const T dr_a = T(2.0) * (x[a] - xp[a]) / la2;    // dr2/dx_a
  const T dr_b = T(-2.0) * (x[b] - xp[b]) / lb2;   // dr2/dx'_b
  T h = p.d2g * dr_a * dr_b;
  if (a == b) h += p.dg * T(-2.0) / la2;           // d2r2/dx_a dx'_a
  return k.variance * h;
}

// ---------------------------------------------------------------------------
// Mean functions

enum class MeanFamily { kZero, kConstant, kLinear, kIdentity };

inline std::string to_string(MeanFamily f) {
  switch (f) {
    case MeanFamily::kZero:
      return "zero";
    case MeanFamily::kConstant:
      return "constant";
    case MeanFamily::kLinear:
      return "linear";
    case MeanFamily::kIdentity:
      return "identity";
  }
  return "unknown";
}

template <class T>
struct MeanSpec {
  MeanFamily family = MeanFamily::kZero;
  std::size_t input_dim = 0;
  std::size_t output_dim = 1;
  std::vector<T> constant;  // kConstant: output_dim
  Matrix<T> weight;         // kLinear: output_dim x input_dim
  std::vector<T> bias;      // kLinear: output_dim

  void validate() const {
    switch (family) {
      case MeanFamily::kZero:
        break;
      case MeanFamily::kConstant:
        require_shape(constant.size() == output_dim, "constant mean: value length != outputs");
        break;
      case MeanFamily::kLinear:
        require_shape(weight.rows() == output_dim && weight.cols() == input_dim &&
                          bias.size() == output_dim,
                      "linear mean: weight/bias shapes do not conform");
        break;
      case MeanFamily::kIdentity:
        require_shape(input_dim == output_dim,
                      "identity mean requires input dim == output dim");
        break;
    }
  }
};

// (batch x output_dim) matrix of mean values.
template <class T>
Matrix<T> mean_vector(const MeanSpec<T>& m, const Matrix<T>& a) {
  m.validate();
  require_shape(a.cols() == m.input_dim, "mean_vector: input dimension mismatch");
  Matrix<T> out(a.rows(), m.output_dim);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t g = 0; g < m.output_dim; ++g) {
      switch (m.family) {
        case MeanFamily::kZero:
          break;
        case MeanFamily::kConstant:
          out(i, g) = m.constant[g];
          break;
        case MeanFamily::kLinear:
          out(i, g) = dot_plus(m.bias[g], m.weight.row(g), a.row(i), 1.0);
          break;
        case MeanFamily::kIdentity:
          out(i, g) = a(i, g);
          break;
      }
    }
  }
  return out;
}

// d mu_g(x) / d x_d. Every shipped family has a closed form; the check stays
// for families that might not.
template <class T>
T mean_gradient(const MeanSpec<T>& m, std::size_t g, std::size_t d) {
  m.validate();
  require_shape(g < m.output_dim && d < m.input_dim, "mean_gradient: index out of range");
  switch (m.family) {
    case MeanFamily::kZero:
    case MeanFamily::kConstant:
      return T(0.0);
    case MeanFamily::kLinear:
      return m.weight(g, d);
    case MeanFamily::kIdentity:
      return T(g == d ? 1.0 : 0.0);
  }
  throw UnsupportedMean("mean family has no derivative");
}

}  // namespace svgp
