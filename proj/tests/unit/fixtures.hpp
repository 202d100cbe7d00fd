#pragma once

#include <Eigen/Dense>
#include <random>

#include "deep.hpp"

namespace fixtures {

using namespace svgp;

inline MeanSpec<double> zero_mean(std::size_t in, std::size_t out = 1) {
  MeanSpec<double> m;
  m.input_dim = in;
  m.output_dim = out;
  return m;
}

inline MeanSpec<double> constant_mean(std::size_t in, std::vector<double> c) {
  MeanSpec<double> m;
  m.family = MeanFamily::kConstant;
  m.input_dim = in;
  m.output_dim = c.size();
  m.constant = std::move(c);
  return m;
}

// Prior-state layer with an RBF kernel and Dirac inducing points.
inline SVGPLayer<double> make_layer(const MatrixD& z, double variance, std::vector<double> ls,
                                    std::size_t outputs = 1,
                                    Whitening w = Whitening::kFull) {
  SVGPLayer<double> layer;
  layer.kernel.variance = variance;
  layer.kernel.lengthscales = std::move(ls);
  layer.mean = zero_mean(z.cols(), outputs);
  layer.inducing.points = z;
  layer.vstate.whitening = w;
  layer.vstate.q_mean = MatrixD(z.rows(), outputs);
  layer.vstate.q_sqrt.assign(outputs, MatrixD::identity(z.rows()));
  return layer;
}

inline MOLayer<double> wrap(SVGPLayer<double> layer) {
  MOLayer<double> mo;
  mo.latents.push_back(std::move(layer));
  return mo;
}

struct Rand {
  std::mt19937_64 gen;
  explicit Rand(std::uint64_t seed) : gen(seed) {}
  double normal() { return std::normal_distribution<double>()(gen); }
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen); }
  MatrixD normal_matrix(std::size_t r, std::size_t c, double scale = 1.0) {
    MatrixD m(r, c);
    for (double& v : m.data()) v = scale * normal();
    return m;
  }
  MatrixD uniform_matrix(std::size_t r, std::size_t c, double a, double b) {
    MatrixD m(r, c);
    for (double& v : m.data()) v = uniform(a, b);
    return m;
  }
  // Lower triangular with positive diagonal.
  MatrixD lower(std::size_t m, double scale = 0.5) {
    MatrixD l(m, m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < i; ++j) l(i, j) = scale * normal();
      l(i, i) = 0.2 + std::abs(normal()) * scale;
    }
    return l;
  }
};

inline void randomize_state(SVGPLayer<double>& layer, Rand& r) {
  const std::size_t m = layer.inducing.size();
  layer.vstate.q_mean = r.normal_matrix(m, layer.outputs());
  for (auto& s : layer.vstate.q_sqrt) s = r.lower(m);
}

inline Eigen::MatrixXd to_eigen(const MatrixD& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

inline std::vector<std::size_t> iota(std::size_t n, std::size_t start = 0) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = start + i;
  return v;
}

}  // namespace fixtures
