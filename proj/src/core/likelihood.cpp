#include "likelihood.hpp"

#include <Eigen/Eigenvalues>

#include <map>
#include <memory>
#include <mutex>

namespace svgp {

std::string to_string(LikelihoodKind kind) {
  switch (kind) {
    case LikelihoodKind::kGaussian:
      return "gaussian";
    case LikelihoodKind::kHeteroscedastic:
      return "heteroscedastic";
    case LikelihoodKind::kBernoulli:
      return "bernoulli";
  }
  return "unknown";
}

namespace {

// Golub-Welsch: nodes are eigenvalues of the symmetric Jacobi matrix of the
// Hermite recurrence, weights are sqrt(pi) times the squared first
// eigenvector components.
GaussHermite build_table(std::size_t order) {
  const auto n = static_cast<Eigen::Index>(order);
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 1; k < n; ++k) {
    const double beta = std::sqrt(static_cast<double>(k) / 2.0);
    jacobi(k, k - 1) = beta;
    jacobi(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  GaussHermite table;
  table.nodes.resize(order);
  table.weights.resize(order);
  for (Eigen::Index i = 0; i < n; ++i) {
    table.nodes[i] = solver.eigenvalues()(i);
    const double v0 = solver.eigenvectors()(0, i);
    table.weights[i] = std::sqrt(std::numbers::pi) * v0 * v0;
  }
  return table;
}

}  // namespace

const GaussHermite& gauss_hermite(std::size_t order) {
  if (order == 0) throw ShapeError("Gauss-Hermite order must be at least 1");
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<const GaussHermite>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<const GaussHermite>(build_table(order));
  return *slot;
}

}  // namespace svgp
