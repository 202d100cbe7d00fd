#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "log.hpp"
#include "matrix.hpp"

namespace svgp {

// Lower Cholesky factor of cov + jitter_used * I.
template <class T>
struct CholFactor {
  Matrix<T> lower;
  double jitter_used = 0.0;  // absolute jitter added to the diagonal

  std::size_t dim() const { return lower.rows(); }
};

// Relative jitter rungs (times tr(A)/n). The first rung is an unjittered attempt.
inline constexpr std::array<double, 8> kJitterLadder = {0.0,  1e-10, 1e-9, 1e-8,
                                                        1e-7, 1e-6,  1e-5, 1e-4};

// Counts jitter escalations on this thread; the trainer samples it per step.
std::size_t& jitter_event_counter();

namespace detail {

template <class T>
std::optional<Matrix<T>> try_cholesky(const Matrix<T>& a, const T& jitter) {
  const std::size_t n = a.rows();
  Matrix<T> l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    std::span<const T> lj = l.row(j).subspan(0, j);
    const T d = dot_plus(T(a(j, j) + jitter), lj, lj, -1.0);
    const double dv = value_of(d);
    if (!(dv > 0.0) || !std::isfinite(dv)) return std::nullopt;
    using std::sqrt;
    const T ljj = sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      std::span<const T> li = l.row(i).subspan(0, j);
      l(i, j) = dot_plus(a(i, j), li, lj, -1.0) / ljj;
    }
  }
  return l;
}

}  // namespace detail

// Cholesky with the trace-scaled jitter ladder. Only the lower triangle of `a`
// is read.
template <class T>
CholFactor<T> cholesky(const Matrix<T>& a) {
  require_shape(a.rows() == a.cols(), "cholesky: matrix not square");
  const std::size_t n = a.rows();
  if (n == 0) return {Matrix<T>(0, 0), 0.0};
  const T scale = trace(a) / T(static_cast<double>(n));
  for (std::size_t rung = 0; rung < kJitterLadder.size(); ++rung) {
    const T jitter = T(kJitterLadder[rung]) * scale;
    if (auto l = detail::try_cholesky(a, jitter)) {
      if (rung > 0) {
        ++jitter_event_counter();
        // The first rung is routine for clustered inputs; higher rungs are not.
        const auto msg = fmt::format("cholesky: added jitter {:.3g} (n={})", value_of(jitter), n);
        if (rung > 1) logging::warn(msg);
        else logging::debug(msg);
      }
      return {std::move(*l), value_of(jitter)};
    }
  }
  throw FactorizationError("cholesky: matrix of size " + std::to_string(n) +
                           " is not positive definite within the jitter ladder");
}

// Solves L x = r for every row r of `rhs`; returns the solutions as rows.
template <class T>
Matrix<T> solve_lower_rows(const Matrix<T>& lower, const Matrix<T>& rhs) {
  const std::size_t n = lower.rows();
  require_shape(rhs.cols() == n, "solve_lower_rows: rhs width must equal factor size");
  Matrix<T> x(rhs.rows(), n);
  for (std::size_t r = 0; r < rhs.rows(); ++r) {
    std::span<T> xr = x.row(r);
    for (std::size_t i = 0; i < n; ++i) {
      std::span<const T> li = lower.row(i).subspan(0, i);
      std::span<const T> xi(xr.data(), i);
      xr[i] = dot_plus(rhs(r, i), li, xi, -1.0) / lower(i, i);
    }
  }
  return x;
}

// Solves L^T x = r for every row r of `rhs`.
template <class T>
Matrix<T> solve_upper_t_rows(const Matrix<T>& lower, const Matrix<T>& rhs) {
  const std::size_t n = lower.rows();
  require_shape(rhs.cols() == n, "solve_upper_t_rows: rhs width must equal factor size");
  const Matrix<T> upper = lower.transpose();
  Matrix<T> x(rhs.rows(), n);
  for (std::size_t r = 0; r < rhs.rows(); ++r) {
    std::span<T> xr = x.row(r);
    for (std::size_t i = n; i-- > 0;) {
      std::span<const T> ui = upper.row(i).subspan(i + 1);
      std::span<const T> xi(xr.data() + i + 1, n - i - 1);
      xr[i] = dot_plus(rhs(r, i), ui, xi, -1.0) / lower(i, i);
    }
  }
  return x;
}

template <class T>
std::vector<T> solve_lower(const Matrix<T>& lower, std::span<const T> b) {
  Matrix<T> rhs(1, b.size(), std::vector<T>(b.begin(), b.end()));
  return solve_lower_rows(lower, rhs).data();
}

template <class T>
std::vector<T> solve_upper_t(const Matrix<T>& lower, std::span<const T> b) {
  Matrix<T> rhs(1, b.size(), std::vector<T>(b.begin(), b.end()));
  return solve_upper_t_rows(lower, rhs).data();
}

// (L L^T)^{-1} b
template <class T>
std::vector<T> chol_solve(const Matrix<T>& lower, std::span<const T> b) {
  const std::vector<T> y = solve_lower(lower, b);
  return solve_upper_t(lower, std::span<const T>(y));
}

// L^{-1} B for a general square B (columns solved independently).
template <class T>
Matrix<T> solve_lower_matrix(const Matrix<T>& lower, const Matrix<T>& b) {
  return solve_lower_rows(lower, b.transpose()).transpose();
}

template <class T>
T log_det_from_factor(const Matrix<T>& lower) {
  using std::log;
  T s(0.0);
  for (std::size_t i = 0; i < lower.rows(); ++i) s += log(lower(i, i));
  return T(2.0) * s;
}

}  // namespace svgp
