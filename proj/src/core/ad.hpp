#pragma once

// Scalar reverse-mode automatic differentiation.
//
// A Var is a value plus an index into the thread's active Tape. Constants
// (index == kConstant) never touch the tape, so data matrices cost nothing.
// Each tape node stores the indices of its parents together with the local
// partial derivatives; a reverse sweep accumulates adjoints.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace svgp::ad {

inline constexpr std::uint32_t kConstant = std::numeric_limits<std::uint32_t>::max();

class Tape {
 public:
  Tape();

  void clear();
  std::size_t size() const { return edge_begin_.size() - 1; }

  std::uint32_t add_leaf();
  std::uint32_t add_unary(std::uint32_t a, double da);
  std::uint32_t add_binary(std::uint32_t a, double da, std::uint32_t b, double db);

  // Append edges to the open node; finish_node() seals it.
  void push_edge(std::uint32_t parent, double partial) {
    parents_.push_back(parent);
    partials_.push_back(partial);
  }
  std::uint32_t finish_node();

  // Adjoints of every node with respect to `output`.
  std::vector<double> adjoints(std::uint32_t output) const;

 private:
  std::vector<std::uint32_t> edge_begin_;
  std::vector<std::uint32_t> parents_;
  std::vector<double> partials_;
};

Tape* active_tape();

// Installs a tape as the thread's active tape for the lifetime of the scope.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

class Var {
 public:
  Var() = default;
  Var(double v) : value_(v) {}  // NOLINT: implicit constants are intended
  Var(double v, std::uint32_t index) : value_(v), index_(index) {}

  // New independent variable on the active tape.
  static Var leaf(double v);

  double value() const { return value_; }
  std::uint32_t index() const { return index_; }
  bool is_constant() const { return index_ == kConstant; }

  Var& operator+=(const Var& o);
  Var& operator-=(const Var& o);
  Var& operator*=(const Var& o);
  Var& operator/=(const Var& o);

 private:
  double value_ = 0.0;
  std::uint32_t index_ = kConstant;
};

namespace detail {
Tape& require_tape();

inline Var unary(double v, const Var& a, double da) {
  if (a.is_constant()) return Var(v);
  return Var(v, require_tape().add_unary(a.index(), da));
}
inline Var binary(double v, const Var& a, double da, const Var& b, double db) {
  if (a.is_constant()) return unary(v, b, db);
  if (b.is_constant()) return unary(v, a, da);
  return Var(v, require_tape().add_binary(a.index(), da, b.index(), db));
}
}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
  return detail::binary(a.value() + b.value(), a, 1.0, b, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
  return detail::binary(a.value() - b.value(), a, 1.0, b, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
  return detail::binary(a.value() * b.value(), a, b.value(), b, a.value());
}
inline Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.value();
  const double q = a.value() / b.value();
  return detail::binary(q, a, inv, b, -q * inv);
}
inline Var operator-(const Var& a) { return detail::unary(-a.value(), a, -1.0); }
inline Var operator+(const Var& a) { return a; }

inline Var& Var::operator+=(const Var& o) { return *this = *this + o; }
inline Var& Var::operator-=(const Var& o) { return *this = *this - o; }
inline Var& Var::operator*=(const Var& o) { return *this = *this * o; }
inline Var& Var::operator/=(const Var& o) { return *this = *this / o; }

// Comparisons act on values only; they never carry derivatives.
inline bool operator<(const Var& a, const Var& b) { return a.value() < b.value(); }
inline bool operator>(const Var& a, const Var& b) { return a.value() > b.value(); }
inline bool operator<=(const Var& a, const Var& b) { return a.value() <= b.value(); }
inline bool operator>=(const Var& a, const Var& b) { return a.value() >= b.value(); }

inline Var exp(const Var& a) {
  const double e = std::exp(a.value());
  return detail::unary(e, a, e);
}
inline Var log(const Var& a) { return detail::unary(std::log(a.value()), a, 1.0 / a.value()); }
inline Var log1p(const Var& a) {
  return detail::unary(std::log1p(a.value()), a, 1.0 / (1.0 + a.value()));
}
inline Var sqrt(const Var& a) {
  const double s = std::sqrt(a.value());
  return detail::unary(s, a, 0.5 / s);
}
inline Var square(const Var& a) {
  return detail::unary(a.value() * a.value(), a, 2.0 * a.value());
}
inline Var tanh(const Var& a) {
  const double t = std::tanh(a.value());
  return detail::unary(t, a, 1.0 - t * t);
}
inline Var abs(const Var& a) {
  return detail::unary(std::abs(a.value()), a, a.value() < 0.0 ? -1.0 : 1.0);
}

// c + sign * sum_k a[k] * b[k] as a single node.
Var dot_plus(const Var& c, std::span<const Var> a, std::span<const Var> b, double sign);
// sum_k a[k] * b[k * stride_b] with a contiguous and b strided.
Var dot_strided(std::span<const Var> a, const Var* b, std::size_t stride_b);
Var sum(std::span<const Var> a);
Var sum_squares(std::span<const Var> a);
// sum_k (a[k] - b[k])^2
Var squared_distance(std::span<const Var> a, std::span<const Var> b);

}  // namespace svgp::ad

namespace svgp {

using ad::Var;

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

inline double square(double x) { return x * x; }

inline double dot_plus(double c, std::span<const double> a, std::span<const double> b,
                       double sign) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return c + sign * s;
}
inline double dot_strided(std::span<const double> a, const double* b, std::size_t stride_b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k * stride_b];
  return s;
}
inline double sum(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x;
  return s;
}
inline double sum_squares(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return s;
}
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}
using ad::dot_plus;
using ad::dot_strided;
using ad::squared_distance;
using ad::sum;
using ad::sum_squares;

template <class T>
T dot(std::span<const T> a, std::span<const T> b) {
  return dot_plus(T(0.0), a, b, 1.0);
}

// log(1 + exp(x)) without overflow.
template <class T>
T softplus(const T& x) {
  using std::exp;
  using std::log1p;
  const double v = value_of(x);
  if (v > 30.0) return x + T(std::log1p(std::exp(-v)));
  if (v < -30.0) return exp(x);
  return log1p(exp(x));
}

// Inverse of softplus for y > 0.
inline double softplus_inverse(double y) {
  if (y > 30.0) return y + std::log(-std::expm1(-y));
  return std::log(std::expm1(y));
}

// log(sigmoid(x)), stable for large |x|.
template <class T>
T log_sigmoid(const T& x) {
  return -softplus(T(-x));
}

// Positivity transform shared by kernels, likelihoods and latent scales.
inline constexpr double kPositiveFloor = 1e-6;

template <class T>
T positive(const T& raw) {
  return softplus(raw) + T(kPositiveFloor);
}

inline double positive_inverse(double value) {
  if (!(value > kPositiveFloor)) throw std::domain_error("positive transform: value must exceed 1e-6");
  return softplus_inverse(value - kPositiveFloor);
}

}  // namespace svgp
