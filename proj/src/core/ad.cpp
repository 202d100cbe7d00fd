#include "ad.hpp"

namespace svgp::ad {

namespace {
thread_local Tape* g_active = nullptr;
}

Tape::Tape() { edge_begin_.push_back(0); }

void Tape::clear() {
  edge_begin_.clear();
  edge_begin_.push_back(0);
  parents_.clear();
  partials_.clear();
}

std::uint32_t Tape::add_leaf() { return finish_node(); }

std::uint32_t Tape::add_unary(std::uint32_t a, double da) {
  push_edge(a, da);
  return finish_node();
}

std::uint32_t Tape::add_binary(std::uint32_t a, double da, std::uint32_t b, double db) {
  push_edge(a, da);
  push_edge(b, db);
  return finish_node();
}

std::uint32_t Tape::finish_node() {
  if (parents_.size() >= kConstant || edge_begin_.size() >= kConstant)
    throw std::length_error("autodiff tape exhausted");
  edge_begin_.push_back(static_cast<std::uint32_t>(parents_.size()));
  return static_cast<std::uint32_t>(edge_begin_.size() - 2);
}

std::vector<double> Tape::adjoints(std::uint32_t output) const {
  std::vector<double> adj(size(), 0.0);
  if (output == kConstant) return adj;
  adj[output] = 1.0;
  for (std::size_t i = output + 1; i-- > 0;) {
    const double a = adj[i];
    if (a == 0.0) continue;
    for (std::uint32_t e = edge_begin_[i]; e < edge_begin_[i + 1]; ++e)
      adj[parents_[e]] += a * partials_[e];
  }
  return adj;
}

Tape* active_tape() { return g_active; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active) { g_active = &tape; }
TapeScope::~TapeScope() { g_active = previous_; }

Var Var::leaf(double v) { return Var(v, detail::require_tape().add_leaf()); }

namespace detail {
Tape& require_tape() {
  if (g_active == nullptr) throw std::logic_error("autodiff: no active tape");
  return *g_active;
}
}  // namespace detail

Var dot_plus(const Var& c, std::span<const Var> a, std::span<const Var> b, double sign) {
  double s = 0.0;
  bool any = !c.is_constant();
  for (std::size_t k = 0; k < a.size(); ++k) {
    s += a[k].value() * b[k].value();
    any = any || !a[k].is_constant() || !b[k].is_constant();
  }
  const double v = c.value() + sign * s;
  if (!any) return Var(v);
  Tape& tape = detail::require_tape();
  if (!c.is_constant()) tape.push_edge(c.index(), 1.0);
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!a[k].is_constant()) tape.push_edge(a[k].index(), sign * b[k].value());
    if (!b[k].is_constant()) tape.push_edge(b[k].index(), sign * a[k].value());
  }
  return Var(v, tape.finish_node());
}

Var dot_strided(std::span<const Var> a, const Var* b, std::size_t stride_b) {
  double s = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Var& bk = b[k * stride_b];
    s += a[k].value() * bk.value();
    any = any || !a[k].is_constant() || !bk.is_constant();
  }
  if (!any) return Var(s);
  Tape& tape = detail::require_tape();
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Var& bk = b[k * stride_b];
    if (!a[k].is_constant()) tape.push_edge(a[k].index(), bk.value());
    if (!bk.is_constant()) tape.push_edge(bk.index(), a[k].value());
  }
  return Var(s, tape.finish_node());
}

Var sum(std::span<const Var> a) {
  double s = 0.0;
  bool any = false;
  for (const Var& x : a) {
    s += x.value();
    any = any || !x.is_constant();
  }
  if (!any) return Var(s);
  Tape& tape = detail::require_tape();
  for (const Var& x : a)
    if (!x.is_constant()) tape.push_edge(x.index(), 1.0);
  return Var(s, tape.finish_node());
}

Var sum_squares(std::span<const Var> a) {
  double s = 0.0;
  bool any = false;
  for (const Var& x : a) {
    s += x.value() * x.value();
    any = any || !x.is_constant();
  }
  if (!any) return Var(s);
  Tape& tape = detail::require_tape();
  for (const Var& x : a)
    if (!x.is_constant()) tape.push_edge(x.index(), 2.0 * x.value());
  return Var(s, tape.finish_node());
}

Var squared_distance(std::span<const Var> a, std::span<const Var> b) {
  double s = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k].value() - b[k].value();
    s += d * d;
    any = any || !a[k].is_constant() || !b[k].is_constant();
  }
  if (!any) return Var(s);
  Tape& tape = detail::require_tape();
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k].value() - b[k].value();
    if (!a[k].is_constant()) tape.push_edge(a[k].index(), 2.0 * d);
    if (!b[k].is_constant()) tape.push_edge(b[k].index(), -2.0 * d);
  }
  return Var(s, tape.finish_node());
}

}  // namespace svgp::ad
