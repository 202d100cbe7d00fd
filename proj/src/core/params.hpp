#pragma once

// Flat registry of every trainable quantity in a model, stored as
// unconstrained raw values. Binding maps a raw vector (double or Var) back
// onto a typed model, so values and gradients come from the same code.

#include <functional>
#include <string>

#include "deep.hpp"

namespace svgp {

enum class Role { kVariational, kGenerative };
enum class Transform {
  kIdentity,
  kSoftplus,    // value = softplus(raw) + 1e-6
  kTriangular,  // packed lower triangle, softplus on the diagonal
};

std::string to_string(Role r);
std::string to_string(Transform t);

struct ParamEntry {
  std::string name;
  Role role = Role::kGenerative;
  Transform transform = Transform::kIdentity;
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct ParameterSet {
  std::vector<ParamEntry> entries;
  std::vector<double> raw;

  std::size_t size() const { return raw.size(); }
  const ParamEntry& find(const std::string& name) const;
  // Entry that owns raw position i.
  const ParamEntry& owner(std::size_t i) const;
  std::vector<bool> role_mask(Role role) const;
};

// A model's latent posterior table is optional; shallow and deep models
// without latent inputs carry an empty one.
template <class T>
struct ModelState {
  DeepModel<T> model;
  LatentTable<T> table;
};

namespace detail {

// Element pointers for one registered block; `diag` marks softplus slots of
// a triangular block.
template <class T>
struct Block {
  std::string name;
  Role role;
  Transform transform;
  std::vector<T*> elems;
  std::vector<bool> diag;
};

template <class T>
Block<T> dense_block(std::string name, Role role, Transform tr, std::span<T> values) {
  Block<T> b{std::move(name), role, tr, {}, {}};
  for (T& v : values) b.elems.push_back(&v);
  return b;
}

template <class T>
Block<T> tri_block(std::string name, Matrix<T>& m) {
  Block<T> b{std::move(name), Role::kVariational, Transform::kTriangular, {}, {}};
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      b.elems.push_back(&m(i, j));
      b.diag.push_back(i == j);
    }
  return b;
}

template <class T>
void mean_blocks(const std::string& prefix, MeanSpec<T>& mean, std::vector<Block<T>>& out) {
  switch (mean.family) {
    case MeanFamily::kZero:
    case MeanFamily::kIdentity:
      break;
    case MeanFamily::kConstant:
      out.push_back(dense_block(prefix + ".constant", Role::kGenerative, Transform::kIdentity,
                                std::span<T>(mean.constant)));
      break;
    case MeanFamily::kLinear:
      out.push_back(dense_block(prefix + ".weight", Role::kGenerative, Transform::kIdentity,
                                std::span<T>(mean.weight.data())));
      out.push_back(dense_block(prefix + ".bias", Role::kGenerative, Transform::kIdentity,
                                std::span<T>(mean.bias)));
      break;
  }
}

// Registration order defines the raw layout.
template <class T>
std::vector<Block<T>> blocks(ModelState<T>& s) {
  std::vector<Block<T>> out;
  for (std::size_t l = 0; l < s.model.layers.size(); ++l) {
    MOLayer<T>& layer = s.model.layers[l];
    const std::string lp = "layer" + std::to_string(l);
    for (std::size_t b = 0; b < layer.latents.size(); ++b) {
      SVGPLayer<T>& g = layer.latents[b];
      const std::string p = lp + ".latent" + std::to_string(b);
      out.push_back(dense_block(p + ".Z", Role::kVariational, Transform::kIdentity,
                                std::span<T>(g.inducing.points.data())));
      out.push_back(dense_block(p + ".q_mu", Role::kVariational, Transform::kIdentity,
                                std::span<T>(g.vstate.q_mean.data())));
      for (std::size_t d = 0; d < g.vstate.q_sqrt.size(); ++d)
        out.push_back(tri_block(p + ".q_sqrt" + std::to_string(d), g.vstate.q_sqrt[d]));
      out.push_back(dense_block(p + ".kernel.variance", Role::kGenerative, Transform::kSoftplus,
                                std::span<T>(&g.kernel.variance, 1)));
      out.push_back(dense_block(p + ".kernel.lengthscales", Role::kGenerative, Transform::kSoftplus,
                                std::span<T>(g.kernel.lengthscales)));
      mean_blocks(p + ".mean", g.mean, out);
    }
    if (layer.mixing == MixingKind::kLmc) {
      out.push_back(dense_block(lp + ".W", Role::kGenerative, Transform::kIdentity,
                                std::span<T>(layer.weight.data())));
      mean_blocks(lp + ".mean", layer.mean, out);
    }
  }
  if (s.model.likelihood.kind == LikelihoodKind::kGaussian)
    out.push_back(dense_block("likelihood.variance", Role::kGenerative, Transform::kSoftplus,
                              std::span<T>(&s.model.likelihood.variance, 1)));
  if (s.model.latent_dim > 0) {
    out.push_back(dense_block("latent.mean", Role::kVariational, Transform::kIdentity,
                              std::span<T>(s.table.mean.data())));
    out.push_back(dense_block("latent.scale", Role::kVariational, Transform::kSoftplus,
                              std::span<T>(s.table.scale.data())));
  }
  return out;
}

inline bool positive_slot(const Block<double>& b, std::size_t k) {
  return b.transform == Transform::kSoftplus || (b.transform == Transform::kTriangular && b.diag[k]);
}

template <class T>
Matrix<T> cast(const Matrix<double>& m) {
  return lift<T>(m);
}

template <class T>
std::vector<T> cast(const std::vector<double>& v) {
  return std::vector<T>(v.begin(), v.end());
}

template <class T>
MeanSpec<T> cast(const MeanSpec<double>& m) {
  MeanSpec<T> o;
  o.family = m.family;
  o.input_dim = m.input_dim;
  o.output_dim = m.output_dim;
  o.constant = cast<T>(m.constant);
  o.weight = cast<T>(m.weight);
  o.bias = cast<T>(m.bias);
  return o;
}

template <class T>
SVGPLayer<T> cast(const SVGPLayer<double>& l) {
  SVGPLayer<T> o;
  o.kernel.family = l.kernel.family;
  o.kernel.variance = T(l.kernel.variance);
  o.kernel.lengthscales = cast<T>(l.kernel.lengthscales);
  o.mean = cast<T>(l.mean);
  o.inducing.kind = l.inducing.kind;
  o.inducing.points = cast<T>(l.inducing.points);
  o.inducing.dims = l.inducing.dims;
  o.vstate.whitening = l.vstate.whitening;
  o.vstate.q_mean = cast<T>(l.vstate.q_mean);
  for (const auto& s : l.vstate.q_sqrt) o.vstate.q_sqrt.push_back(Matrix<T>(s.rows(), s.cols()));
  return o;
}

template <class T>
ModelState<T> cast(const ModelState<double>& s) {
  ModelState<T> o;
  o.model.data_dim = s.model.data_dim;
  o.model.latent_dim = s.model.latent_dim;
  o.model.likelihood.kind = s.model.likelihood.kind;
  o.model.likelihood.outputs = s.model.likelihood.outputs;
  o.model.likelihood.variance = T(s.model.likelihood.variance);
  for (const auto& layer : s.model.layers) {
    MOLayer<T> ml;
    for (const auto& g : layer.latents) ml.latents.push_back(cast<T>(g));
    ml.mixing = layer.mixing;
    ml.weight = cast<T>(layer.weight);
    ml.mean = cast<T>(layer.mean);
    o.model.layers.push_back(std::move(ml));
  }
  o.table.mean = cast<T>(s.table.mean);
  o.table.scale = cast<T>(s.table.scale);
  return o;
}

}  // namespace detail

// Registry and raw values of a constrained model state.
ParameterSet flatten(const ModelState<double>& state);

// Typed model whose every registered value is the transform of raw[i].
// Everything else (topology, fixed fields) comes from `structure`.
template <class T>
ModelState<T> bind(const ModelState<double>& structure, std::span<const T> raw) {
  ModelState<T> out = detail::cast<T>(structure);
  std::size_t i = 0;
  for (auto& b : detail::blocks(out)) {
    for (std::size_t k = 0; k < b.elems.size(); ++k, ++i) {
      require_shape(i < raw.size(), "bind: raw vector too short");
      const bool pos = b.transform == Transform::kSoftplus ||
                       (b.transform == Transform::kTriangular && b.diag[k]);
      *b.elems[k] = pos ? positive(raw[i]) : raw[i];
    }
  }
  require_shape(i == raw.size(), "bind: raw vector length " + std::to_string(raw.size()) +
                                     " does not match the model's " + std::to_string(i));
  return out;
}

}  // namespace svgp
