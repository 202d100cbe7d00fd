#include "params.hpp"

#include <algorithm>
#include <set>

namespace svgp {

std::string to_string(Role r) { return r == Role::kVariational ? "variational" : "generative"; }

std::string to_string(Transform t) {
  switch (t) {
    case Transform::kIdentity:
      return "identity";
    case Transform::kSoftplus:
      return "softplus";
    case Transform::kTriangular:
      return "triangular";
  }
  return "unknown";
}

const ParamEntry& ParameterSet::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw ConfigError("no parameter named '" + name + "'");
}

const ParamEntry& ParameterSet::owner(std::size_t i) const {
  auto it = std::upper_bound(entries.begin(), entries.end(), i,
                             [](std::size_t v, const ParamEntry& e) { return v < e.offset; });
  require_shape(it != entries.begin() && i < raw.size(), "parameter index out of range");
  return *std::prev(it);
}

std::vector<bool> ParameterSet::role_mask(Role role) const {
  std::vector<bool> mask(raw.size(), false);
  for (const auto& e : entries)
    if (e.role == role)
      for (std::size_t k = 0; k < e.size; ++k) mask[e.offset + k] = true;
  return mask;
}

ParameterSet flatten(const ModelState<double>& state) {
  state.model.validate();
  if (state.model.latent_dim > 0)
    require_shape(state.table.dim() == state.model.latent_dim &&
                      state.table.scale.rows() == state.table.rows() &&
                      state.table.scale.cols() == state.table.dim(),
                  "latent table width must equal latent_dim");
  ModelState<double> copy = state;
  ParameterSet ps;
  std::set<std::string> seen;
  for (auto& b : detail::blocks(copy)) {
    if (!seen.insert(b.name).second) throw ConfigError("duplicate parameter name " + b.name);
    ps.entries.push_back({b.name, b.role, b.transform, ps.raw.size(), b.elems.size()});
    for (std::size_t k = 0; k < b.elems.size(); ++k) {
      const double v = *b.elems[k];
      if (!std::isfinite(v)) throw NonFiniteError("parameter " + b.name + " is not finite");
      if (detail::positive_slot(b, k)) {
        if (!(v > kPositiveFloor))
          throw ConfigError("parameter " + b.name + " must exceed 1e-6, got " + std::to_string(v));
        ps.raw.push_back(positive_inverse(v));
      } else {
        ps.raw.push_back(v);
      }
    }
  }
  return ps;
}

}  // namespace svgp
