#pragma once

// Objective evaluation over (possibly minibatched) data, exact gradients via
// the reverse-mode tape, finite-difference audits, Adam ascent and the
// training loop with the generative-parameter freeze.

#include <functional>

#include "params.hpp"

namespace svgp {

struct Dataset {
  MatrixD x;  // N x data_dim
  MatrixD y;  // N x targets

  std::size_t size() const { return x.rows(); }
};

enum class Objective { kElbo, kDeep, kLv, kIwLv };

std::string to_string(Objective o);
Objective objective_from_string(const std::string& s);

struct ObjectiveConfig {
  Objective kind = Objective::kElbo;
  std::size_t n_mc = 1;
  IWConfig iw;
  LatentKl latent_kl = LatentKl::kAnalytic;
  QuadratureRule quad;
};

// Throws ConfigError when the objective does not fit the model.
void check_objective(const DeepModel<double>& model, const ObjectiveConfig& cfg);

template <class T>
T evaluate(const ModelState<T>& s, const Dataset& data, std::span<const std::size_t> batch,
           const ObjectiveConfig& cfg, std::uint64_t seed, std::uint32_t step) {
  const MatrixD x = take_rows(data.x, batch);
  const MatrixD y = take_rows(data.y, batch);
  const EvalSettings ev{seed, step, cfg.quad};
  switch (cfg.kind) {
    case Objective::kElbo:
    case Objective::kDeep:
      return deep_elbo(s.model, x, y, batch, data.size(), ev, cfg.n_mc);
    case Objective::kLv:
      return lv_elbo(s.model, s.table, x, y, batch, data.size(), ev, cfg.n_mc, cfg.latent_kl);
    case Objective::kIwLv:
      return iw_lv_elbo(s.model, s.table, x, y, batch, data.size(), cfg.iw, ev);
  }
  throw ConfigError("unknown objective");
}

struct ValueGrad {
  double value = 0.0;
  std::vector<double> grad;
};

// Value and gradient of f at raw. A non-finite value or gradient entry
// raises NonFiniteError naming the parameter when `names` is given.
ValueGrad grad(const std::function<ad::Var(std::span<const ad::Var>)>& f,
               std::span<const double> raw, const ParameterSet* names = nullptr);

// Gradient of the seeded objective with respect to every raw parameter.
ValueGrad objective_grad(const ModelState<double>& structure, const ParameterSet& params,
                         const Dataset& data, std::span<const std::size_t> batch,
                         const ObjectiveConfig& cfg, std::uint64_t seed, std::uint32_t step);

double objective_value(const ModelState<double>& structure, std::span<const double> raw,
                       const Dataset& data, std::span<const std::size_t> batch,
                       const ObjectiveConfig& cfg, std::uint64_t seed, std::uint32_t step);

struct AuditReport {
  double max_rel_err = 0.0;
  std::size_t worst = 0;
  std::string worst_name;
  double analytic = 0.0;
  double numeric = 0.0;
};

inline constexpr double kAuditFloor = 1e-3;

// Central differences at fixed seed against `analytic`. Relative error is
// |g - fd| / max(|g|, |fd|, kAuditFloor).
AuditReport fd_audit(const std::function<double(std::span<const double>)>& f,
                     std::span<const double> raw, std::span<const double> analytic,
                     double h = 1e-5, const ParameterSet* names = nullptr);

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
};

// One bias-corrected Adam step, ascending along grad.
void adam_step(std::vector<double>& raw, std::span<const double> grad, AdamState& state,
               const AdamConfig& cfg);

struct TrainConfig {
  std::size_t steps = 1000;
  std::size_t batch_size = 0;  // 0: min(N, 256)
  AdamConfig adam;
  std::size_t freeze_generative_steps = 500;
  std::uint64_t seed = 0;
  ObjectiveConfig objective;

  void validate() const;
};

struct TraceRow {
  std::size_t step = 0;
  double elbo = 0.0;
  std::size_t jitter_events = 0;
  double wall_ms = 0.0;
};

struct FitResult {
  ParameterSet params;
  ModelState<double> state;
  std::vector<TraceRow> trace;
};

// Indices of minibatch `step` under seeded per-epoch shuffles.
std::vector<std::size_t> minibatch(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                   std::size_t step);

FitResult fit(const ModelState<double>& init, const Dataset& data, const TrainConfig& cfg,
              const std::function<void(const TraceRow&)>& on_step = {});

}  // namespace svgp
