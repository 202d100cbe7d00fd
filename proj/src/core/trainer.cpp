#include "trainer.hpp"

#include <chrono>
#include <fmt/format.h>

#include "log.hpp"

namespace svgp {

std::string to_string(Objective o) {
  switch (o) {
    case Objective::kElbo:
      return "elbo";
    case Objective::kDeep:
      return "deep";
    case Objective::kLv:
      return "lv";
    case Objective::kIwLv:
      return "iw_lv";
  }
  return "unknown";
}

Objective objective_from_string(const std::string& s) {
  if (s == "elbo") return Objective::kElbo;
  if (s == "deep") return Objective::kDeep;
  if (s == "lv") return Objective::kLv;
  if (s == "iw_lv") return Objective::kIwLv;
  throw ConfigError("objective must be one of elbo, deep, lv, iw_lv (got '" + s + "')");
}

void check_objective(const DeepModel<double>& model, const ObjectiveConfig& cfg) {
  switch (cfg.kind) {
    case Objective::kElbo:
      if (model.depth() != 1 || model.latent_dim != 0)
        throw ConfigError("objective elbo needs a single layer without latent inputs");
      break;
    case Objective::kDeep:
      if (model.latent_dim != 0) throw ConfigError("objective deep needs latent_dim = 0");
      break;
    case Objective::kLv:
    case Objective::kIwLv:
      if (model.latent_dim == 0)
        throw ConfigError("objective " + to_string(cfg.kind) + " needs latent_dim >= 1");
      break;
  }
  if (cfg.n_mc == 0) throw ConfigError("n_mc must be at least 1");
  if (cfg.iw.samples == 0) throw ConfigError("iw.S must be at least 1");
  if (cfg.iw.outer_mc == 0) throw ConfigError("iw.outer_mc must be at least 1");
}

namespace {

ad::Tape& scratch_tape() {
  thread_local ad::Tape tape;
  return tape;
}

std::string param_label(const ParameterSet* names, std::size_t i) {
  if (!names) return "#" + std::to_string(i);
  const ParamEntry& e = names->owner(i);
  return e.name + "[" + std::to_string(i - e.offset) + "]";
}

}  // namespace

ValueGrad grad(const std::function<ad::Var(std::span<const ad::Var>)>& f,
               std::span<const double> raw, const ParameterSet* names) {
  ad::Tape& tape = scratch_tape();
  tape.clear();
  ad::TapeScope scope(tape);
  std::vector<ad::Var> leaves;
  leaves.reserve(raw.size());
  for (double v : raw) leaves.push_back(ad::Var::leaf(v));
  const ad::Var out = f(leaves);
  ValueGrad r;
  r.value = out.value();
  if (!std::isfinite(r.value)) throw NonFiniteError("objective is not finite");
  const std::vector<double> adj = tape.adjoints(out.index());
  r.grad.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    r.grad[i] = adj[leaves[i].index()];
    if (!std::isfinite(r.grad[i]))
      throw NonFiniteError("gradient of " + param_label(names, i) + " is not finite");
  }
  tape.clear();
  return r;
}

ValueGrad objective_grad(const ModelState<double>& structure, const ParameterSet& params,
                         const Dataset& data, std::span<const std::size_t> batch,
                         const ObjectiveConfig& cfg, std::uint64_t seed, std::uint32_t step) {
  return grad(
      [&](std::span<const ad::Var> raw) {
        return evaluate(bind<ad::Var>(structure, raw), data, batch, cfg, seed, step);
      },
      params.raw, &params);
}

double objective_value(const ModelState<double>& structure, std::span<const double> raw,
                       const Dataset& data, std::span<const std::size_t> batch,
                       const ObjectiveConfig& cfg, std::uint64_t seed, std::uint32_t step) {
  return evaluate(bind<double>(structure, raw), data, batch, cfg, seed, step);
}

AuditReport fd_audit(const std::function<double(std::span<const double>)>& f,
                     std::span<const double> raw, std::span<const double> analytic, double h,
                     const ParameterSet* names) {
  require_shape(analytic.size() == raw.size(), "fd_audit: gradient length differs");
  AuditReport rep;
  std::vector<double> x(raw.begin(), raw.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    x[i] = x0;
    const double fd = (up - down) / (2.0 * h);
    const double g = analytic[i];
    const double err =
        std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), kAuditFloor});
    if (i == 0 || err > rep.max_rel_err) {
      rep.max_rel_err = err;
      rep.worst = i;
      rep.worst_name = param_label(names, i);
      rep.analytic = g;
      rep.numeric = fd;
    }
  }
  return rep;
}

void adam_step(std::vector<double>& raw, std::span<const double> grad, AdamState& state,
               const AdamConfig& cfg) {
  require_shape(grad.size() == raw.size(), "adam: gradient length differs");
  if (state.m.size() != raw.size()) {
    state.m.assign(raw.size(), 0.0);
    state.v.assign(raw.size(), 0.0);
    state.t = 0;
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < raw.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    if (state.m[i] == 0.0) continue;
    const double mhat = state.m[i] / c1, vhat = state.v[i] / c2;
    raw[i] += cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

void TrainConfig::validate() const {
  if (steps < 1) throw ConfigError("steps must be at least 1");
  if (!(adam.learning_rate >= 0.0) || !std::isfinite(adam.learning_rate))
    throw ConfigError("learning_rate must be finite and non-negative");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ConfigError("beta1 must be in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ConfigError("beta2 must be in [0, 1)");
  if (!(adam.eps > 0.0)) throw ConfigError("eps must be positive");
}

std::vector<std::size_t> minibatch(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                   std::size_t step) {
  require_shape(n >= 1 && batch_size >= 1, "minibatch: empty data or batch");
  const std::size_t b = std::min(n, batch_size);
  if (b == n) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  const std::size_t per_epoch = (n + b - 1) / b;
  const std::size_t epoch = step / per_epoch, k = step % per_epoch;
  const auto perm = permutation(
      n, RngStream(seed, Purpose::kMinibatch, static_cast<std::uint32_t>(epoch), 0, 0));
  const std::size_t lo = k * b, hi = std::min(n, lo + b);
  return std::vector<std::size_t>(perm.begin() + lo, perm.begin() + hi);
}

FitResult fit(const ModelState<double>& init, const Dataset& data, const TrainConfig& cfg,
              const std::function<void(const TraceRow&)>& on_step) {
  cfg.validate();
  require_shape(data.size() >= 1, "fit: data is empty");
  check_objective(init.model, cfg.objective);
  if (init.model.latent_dim > 0 && init.table.rows() != data.size())
    throw ShapeError("fit: latent table has " + std::to_string(init.table.rows()) +
                     " rows for " + std::to_string(data.size()) + " datapoints");
  FitResult res;
  res.params = flatten(init);
  const std::vector<bool> generative = res.params.role_mask(Role::kGenerative);
  const std::size_t batch = cfg.batch_size == 0 ? std::min<std::size_t>(data.size(), 256)
                                                : cfg.batch_size;
  AdamState adam;
  std::size_t bad_streak = 0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const std::vector<std::size_t> idx = minibatch(data.size(), batch, cfg.seed, step);
    const std::size_t jitter_before = jitter_event_counter();
    TraceRow row;
    row.step = step;
    ValueGrad vg;
    bool ok = true;
    try {
      vg = objective_grad(init, res.params, data, idx, cfg.objective, cfg.seed,
                          static_cast<std::uint32_t>(step));
    } catch (const NonFiniteError& e) {
      ok = false;
      logging::warn(fmt::format("step {}: {}", step, e.what()));
    } catch (const FactorizationError& e) {
      ok = false;
      logging::warn(fmt::format("step {}: {}", step, e.what()));
    }
    row.elbo = ok ? vg.value : std::numeric_limits<double>::quiet_NaN();
    row.jitter_events = jitter_event_counter() - jitter_before;
    if (ok) {
      bad_streak = 0;
      if (step < cfg.freeze_generative_steps)
        for (std::size_t i = 0; i < vg.grad.size(); ++i)
          if (generative[i]) vg.grad[i] = 0.0;
      adam_step(res.params.raw, vg.grad, adam, cfg.adam);
    } else if (++bad_streak >= 10) {
      throw DivergenceError("objective non-finite for 10 consecutive steps (last step " +
                            std::to_string(step) + ")");
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                      .count();
    if ((step + 1) % 100 == 0 || step + 1 == cfg.steps)
      logging::info(fmt::format("step {} elbo {:.6g}", step + 1, row.elbo));
    res.trace.push_back(row);
    if (on_step) on_step(row);
  }
  res.state = bind<double>(init, std::span<const double>(res.params.raw));
  return res;
}

}  // namespace svgp
