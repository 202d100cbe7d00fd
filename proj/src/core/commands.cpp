#include "commands.hpp"

#include <cmath>
#include <numeric>

#include "json.hpp"

namespace svgp {

namespace fs = std::filesystem;
using nlohmann::json;

FitOutcome run_fit(const fs::path& config, const fs::path& out) {
  RunConfig cfg = read_config(config);
  if (!out.empty()) cfg.checkpoint = out;
  const Dataset data = read_dataset(cfg.data);
  check_targets(data, cfg.topology.likelihood, cfg.data.string());
  if (cfg.topology.latent_dim == 0 && data.x.cols() == 0)
    throw DataError(cfg.data.string() + ": no input columns (expected 'x0' in the header)");
  const ModelState<double> init = build_model(cfg.topology, data, cfg.train.seed);
  check_objective(init.model, cfg.train.objective);

  FitOutcome res;
  FitResult r = fit(init, data, cfg.train);
  res.checkpoint.state = std::move(r.state);
  res.checkpoint.params = std::move(r.params);
  res.checkpoint.seed = cfg.train.seed;
  res.checkpoint.step = cfg.train.steps;
  res.trace = std::move(r.trace);
  res.checkpoint_path = cfg.checkpoint;
  res.trace_path = trace_path_for(cfg);
  write_checkpoint(res.checkpoint_path, res.checkpoint);
  write_trace(res.trace_path, res.trace);
  return res;
}

Estimate estimate_objective(const ModelState<double>& state, const Dataset& data,
                            const ObjectiveConfig& cfg, std::size_t reps, std::uint64_t seed) {
  if (reps == 0) throw ConfigError("mc must be at least 1");
  check_objective(state.model, cfg);
  check_targets(data, state.model.likelihood.kind);
  const ParameterSet p = flatten(state);
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Estimate e;
  for (std::size_t r = 0; r < reps; ++r)
    e.draws.push_back(objective_value(state, p.raw, data, all, cfg, seed, static_cast<std::uint32_t>(r)));
  const double n = static_cast<double>(reps);
  e.mean = std::accumulate(e.draws.begin(), e.draws.end(), 0.0) / n;
  if (reps == 1) {
    e.se = std::numeric_limits<double>::quiet_NaN();
    return e;
  }
  double ss = 0.0;
  for (double v : e.draws) ss += (v - e.mean) * (v - e.mean);
  e.se = std::sqrt(ss / (n - 1.0) / n);
  return e;
}

namespace {

class Params {
 public:
  Params(const std::string& kind, const std::string& text) : kind_(kind) {
    if (text.empty()) return;
    try {
      j_ = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(kind + ": params are not valid JSON: " + e.what());
    }
    if (!j_.is_object()) throw ConfigError(kind + ": params must be a JSON object");
  }

  void number(const char* key, double& v) {
    if (const json* j = take(key)) {
      if (!j->is_number() || !std::isfinite(j->get<double>()))
        throw ConfigError(kind_ + ": '" + key + "' must be a finite number");
      v = j->get<double>();
    }
  }
  void count(const char* key, std::size_t& v) {
    if (const json* j = take(key)) {
      if (!j->is_number_unsigned()) throw ConfigError(kind_ + ": '" + key + "' must be a non-negative integer");
      v = j->get<std::size_t>();
    }
  }
  void text(const char* key, std::string& v) {
    if (const json* j = take(key)) {
      if (!j->is_string()) throw ConfigError(kind_ + ": '" + key + "' must be a string");
      v = j->get<std::string>();
    }
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end() && j_.is_object(); ++it)
      if (std::find(used_.begin(), used_.end(), it.key()) == used_.end())
        throw ConfigError(kind_ + ": unknown parameter '" + it.key() + "'");
  }

 private:
  const json* take(const char* key) {
    used_.emplace_back(key);
    if (!j_.is_object()) return nullptr;
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string kind_;
  json j_;
  std::vector<std::string> used_;
};

}  // namespace

Dataset generate(const std::string& kind, const std::string& params_json, std::uint64_t seed) {
  Params p(kind, params_json);
  if (kind == "steps") {
    StepsParams s;
    p.count("n", s.n);
    p.count("jumps", s.jumps);
    p.number("lo", s.lo);
    p.number("hi", s.hi);
    p.number("noise", s.noise);
    p.finish();
    return gen_steps(s, seed);
  }
  if (kind == "mixture") {
    MixtureParams s;
    p.count("n", s.n);
    p.number("gap", s.gap);
    p.number("noise", s.noise);
    p.number("lo", s.lo);
    p.number("hi", s.hi);
    p.finish();
    return gen_mixture(s, seed);
  }
  if (kind == "letters") {
    LettersParams s;
    p.text("text", s.text);
    p.count("scale", s.scale);
    p.number("noise", s.noise);
    p.finish();
    return gen_letters(s, seed);
  }
  if (kind == "prior-draw") {
    PriorDrawParams s;
    p.count("depth", s.depth);
    p.count("grid", s.grid);
    p.number("lo", s.lo);
    p.number("hi", s.hi);
    p.number("lengthscale", s.lengthscale);
    p.number("variance", s.variance);
    p.count("draws", s.draws);
    p.finish();
    return gen_prior_draws(s, seed);
  }
  throw ConfigError("unknown data kind '" + kind + "' (steps, mixture, letters, prior-draw)");
}

}  // namespace svgp
