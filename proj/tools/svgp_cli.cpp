// Command-line front end. Talks to the engine only through the C API.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "svgp/svgp.h"

namespace {

struct Failure {
  int code;
};

void check(svgp_status s, const std::string& context) {
  if (s == SVGP_OK) return;
  std::cerr << "error: " << context << ": " << svgp_last_error() << "\n";
  throw Failure{svgp_exit_code(s)};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using DatasetPtr = std::unique_ptr<svgp_dataset, Deleter<svgp_dataset, svgp_dataset_free>>;
using ModelPtr = std::unique_ptr<svgp_model, Deleter<svgp_model, svgp_model_free>>;
using PredictionPtr = std::unique_ptr<svgp_prediction, Deleter<svgp_prediction, svgp_prediction_free>>;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ModelPtr load_model(const std::string& path) {
  svgp_model* m = nullptr;
  check(svgp_model_read(path.c_str(), &m), "loading model '" + path + "'");
  return ModelPtr(m);
}

DatasetPtr load_data(const std::string& path) {
  svgp_dataset* d = nullptr;
  check(svgp_dataset_read(path.c_str(), &d), "reading data");
  return DatasetPtr(d);
}

int cmd_fit(const std::string& config, const std::string& out) {
  check(svgp_fit(config.c_str(), out.empty() ? nullptr : out.c_str(), nullptr), "fit");
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, const std::string& density_at,
                std::size_t paths, std::uint64_t seed, bool joint, const std::string& out) {
  ModelPtr model = load_model(model_path);
  DatasetPtr data = load_data(data_path);
  DatasetPtr targets;
  if (!density_at.empty()) targets = load_data(density_at);
  const svgp_dataset* scored = targets ? targets.get() : (svgp_dataset_y_cols(data.get()) > 0 ? data.get() : nullptr);

  svgp_predict_options opts{paths, seed, joint ? 1 : 0};
  svgp_prediction* raw = nullptr;
  check(svgp_predict(model.get(), data.get(), scored, &opts, &raw), "predict");
  PredictionPtr pred(raw);

  const std::size_t n = svgp_prediction_rows(raw), k = svgp_prediction_outputs(raw);
  std::vector<double> mean(n * k), var(n * k), dens;
  check(svgp_prediction_copy_mean(raw, mean.data(), mean.size()), "predict");
  check(svgp_prediction_copy_var(raw, var.data(), var.size()), "predict");
  if (svgp_prediction_has_density(raw)) {
    dens.resize(n);
    check(svgp_prediction_copy_log_density(raw, dens.data(), dens.size()), "predict");
  }

  std::ostringstream os;
  for (std::size_t j = 0; j < k; ++j) os << (j ? "," : "") << "mean" << j;
  for (std::size_t j = 0; j < k; ++j) os << ",var" << j;
  if (!dens.empty()) os << ",log_density";
  os << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) os << (j ? "," : "") << num(mean[i * k + j]);
    for (std::size_t j = 0; j < k; ++j) os << "," << num(var[i * k + j]);
    if (!dens.empty()) os << "," << num(dens[i]);
    os << "\n";
  }
  if (out.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f || !(f << os.str())) {
      std::cerr << "error: cannot write '" << out << "'\n";
      return 3;
    }
  }
  return 0;
}

int cmd_gen_data(const std::string& kind, const std::string& out, std::uint64_t seed,
                 const nlohmann::json& params) {
  svgp_dataset* raw = nullptr;
  const std::string text = params.empty() ? "" : params.dump();
  check(svgp_gen_data(kind.c_str(), text.c_str(), seed, &raw), "gen-data");
  DatasetPtr d(raw);
  check(svgp_dataset_write(raw, out.c_str()), "gen-data");
  return 0;
}

int cmd_elbo(const std::string& model_path, const std::string& data_path, const std::string& objective,
             std::size_t samples, std::size_t mc, std::uint64_t seed, bool sampled_kl) {
  ModelPtr model = load_model(model_path);
  DatasetPtr data = load_data(data_path);
  svgp_objective_options opts{objective.c_str(), samples, mc, seed, sampled_kl ? 1 : 0};
  double mean = 0.0, se = 0.0;
  check(svgp_objective(model.get(), data.get(), &opts, &mean, &se), "elbo");
  std::cout << "mean " << num(mean) << "\nse " << num(se) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse variational GP engine"};
  app.require_subcommand(1);
  std::string log_level;
  app.add_option("--log", log_level, "Diagnostics level (overrides SVGP_LOG)")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  auto* fit = app.add_subcommand("fit", "Train a model from a JSON run config; writes a checkpoint and a trace CSV");
  std::string config, fit_out;
  fit->add_option("--config", config, "Run config (JSON)")->required();
  fit->add_option("--out", fit_out, "Checkpoint path (overrides the config); the trace goes next to it");

  auto* predict = app.add_subcommand(
      "predict",
      "Predictive summaries per row. Output columns: mean0.., var0.. (pooled over paths) and, when targets "
      "are available, log_density (log of the path-averaged predictive density of the targets)");
  std::string model_path, data_path, density_at, pred_out;
  std::size_t paths = 1;
  std::uint64_t pred_seed = 0;
  bool joint = false;
  predict->add_option("--model", model_path, "Checkpoint")->required();
  predict->add_option("--data", data_path, "CSV with x columns; y columns, if present, are scored")->required();
  predict->add_option("--paths", paths, "Monte Carlo paths through the layers")->check(CLI::PositiveNumber);
  predict->add_option("--seed", pred_seed, "Seed for path sampling");
  predict->add_option("--density-at", density_at, "CSV whose y columns are scored instead");
  predict->add_flag("--joint", joint, "Sample each path jointly across rows");
  predict->add_option("--out", pred_out, "Write CSV here instead of stdout");

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset as CSV");
  std::string kind, gen_out;
  std::uint64_t gen_seed = 0;
  gen->add_option("--kind", kind, "steps | mixture | letters | prior-draw")->required();
  gen->add_option("--out", gen_out, "Output CSV")->required();
  gen->add_option("--seed", gen_seed, "Seed");
  std::map<std::string, std::size_t> counts;
  std::map<std::string, double> numbers;
  std::string text;
  for (const char* k : {"n", "jumps", "scale", "depth", "grid", "draws"})
    gen->add_option(std::string("--") + k, counts[k], std::string("Kind parameter '") + k + "'");
  for (const char* k : {"gap", "noise", "lo", "hi", "lengthscale", "variance"})
    gen->add_option(std::string("--") + k, numbers[k], std::string("Kind parameter '") + k + "'");
  gen->add_option("--text", text, "String to rasterize (letters)");

  auto* elbo = app.add_subcommand("elbo", "Estimate an objective on a dataset; prints its mean and standard error");
  std::string e_model, e_data, objective = "elbo";
  std::size_t samples = 1, mc = 1;
  std::uint64_t e_seed = 0;
  bool sampled_kl = false;
  elbo->add_option("--model", e_model, "Checkpoint")->required();
  elbo->add_option("--data", e_data, "CSV dataset")->required();
  elbo->add_option("--objective", objective, "elbo | deep | lv | iw_lv")
      ->check(CLI::IsMember({"elbo", "deep", "lv", "iw_lv"}));
  elbo->add_option("--S", samples, "Importance samples (iw_lv)")->check(CLI::PositiveNumber);
  elbo->add_option("--mc", mc, "Repetitions for the estimate")->check(CLI::PositiveNumber);
  elbo->add_option("--seed", e_seed, "Seed");
  elbo->add_flag("--sampled-kl", sampled_kl, "lv: latent KL term from the drawn sample");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (!log_level.empty()) check(svgp_set_log_level(log_level.c_str()), "log level");
    if (*fit) return cmd_fit(config, fit_out);
    if (*predict) return cmd_predict(model_path, data_path, density_at, paths, pred_seed, joint, pred_out);
    if (*gen) {
      nlohmann::json params = nlohmann::json::object();
      for (const auto& [k, v] : counts)
        if (gen->count("--" + k)) params[k] = v;
      for (const auto& [k, v] : numbers)
        if (gen->count("--" + k)) params[k] = v;
      if (gen->count("--text")) params["text"] = text;
      return cmd_gen_data(kind, gen_out, gen_seed, params);
    }
    if (*elbo) return cmd_elbo(e_model, e_data, objective, samples, mc, e_seed, sampled_kl);
  } catch (const Failure& f) {
    return f.code;
  }
  return 1;
}
