#pragma once

// The operations behind each CLI subcommand.

#include "datagen.hpp"
#include "io.hpp"

namespace svgp {

struct FitOutcome {
  Checkpoint checkpoint;
  std::filesystem::path checkpoint_path;
  std::filesystem::path trace_path;
  std::vector<TraceRow> trace;
};

// Reads config and data, trains, writes the checkpoint and the trace.
// `out` overrides the checkpoint path from the config.
FitOutcome run_fit(const std::filesystem::path& config, const std::filesystem::path& out = {});

struct Estimate {
  double mean = 0.0;
  double se = 0.0;  // NaN with a single repetition
  std::vector<double> draws;
};

// `reps` full-data evaluations of the objective, repetition r at step r.
Estimate estimate_objective(const ModelState<double>& state, const Dataset& data,
                            const ObjectiveConfig& cfg, std::size_t reps, std::uint64_t seed);

// kind in {steps, mixture, letters, prior-draw}; params is a JSON object
// whose fields override the kind's defaults.
Dataset generate(const std::string& kind, const std::string& params_json, std::uint64_t seed);

}  // namespace svgp
