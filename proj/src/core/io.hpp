#pragma once

// Files on disk: CSV datasets and traces, JSON run configs and checkpoints.

#include <filesystem>
#include <string>

#include "init.hpp"

namespace svgp {

// Header x0..x{d-1},y0..y{k-1}; every cell a finite decimal number.
Dataset parse_dataset(const std::string& text, const std::string& source = "data");
Dataset read_dataset(const std::filesystem::path& path);
std::string format_dataset(const Dataset& d);
void write_dataset(const std::filesystem::path& path, const Dataset& d);

// Targets the likelihood can score, e.g. Bernoulli labels in {0, 1}.
void check_targets(const Dataset& d, LikelihoodKind kind, const std::string& source = "data");

void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& trace);

struct RunConfig {
  std::filesystem::path data;
  std::filesystem::path checkpoint = "model.json";
  std::filesystem::path trace;  // empty: next to the checkpoint
  ModelTopology topology;
  TrainConfig train;
};

// Relative paths resolve against `base`. Unknown fields are errors.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base = {});
RunConfig read_config(const std::filesystem::path& path);
std::filesystem::path trace_path_for(const RunConfig& cfg);

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelState<double> state;
  ParameterSet params;
  std::uint64_t seed = 0;
  std::size_t step = 0;
};

std::string format_checkpoint(const Checkpoint& c);
Checkpoint parse_checkpoint(const std::string& text, const std::string& source = "checkpoint");
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint read_checkpoint(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace svgp
