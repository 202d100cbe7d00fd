#include "io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace svgp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

std::string fmt_double(double v) { return fmt::format("{}", v); }

}  // namespace

// ---------------------------------------------------------------- datasets

Dataset parse_dataset(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw DataError(source + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header;
  for (const auto cell : split(line)) header.emplace_back(cell);
  std::size_t nx = 0, ny = 0;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string expect_x = "x" + std::to_string(nx), expect_y = "y" + std::to_string(ny);
    if (ny == 0 && header[c] == expect_x) ++nx;
    else if (header[c] == expect_y) ++ny;
    else
      throw DataError(source + ": header column " + std::to_string(c + 1) + " is '" +
                      header[c] + "', expected '" + (ny == 0 ? expect_x + "' or '" : "") +
                      expect_y + "'");
  }
  if (nx + ny == 0) throw DataError(source + ": header has no columns");

  std::vector<double> xs, ys;
  std::size_t rows = 0, lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw DataError(source + ": row " + std::to_string(lineno) + " has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(header.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      const auto cell = cells[c];
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw DataError(source + ": row " + std::to_string(lineno) + ", column " +
                        header[c] + ": '" + std::string(cell) +
                        "' is not a finite number");
      (c < nx ? xs : ys).push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw DataError(source + ": no data rows");
  return Dataset{MatrixD(rows, nx, std::move(xs)), MatrixD(rows, ny, std::move(ys))};
}

Dataset read_dataset(const fs::path& path) { return parse_dataset(read_text(path), path.string()); }

std::string format_dataset(const Dataset& d) {
  std::string out;
  for (std::size_t j = 0; j < d.x.cols(); ++j) out += "x" + std::to_string(j) + ",";
  for (std::size_t j = 0; j < d.y.cols(); ++j) out += (j ? ",y" : "y") + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < d.y.rows(); ++i) {
    for (std::size_t j = 0; j < d.x.cols(); ++j) out += fmt_double(d.x(i, j)) + ",";
    for (std::size_t j = 0; j < d.y.cols(); ++j) out += (j ? "," : "") + fmt_double(d.y(i, j));
    out += '\n';
  }
  return out;
}

void write_dataset(const fs::path& path, const Dataset& d) { write_text(path, format_dataset(d)); }

void check_targets(const Dataset& d, LikelihoodKind kind, const std::string& source) {
  if (d.y.cols() == 0) throw DataError(source + ": missing target column 'y0'");
  LikelihoodSpec<double> lik;
  lik.kind = kind;
  lik.outputs = kind == LikelihoodKind::kGaussian ? d.y.cols() : 1;
  if (d.y.cols() != lik.targets())
    throw DataError(source + ": " + to_string(kind) + " likelihood needs " +
                    std::to_string(lik.targets()) + " target column(s) y0.., file has " +
                    std::to_string(d.y.cols()));
  if (kind != LikelihoodKind::kBernoulli) return;
  for (std::size_t i = 0; i < d.y.rows(); ++i)
    if (d.y(i, 0) != 0.0 && d.y(i, 0) != 1.0)
      throw DataError(source + ": data row " + std::to_string(i + 1) + ", column y0: bernoulli target " +
                      fmt_double(d.y(i, 0)) + " is not 0 or 1");
}

void write_trace(const fs::path& path, const std::vector<TraceRow>& trace) {
  std::string out = "step,elbo,wall_ms\n";
  for (const auto& r : trace) out += fmt::format("{},{},{:.3f}\n", r.step, r.elbo, r.wall_ms);
  write_text(path, out);
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write '" + path.string() + "'");
  f << text;
  if (!f.flush()) throw DataError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------- schema helpers

namespace {

// Reads fields of one JSON object and remembers which were consumed, so
// anything left over can be reported as unknown.
class Fields {
 public:
  // `versioned`: leftover fields mean a newer writer, reported as VersionError.
  Fields(const json& j, std::string path, bool versioned = false)
      : j_(j), path_(std::move(path)), versioned_(versioned) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "document" : "'" + path_ + "'";
    return "'" + (path_.empty() ? key : path_ + "." + key) + "'";
  }

  const json* get(const std::string& key) {
    seen_.push_back(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }
  const json& require(const std::string& key) {
    const json* v = get(key);
    if (!v) throw ConfigError("missing required field " + where(key));
    return *v;
  }

  double number(const std::string& key, double fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError("field " + where(key) + " must be a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) throw ConfigError("field " + where(key) + " must be finite");
    return d;
  }
  std::optional<double> maybe_number(const std::string& key) {
    if (!j_.contains(key) || j_.at(key).is_null()) {
      seen_.push_back(key);
      return std::nullopt;
    }
    return number(key, 0.0);
  }
  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
      throw ConfigError("field " + where(key) + " must be a non-negative integer");
    return v->get<std::uint64_t>();
  }
  bool flag(const std::string& key, bool fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError("field " + where(key) + " must be true or false");
    return v->get<bool>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError("field " + where(key) + " must be a string");
    return v->get<std::string>();
  }

  template <class E>
  E choice(const std::string& key, E fallback, std::initializer_list<std::pair<const char*, E>> names) {
    const json* v = get(key);
    if (!v) return fallback;
    std::string allowed;
    if (v->is_string())
      for (const auto& [n, e] : names)
        if (v->get<std::string>() == n) return e;
    for (const auto& [n, e] : names) allowed += (allowed.empty() ? "" : ", ") + std::string(n);
    throw ConfigError("field " + where(key) + " must be one of: " + allowed);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) {
        if (versioned_)
          throw VersionError("unknown field " + where(it.key()) + " (not part of format version " +
                             std::to_string(kCheckpointVersion) + ")");
        throw ConfigError("unknown field " + where(it.key()));
      }
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
  bool versioned_ = false;
};

const std::initializer_list<std::pair<const char*, LikelihoodKind>> kLikNames = {
    {"gaussian", LikelihoodKind::kGaussian},
    {"heteroscedastic", LikelihoodKind::kHeteroscedastic},
    {"bernoulli", LikelihoodKind::kBernoulli}};
const std::initializer_list<std::pair<const char*, Whitening>> kWhiteNames = {
    {"full", Whitening::kFull}, {"mean_only", Whitening::kMeanOnly}, {"none", Whitening::kNone}};
const std::initializer_list<std::pair<const char*, MixingKind>> kMixNames = {
    {"separate", MixingKind::kSeparate}, {"lmc", MixingKind::kLmc}};
const std::initializer_list<std::pair<const char*, InducingKind>> kInducingNames = {
    {"dirac", InducingKind::kDirac}, {"derivative", InducingKind::kDerivative}};
const std::initializer_list<std::pair<const char*, MeanFamily>> kMeanNames = {
    {"zero", MeanFamily::kZero},
    {"constant", MeanFamily::kConstant},
    {"linear", MeanFamily::kLinear},
    {"identity", MeanFamily::kIdentity}};
const std::initializer_list<std::pair<const char*, KernelFamily>> kKernelNames = {
    {"rbf", KernelFamily::kRbf}};
const std::initializer_list<std::pair<const char*, Objective>> kObjectiveNames = {
    {"elbo", Objective::kElbo}, {"deep", Objective::kDeep}, {"lv", Objective::kLv},
    {"iw_lv", Objective::kIwLv}};
const std::initializer_list<std::pair<const char*, LatentKl>> kKlNames = {
    {"analytic", LatentKl::kAnalytic}, {"sampled", LatentKl::kSampled}};

std::string inducing_name(InducingKind k) { return k == InducingKind::kDirac ? "dirac" : "derivative"; }

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

// ---------------------------------------------------------------- run config

RunConfig parse_config(const std::string& text, const fs::path& base) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  Fields top(doc, "");
  if (const json* v = top.get("format_version"))
    if (!v->is_number_integer() || v->get<int>() != 1)
      throw VersionError("config format_version " + v->dump() + " is not supported (expected 1)");
  cfg.data = resolve(base, top.text("data", ""));
  if (cfg.data.empty()) throw ConfigError("missing required field 'data'");
  cfg.checkpoint = resolve(base, top.text("checkpoint", "model.json"));
  if (const std::string t = top.text("trace", ""); !t.empty()) cfg.trace = resolve(base, t);
  cfg.train.seed = top.count("seed", 0);

  ModelTopology& topo = cfg.topology;
  if (const json* m = top.get("model")) {
    Fields f(*m, "model");
    topo.likelihood = f.choice("likelihood", topo.likelihood, kLikNames);
    topo.noise_variance = f.number("noise_variance", topo.noise_variance);
    topo.latent_dim = f.count("latent_dim", topo.latent_dim);
    topo.whitening = f.choice("whitening", topo.whitening, kWhiteNames);
    topo.latent_mean_scale = f.number("latent_mean_scale", topo.latent_mean_scale);
    topo.latent_scale = f.number("latent_scale", topo.latent_scale);
    if (const json* layers = f.get("layers")) {
      if (!layers->is_array() || layers->empty())
        throw ConfigError("field 'model.layers' must be a non-empty array");
      topo.layers.clear();
      for (std::size_t l = 0; l < layers->size(); ++l) {
        Fields lf((*layers)[l], "model.layers[" + std::to_string(l) + "]");
        LayerTopology t;
        t.outputs = lf.count("outputs", t.outputs);
        t.num_inducing = lf.count("num_inducing", t.num_inducing);
        t.mixing = lf.choice("mixing", t.mixing, kMixNames);
        t.latent_outputs = lf.count("latent_outputs", t.latent_outputs);
        t.shared_inducing = lf.flag("shared_inducing", t.shared_inducing);
        t.inducing = lf.choice("inducing", t.inducing, kInducingNames);
        t.kernel_variance = lf.maybe_number("kernel_variance");
        t.lengthscale = lf.number("lengthscale", t.lengthscale);
        if (lf.get("mean")) t.mean = lf.choice("mean", MeanFamily::kZero, kMeanNames);
        t.q_sqrt_scale = lf.maybe_number("q_sqrt_scale");
        lf.finish();
        topo.layers.push_back(t);
      }
    }
    f.finish();
  }

  TrainConfig& tr = cfg.train;
  if (const json* t = top.get("train")) {
    Fields f(*t, "train");
    tr.steps = f.count("steps", tr.steps);
    tr.batch_size = f.count("batch_size", tr.batch_size);
    tr.adam.learning_rate = f.number("learning_rate", tr.adam.learning_rate);
    tr.adam.beta1 = f.number("beta1", tr.adam.beta1);
    tr.adam.beta2 = f.number("beta2", tr.adam.beta2);
    tr.adam.eps = f.number("eps", tr.adam.eps);
    tr.freeze_generative_steps = f.count("freeze_generative_steps", tr.freeze_generative_steps);
    tr.objective.kind = f.choice("objective", tr.objective.kind, kObjectiveNames);
    tr.objective.n_mc = f.count("mc", tr.objective.n_mc);
    tr.objective.iw.samples = f.count("S", tr.objective.iw.samples);
    tr.objective.iw.outer_mc = f.count("outer_mc", tr.objective.iw.outer_mc);
    tr.objective.latent_kl = f.choice("latent_kl", tr.objective.latent_kl, kKlNames);
    tr.objective.quad.order = f.count("quadrature_order", tr.objective.quad.order);
    f.finish();
  }
  top.finish();
  try {
    tr.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
  return cfg;
}

RunConfig read_config(const fs::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text, path.parent_path());
}

fs::path trace_path_for(const RunConfig& cfg) {
  if (!cfg.trace.empty()) return cfg.trace;
  fs::path p = cfg.checkpoint;
  return p.replace_extension(".trace.csv");
}

// ---------------------------------------------------------------- checkpoints

namespace {

json mean_json(const MeanSpec<double>& m) {
  return {{"family", to_string(m.family)}, {"input_dim", m.input_dim}, {"output_dim", m.output_dim}};
}

MeanSpec<double> mean_from(const json& j, const std::string& path) {
  Fields f(j, path, true);
  MeanSpec<double> m;
  m.family = f.choice("family", MeanFamily::kZero, kMeanNames);
  m.input_dim = f.count("input_dim", 0);
  m.output_dim = f.count("output_dim", 0);
  f.finish();
  if (m.family == MeanFamily::kConstant) m.constant.assign(m.output_dim, 0.0);
  if (m.family == MeanFamily::kLinear) {
    m.weight = MatrixD(m.output_dim, m.input_dim);
    m.bias.assign(m.output_dim, 0.0);
  }
  return m;
}

}  // namespace

std::string format_checkpoint(const Checkpoint& c) {
  const DeepModel<double>& model = c.state.model;
  json layers = json::array();
  for (const auto& layer : model.layers) {
    json latents = json::array();
    for (const auto& g : layer.latents)
      latents.push_back({{"kernel", to_string(g.kernel.family)},
                         {"input_dim", g.kernel.lengthscales.size()},
                         {"inducing", inducing_name(g.inducing.kind)},
                         {"num_inducing", g.inducing.points.rows()},
                         {"feature_dims", g.inducing.dims},
                         {"outputs", g.vstate.q_mean.cols()},
                         {"whitening", to_string(g.vstate.whitening)},
                         {"mean", mean_json(g.mean)}});
    json l = {{"mixing", to_string(layer.mixing)}, {"latents", latents}};
    if (layer.mixing == MixingKind::kLmc) {
      l["weight_shape"] = {layer.weight.rows(), layer.weight.cols()};
      l["mean"] = mean_json(layer.mean);
    }
    layers.push_back(l);
  }
  json params = json::array();
  for (const auto& e : c.params.entries)
    params.push_back({{"name", e.name},
                      {"transform", to_string(e.transform)},
                      {"raw", std::vector<double>(c.params.raw.begin() + static_cast<std::ptrdiff_t>(e.offset),
                                                  c.params.raw.begin() + static_cast<std::ptrdiff_t>(e.offset + e.size))}});
  json doc = {{"format_version", kCheckpointVersion},
              {"seed", c.seed},
              {"step", c.step},
              {"model",
               {{"data_dim", model.data_dim},
                {"latent_dim", model.latent_dim},
                {"latent_rows", c.state.table.rows()},
                {"likelihood", {{"kind", to_string(model.likelihood.kind)}, {"outputs", model.likelihood.outputs}}},
                {"layers", layers}}},
              {"parameters", params}};
  return doc.dump(1) + "\n";
}

Checkpoint parse_checkpoint(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version"))
    throw VersionError(source + ": missing format_version");
  const json& ver = doc.at("format_version");
  if (!ver.is_number_integer() || ver.get<std::int64_t>() != kCheckpointVersion)
    throw VersionError(source + ": format_version " + ver.dump() + " is not supported (this build reads " +
                       std::to_string(kCheckpointVersion) + ")");
  Fields top(doc, "", true);
  top.get("format_version");
  Checkpoint c;
  c.seed = top.count("seed", 0);
  c.step = top.count("step", 0);

  // Zero-valued structure with the recorded topology; values come from the
  // raw parameters below.
  Fields mf(top.require("model"), "model", true);
  ModelState<double> s;
  s.model.data_dim = mf.count("data_dim", 0);
  s.model.latent_dim = mf.count("latent_dim", 0);
  const std::size_t rows = mf.count("latent_rows", 0);
  {
    Fields lf(mf.require("likelihood"), "model.likelihood", true);
    s.model.likelihood.kind = lf.choice("kind", LikelihoodKind::kGaussian, kLikNames);
    s.model.likelihood.outputs = lf.count("outputs", 1);
    lf.finish();
  }
  const json& layers = mf.require("layers");
  if (!layers.is_array() || layers.empty()) throw ConfigError("field 'model.layers' must be a non-empty array");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string lp = "model.layers[" + std::to_string(l) + "]";
    Fields lf(layers[l], lp, true);
    MOLayer<double> layer;
    layer.mixing = lf.choice("mixing", MixingKind::kSeparate, kMixNames);
    if (layer.mixing == MixingKind::kLmc) {
      const json& shape = lf.require("weight_shape");
      if (!shape.is_array() || shape.size() != 2 || !shape[0].is_number_unsigned() || !shape[1].is_number_unsigned())
        throw ConfigError("field '" + lp + ".weight_shape' must be [rows, cols]");
      layer.weight = MatrixD(shape[0].get<std::size_t>(), shape[1].get<std::size_t>());
      layer.mean = mean_from(lf.require("mean"), lp + ".mean");
    }
    const json& latents = lf.require("latents");
    if (!latents.is_array() || latents.empty()) throw ConfigError("field '" + lp + ".latents' must be a non-empty array");
    for (std::size_t b = 0; b < latents.size(); ++b) {
      const std::string bp = lp + ".latents[" + std::to_string(b) + "]";
      Fields bf(latents[b], bp, true);
      SVGPLayer<double> g;
      g.kernel.family = bf.choice("kernel", KernelFamily::kRbf, kKernelNames);
      const std::size_t in = bf.count("input_dim", 0);
      g.kernel.variance = 1.0;
      g.kernel.lengthscales.assign(in, 1.0);
      g.inducing.kind = bf.choice("inducing", InducingKind::kDirac, kInducingNames);
      const std::size_t m = bf.count("num_inducing", 0);
      g.inducing.points = MatrixD(m, in);
      if (const json* dims = bf.get("feature_dims")) {
        if (!dims->is_array()) throw ConfigError("field '" + bp + ".feature_dims' must be an array");
        for (const auto& d : *dims) {
          if (!d.is_number_unsigned() || d.get<std::size_t>() >= in)
            throw ConfigError("field '" + bp + ".feature_dims' has an out-of-range entry");
          g.inducing.dims.push_back(d.get<std::size_t>());
        }
      }
      const std::size_t outputs = bf.count("outputs", 1);
      g.vstate.whitening = bf.choice("whitening", Whitening::kFull, kWhiteNames);
      g.vstate.q_mean = MatrixD(m, outputs);
      for (std::size_t d = 0; d < outputs; ++d) g.vstate.q_sqrt.push_back(MatrixD::identity(m));
      g.mean = mean_from(bf.require("mean"), bp + ".mean");
      bf.finish();
      layer.latents.push_back(std::move(g));
    }
    lf.finish();
    s.model.layers.push_back(std::move(layer));
  }
  mf.finish();
  if (s.model.latent_dim > 0) {
    s.table.mean = MatrixD(rows, s.model.latent_dim);
    s.table.scale = MatrixD(rows, s.model.latent_dim, 1.0);
  }
  try {
    s.model.validate();
  } catch (const Error& e) {
    throw ConfigError(source + ": inconsistent model: " + e.what());
  }

  c.params = flatten(s);
  const json& params = top.require("parameters");
  if (!params.is_array() || params.size() != c.params.entries.size())
    throw ConfigError(source + ": 'parameters' must list " + std::to_string(c.params.entries.size()) +
                      " entries for this model");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const ParamEntry& e = c.params.entries[k];
    Fields pf(params[k], "parameters[" + std::to_string(k) + "]", true);
    const std::string name = pf.text("name", "");
    if (name != e.name)
      throw ConfigError(source + ": parameters[" + std::to_string(k) + "] is '" + name + "', expected '" +
                        e.name + "'");
    pf.text("transform", "");
    const json& raw = pf.require("raw");
    if (!raw.is_array() || raw.size() != e.size)
      throw ConfigError(source + ": parameter '" + e.name + "' needs " + std::to_string(e.size) + " raw values");
    for (std::size_t i = 0; i < e.size; ++i) {
      if (!raw[i].is_number()) throw ConfigError(source + ": parameter '" + e.name + "' has a non-numeric value");
      c.params.raw[e.offset + i] = raw[i].get<double>();
    }
    pf.finish();
  }
  top.finish();
  c.state = svgp::bind<double>(s, std::span<const double>(c.params.raw));
  return c;
}

void write_checkpoint(const fs::path& path, const Checkpoint& c) { write_text(path, format_checkpoint(c)); }

Checkpoint read_checkpoint(const fs::path& path) { return parse_checkpoint(read_text(path), path.string()); }

}  // namespace svgp
