#include "svgp/svgp.h"

#include <cmath>
#include <cstring>
#include <new>

#include "commands.hpp"
#include "log.hpp"

struct svgp_dataset {
  svgp::Dataset data;
};

struct svgp_model {
  svgp::Checkpoint ckpt;
};

struct svgp_prediction {
  std::size_t rows = 0, outputs = 0;
  std::vector<double> mean, var, log_density;
};

namespace {

thread_local std::string g_last_error;

svgp_status fail(svgp_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs f, translating exceptions into status codes.
template <class F>
svgp_status guarded(F&& f) {
  svgp::logging::init_from_env();
  try {
    f();
    return SVGP_OK;
  } catch (const svgp::VersionError& e) {
    return fail(SVGP_ERR_VERSION, e.what());
  } catch (const svgp::ConfigError& e) {
    return fail(SVGP_ERR_CONFIG, e.what());
  } catch (const svgp::DataError& e) {
    return fail(SVGP_ERR_DATA, e.what());
  } catch (const svgp::ShapeError& e) {
    return fail(SVGP_ERR_SHAPE, e.what());
  } catch (const svgp::ArityError& e) {
    return fail(SVGP_ERR_ARITY, e.what());
  } catch (const svgp::MissingLatentRow& e) {
    return fail(SVGP_ERR_MISSING_LATENT_ROW, e.what());
  } catch (const svgp::UnsupportedMean& e) {
    return fail(SVGP_ERR_UNSUPPORTED_MEAN, e.what());
  } catch (const svgp::FactorizationError& e) {
    return fail(SVGP_ERR_FACTORIZATION, e.what());
  } catch (const svgp::NonFiniteError& e) {
    return fail(SVGP_ERR_NON_FINITE, e.what());
  } catch (const svgp::DivergenceError& e) {
    return fail(SVGP_ERR_DIVERGENCE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SVGP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SVGP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SVGP_ERR_INTERNAL, "unknown error");
  }
}

svgp_status null_arg(const char* what) {
  return fail(SVGP_ERR_INVALID_ARGUMENT, std::string(what) + " must not be NULL");
}

svgp_status copy_out(const std::vector<double>& v, double* buf, std::size_t len) {
  if (!buf) return null_arg("buf");
  if (len < v.size())
    return fail(SVGP_ERR_INVALID_ARGUMENT,
                "buffer holds " + std::to_string(len) + " values, need " + std::to_string(v.size()));
  std::copy(v.begin(), v.end(), buf);
  return SVGP_OK;
}

}  // namespace

extern "C" {

const char* svgp_last_error(void) { return g_last_error.c_str(); }

const char* svgp_status_name(svgp_status s) {
  switch (s) {
    case SVGP_OK: return "ok";
    case SVGP_ERR_INTERNAL: return "internal error";
    case SVGP_ERR_CONFIG: return "config error";
    case SVGP_ERR_VERSION: return "version error";
    case SVGP_ERR_DATA: return "data error";
    case SVGP_ERR_SHAPE: return "shape error";
    case SVGP_ERR_ARITY: return "arity error";
    case SVGP_ERR_MISSING_LATENT_ROW: return "missing latent row";
    case SVGP_ERR_UNSUPPORTED_MEAN: return "unsupported mean";
    case SVGP_ERR_FACTORIZATION: return "factorization error";
    case SVGP_ERR_NON_FINITE: return "non-finite value";
    case SVGP_ERR_DIVERGENCE: return "divergence";
    case SVGP_ERR_INVALID_ARGUMENT: return "invalid argument";
  }
  return "unknown status";
}

int svgp_exit_code(svgp_status s) {
  switch (s) {
    case SVGP_OK: return 0;
    case SVGP_ERR_CONFIG:
    case SVGP_ERR_VERSION:
    case SVGP_ERR_UNSUPPORTED_MEAN:
    case SVGP_ERR_INVALID_ARGUMENT: return 2;
    case SVGP_ERR_DATA:
    case SVGP_ERR_SHAPE:
    case SVGP_ERR_ARITY:
    case SVGP_ERR_MISSING_LATENT_ROW: return 3;
    case SVGP_ERR_FACTORIZATION:
    case SVGP_ERR_NON_FINITE:
    case SVGP_ERR_DIVERGENCE: return 4;
    case SVGP_ERR_INTERNAL: break;
  }
  return 1;
}

const char* svgp_version(void) { return "1.0.0"; }

svgp_status svgp_dataset_read(const char* path, svgp_dataset** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new svgp_dataset{svgp::read_dataset(path)}; });
}

svgp_status svgp_dataset_write(const svgp_dataset* data, const char* path) {
  if (!data) return null_arg("data");
  if (!path) return null_arg("path");
  return guarded([&] { svgp::write_dataset(path, data->data); });
}

svgp_status svgp_dataset_create(size_t rows, size_t x_cols, size_t y_cols, const double* x,
                                const double* y, svgp_dataset** out) {
  if (!out) return null_arg("out");
  if ((x_cols > 0 && !x) || (y_cols > 0 && !y)) return null_arg("x/y");
  return guarded([&] {
    svgp::Dataset d{svgp::MatrixD(rows, x_cols), svgp::MatrixD(rows, y_cols)};
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < x_cols; ++j) d.x(i, j) = x[i * x_cols + j];
      for (std::size_t j = 0; j < y_cols; ++j) d.y(i, j) = y[i * y_cols + j];
    }
    *out = new svgp_dataset{std::move(d)};
  });
}

size_t svgp_dataset_rows(const svgp_dataset* d) { return d ? d->data.y.rows() : 0; }
size_t svgp_dataset_x_cols(const svgp_dataset* d) { return d ? d->data.x.cols() : 0; }
size_t svgp_dataset_y_cols(const svgp_dataset* d) { return d ? d->data.y.cols() : 0; }

svgp_status svgp_dataset_copy_x(const svgp_dataset* d, double* buf, size_t len) {
  if (!d) return null_arg("data");
  return copy_out(d->data.x.data(), buf, len);
}

svgp_status svgp_dataset_copy_y(const svgp_dataset* d, double* buf, size_t len) {
  if (!d) return null_arg("data");
  return copy_out(d->data.y.data(), buf, len);
}

void svgp_dataset_free(svgp_dataset* d) { delete d; }

svgp_status svgp_gen_data(const char* kind, const char* params_json, uint64_t seed, svgp_dataset** out) {
  if (!kind) return null_arg("kind");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new svgp_dataset{svgp::generate(kind, params_json ? params_json : "", seed)};
  });
}

svgp_status svgp_fit(const char* config_path, const char* out_path, svgp_model** model_out) {
  if (!config_path) return null_arg("config_path");
  return guarded([&] {
    svgp::FitOutcome r = svgp::run_fit(config_path, out_path ? out_path : "");
    if (model_out) *model_out = new svgp_model{std::move(r.checkpoint)};
  });
}

svgp_status svgp_model_read(const char* path, svgp_model** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new svgp_model{svgp::read_checkpoint(path)}; });
}

svgp_status svgp_model_write(const svgp_model* m, const char* path) {
  if (!m) return null_arg("model");
  if (!path) return null_arg("path");
  return guarded([&] { svgp::write_checkpoint(path, m->ckpt); });
}

void svgp_model_free(svgp_model* m) { delete m; }

size_t svgp_model_data_dim(const svgp_model* m) { return m ? m->ckpt.state.model.data_dim : 0; }
size_t svgp_model_latent_dim(const svgp_model* m) { return m ? m->ckpt.state.model.latent_dim : 0; }
size_t svgp_model_depth(const svgp_model* m) { return m ? m->ckpt.state.model.depth() : 0; }
size_t svgp_model_outputs(const svgp_model* m) { return m ? m->ckpt.state.model.likelihood.targets() : 0; }
size_t svgp_model_param_count(const svgp_model* m) { return m ? m->ckpt.params.size() : 0; }

svgp_status svgp_model_copy_raw(const svgp_model* m, double* buf, size_t len) {
  if (!m) return null_arg("model");
  return copy_out(m->ckpt.params.raw, buf, len);
}

svgp_status svgp_predict(const svgp_model* m, const svgp_dataset* inputs, const svgp_dataset* targets,
                         const svgp_predict_options* opts, svgp_prediction** out) {
  if (!m) return null_arg("model");
  if (!inputs) return null_arg("inputs");
  if (!out) return null_arg("out");
  return guarded([&] {
    const svgp::DeepModel<double>& model = m->ckpt.state.model;
    const svgp::Dataset& in = inputs->data;
    if (in.x.cols() != model.data_dim)
      throw svgp::ShapeError("inputs have " + std::to_string(in.x.cols()) + " x columns, model expects " +
                             std::to_string(model.data_dim));
    const svgp::MatrixD* y = nullptr;
    if (targets) {
      svgp::check_targets(targets->data, model.likelihood.kind, "targets");
      if (targets->data.y.rows() != in.y.rows())
        throw svgp::ShapeError("targets have " + std::to_string(targets->data.y.rows()) +
                               " rows, inputs have " + std::to_string(in.y.rows()));
      y = &targets->data.y;
    }
    svgp::PredictOptions po;
    po.paths = opts && opts->paths > 0 ? opts->paths : 1;
    po.joint = opts && opts->joint != 0;
    const svgp::EvalSettings ev{opts ? opts->seed : 0, 0, {}};
    const svgp::DeepPrediction p = svgp::predict_deep(model, in.x, po, ev, y);
    auto res = std::make_unique<svgp_prediction>();
    res->rows = p.pooled.size();
    res->outputs = p.pooled.empty() ? 0 : p.pooled[0].mean.size();
    for (const auto& s : p.pooled) {
      res->mean.insert(res->mean.end(), s.mean.begin(), s.mean.end());
      res->var.insert(res->var.end(), s.var.begin(), s.var.end());
    }
    res->log_density = p.log_density;
    *out = res.release();
  });
}

size_t svgp_prediction_rows(const svgp_prediction* p) { return p ? p->rows : 0; }
size_t svgp_prediction_outputs(const svgp_prediction* p) { return p ? p->outputs : 0; }
int svgp_prediction_has_density(const svgp_prediction* p) { return p && !p->log_density.empty(); }

svgp_status svgp_prediction_copy_mean(const svgp_prediction* p, double* buf, size_t len) {
  if (!p) return null_arg("prediction");
  return copy_out(p->mean, buf, len);
}

svgp_status svgp_prediction_copy_var(const svgp_prediction* p, double* buf, size_t len) {
  if (!p) return null_arg("prediction");
  return copy_out(p->var, buf, len);
}

svgp_status svgp_prediction_copy_log_density(const svgp_prediction* p, double* buf, size_t len) {
  if (!p) return null_arg("prediction");
  if (p->log_density.empty()) return fail(SVGP_ERR_INVALID_ARGUMENT, "prediction has no targets");
  return copy_out(p->log_density, buf, len);
}

void svgp_prediction_free(svgp_prediction* p) { delete p; }

svgp_status svgp_objective(const svgp_model* m, const svgp_dataset* data, const svgp_objective_options* opts,
                           double* mean, double* se) {
  if (!m) return null_arg("model");
  if (!data) return null_arg("data");
  if (!opts || !opts->objective) return null_arg("opts->objective");
  if (!mean) return null_arg("mean");
  return guarded([&] {
    svgp::ObjectiveConfig cfg;
    cfg.kind = svgp::objective_from_string(opts->objective);
    cfg.iw.samples = opts->samples > 0 ? opts->samples : 1;
    cfg.latent_kl = opts->sampled_latent_kl ? svgp::LatentKl::kSampled : svgp::LatentKl::kAnalytic;
    const svgp::Estimate e = svgp::estimate_objective(m->ckpt.state, data->data, cfg,
                                                      opts->mc > 0 ? opts->mc : 1, opts->seed);
    *mean = e.mean;
    if (se) *se = e.se;
  });
}

svgp_status svgp_set_log_level(const char* level) {
  if (!level) return null_arg("level");
  svgp::logging::init_from_env();
  if (!svgp::logging::set_level(level))
    return fail(SVGP_ERR_CONFIG, std::string("log level '") + level + "' is not one of error, warn, info, debug");
  return SVGP_OK;
}

}  // extern "C"
