#include "smoothflow/smoothflow.h"

#include <optional>
#include <string>

#include "smoothflow/commands.hpp"
#include "smoothflow/errors.hpp"
#include "smoothflow/flow.hpp"
#include "smoothflow/json_util.hpp"
#include "smoothflow/rootfind.hpp"
#include "smoothflow/training.hpp"

struct sf_model {
  smoothflow::FlowModel model;
};

struct sf_string {
  std::string text;
};

namespace {

thread_local std::string g_last_error;

sf_status fail(sf_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
sf_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return SF_OK;
  } catch (const smoothflow::ConfigError& e) {
    return fail(SF_ERR_CONFIG, e.what());
  } catch (const smoothflow::IoError& e) {
    return fail(SF_ERR_IO, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(SF_ERR_CONFIG, e.what());
  } catch (const smoothflow::TrainingAborted& e) {
    return fail(SF_ERR_TRAINING_ABORTED, e.what());
  } catch (const smoothflow::NumericError& e) {
    return fail(SF_ERR_NUMERIC, e.what());
  } catch (const smoothflow::NotConverged& e) {
    return fail(SF_ERR_NUMERIC, e.what());
  } catch (const smoothflow::TargetOutOfBracket& e) {
    return fail(SF_ERR_NUMERIC, e.what());
  } catch (const std::domain_error& e) {
    return fail(SF_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(SF_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SF_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SF_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* name) {
  if (!p) throw std::invalid_argument(std::string(name) + " must not be NULL");
}

std::string str_or_empty(const char* s) { return s ? std::string(s) : std::string(); }

std::optional<std::uint64_t> opt_seed(const uint64_t* s) { return s ? std::optional<std::uint64_t>(*s) : std::nullopt; }

void emit(sf_string** out, std::string text) {
  if (out) *out = new sf_string{std::move(text)};
}

smoothflow::Points read_points(const double* x, size_t n, int dims) {
  if (n == 0) throw std::invalid_argument("batch must not be empty");
  smoothflow::Points p(static_cast<Eigen::Index>(n), dims);
  for (size_t i = 0; i < n; ++i)
    for (int d = 0; d < dims; ++d) p(static_cast<Eigen::Index>(i), d) = x[i * static_cast<size_t>(dims) + static_cast<size_t>(d)];
  return p;
}

void write_points(const smoothflow::Points& p, double* out) {
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index d = 0; d < p.cols(); ++d) out[i * p.cols() + d] = p(i, d);
}

void write_vector(const Eigen::ArrayXd& v, double* out) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v(i);
}

}  // namespace

extern "C" {

const char* sf_version(void) { return "0.3.0"; }

const char* sf_last_error(void) { return g_last_error.c_str(); }

const char* sf_status_name(sf_status s) {
  switch (s) {
    case SF_OK:
      return "ok";
    case SF_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case SF_ERR_CONFIG:
      return "configuration error";
    case SF_ERR_IO:
      return "i/o error";
    case SF_ERR_NUMERIC:
      return "numerical error";
    case SF_ERR_TRAINING_ABORTED:
      return "training aborted";
    case SF_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* sf_string_data(const sf_string* s) { return s ? s->text.c_str() : ""; }

void sf_string_free(sf_string* s) { delete s; }

sf_status sf_model_load(const char* path, sf_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new sf_model{smoothflow::FlowModel::from_json(smoothflow::jsonu::read_file(path))};
  });
}

sf_status sf_model_save(const sf_model* m, const char* path) {
  return guarded([&] {
    require(m, "model");
    require(path, "path");
    smoothflow::jsonu::write_file(path, m->model.to_json());
  });
}

void sf_model_free(sf_model* m) { delete m; }

sf_status sf_model_dims(const sf_model* m, int* out) {
  return guarded([&] {
    require(m, "model");
    require(out, "out");
    *out = m->model.dims;
  });
}

sf_status sf_model_log_density(const sf_model* m, const double* x, size_t n, double* log_p) {
  return guarded([&] {
    require(m, "model");
    require(x, "x");
    require(log_p, "log_p");
    write_vector(smoothflow::log_density(m->model, read_points(x, n, m->model.dims)), log_p);
  });
}

sf_status sf_model_force(const sf_model* m, const double* x, size_t n, double* log_p, double* force) {
  return guarded([&] {
    require(m, "model");
    require(x, "x");
    require(force, "force");
    const auto r = smoothflow::flow_force(m->model, read_points(x, n, m->model.dims));
    write_points(r.force, force);
    if (log_p) write_vector(r.log_p, log_p);
  });
}

sf_status sf_model_inverse(const sf_model* m, const double* x, size_t n, double* z, double* log_det) {
  return guarded([&] {
    require(m, "model");
    require(x, "x");
    require(z, "z");
    const auto r = smoothflow::flow_inverse(m->model, read_points(x, n, m->model.dims));
    write_points(r.out, z);
    if (log_det) write_vector(r.log_det, log_det);
  });
}

sf_status sf_model_forward(const sf_model* m, const double* z, size_t n, double* x, double* log_det) {
  return guarded([&] {
    require(m, "model");
    require(z, "z");
    require(x, "x");
    const auto r = smoothflow::flow_forward(m->model, read_points(z, n, m->model.dims));
    write_points(r.out, x);
    if (log_det) write_vector(r.log_det, log_det);
  });
}

sf_status sf_model_sample(const sf_model* m, size_t n, uint64_t seed, double* x, double* log_p) {
  return guarded([&] {
    require(m, "model");
    require(x, "x");
    if (n == 0 || n > static_cast<size_t>(INT32_MAX)) throw std::invalid_argument("n out of range");
    const auto r = smoothflow::sample(m->model, static_cast<int>(n), seed);
    write_points(r.x, x);
    if (log_p) write_vector(r.log_p, log_p);
  });
}

sf_status sf_cmd_gen_data(const char* config_path, const char* out_csv, const uint64_t* seed, sf_string** summary) {
  return guarded([&] {
    require(config_path, "config_path");
    require(out_csv, "out_csv");
    emit(summary, smoothflow::cmd_gen_data(config_path, out_csv, opt_seed(seed)));
  });
}

sf_status sf_cmd_train(const char* config_path, const char* data_csv, const char* out_dir, const uint64_t* seed, sf_string** summary) {
  return guarded([&] {
    require(config_path, "config_path");
    require(data_csv, "data_csv");
    require(out_dir, "out_dir");
    emit(summary, smoothflow::cmd_train(config_path, data_csv, out_dir, opt_seed(seed)));
  });
}

sf_status sf_cmd_eval(const char* model_path, const char* data_csv, const char* out_json, int kld_samples, const uint64_t* seed,
                      sf_string** summary) {
  return guarded([&] {
    require(model_path, "model_path");
    require(data_csv, "data_csv");
    emit(summary, smoothflow::cmd_eval(model_path, data_csv, str_or_empty(out_json), kld_samples, opt_seed(seed)));
  });
}

sf_status sf_cmd_mdsim(const char* config_path, const char* model_path, const char* data_csv, const char* out_csv, const uint64_t* seed,
                       sf_string** summary) {
  return guarded([&] {
    require(config_path, "config_path");
    require(out_csv, "out_csv");
    emit(summary, smoothflow::cmd_mdsim(config_path, str_or_empty(model_path), str_or_empty(data_csv), out_csv, opt_seed(seed)));
  });
}

sf_status sf_cmd_bench_rootfind(const int* dims, size_t n_dims, const int* bins, size_t n_bins, int batch, int reps, double eps,
                                uint64_t seed, int timing, const char* out_csv, sf_string** summary) {
  return guarded([&] {
    require(dims, "dims");
    require(bins, "bins");
    require(out_csv, "out_csv");
    emit(summary, smoothflow::cmd_bench_rootfind(std::vector<int>(dims, dims + n_dims), std::vector<int>(bins, bins + n_bins), batch,
                                                 reps, eps, seed, timing != 0, out_csv));
  });
}

sf_status sf_cmd_export_grid(const char* model_path, const char* config_path, int resolution, const char* out_csv, sf_string** summary) {
  return guarded([&] {
    require(out_csv, "out_csv");
    emit(summary, smoothflow::cmd_export_grid(str_or_empty(model_path), str_or_empty(config_path), resolution, out_csv));
  });
}

}  // extern "C"
