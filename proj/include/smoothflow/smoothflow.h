/* C interface to the smoothflow library.
 *
 * Every function returns an sf_status. On failure, sf_last_error() gives a
 * message for the calling thread; it stays valid until the next call from
 * that thread. Point batches are row-major (n x dims). */
#ifndef SMOOTHFLOW_H
#define SMOOTHFLOW_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SF_API __declspec(dllexport)
#else
#define SF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sf_status {
  SF_OK = 0,
  SF_ERR_INVALID_ARGUMENT = 1,
  SF_ERR_CONFIG = 2,
  SF_ERR_IO = 3,
  SF_ERR_NUMERIC = 4,   /* non-finite values, root finding failures */
  SF_ERR_TRAINING_ABORTED = 5,
  SF_ERR_INTERNAL = 6
} sf_status;

typedef struct sf_model sf_model;
typedef struct sf_string sf_string;

SF_API const char* sf_version(void);
SF_API const char* sf_last_error(void);
SF_API const char* sf_status_name(sf_status s);

SF_API const char* sf_string_data(const sf_string* s);
SF_API void sf_string_free(sf_string* s);

/* Models */
SF_API sf_status sf_model_load(const char* path, sf_model** out);
SF_API sf_status sf_model_save(const sf_model* m, const char* path);
SF_API void sf_model_free(sf_model* m);
SF_API sf_status sf_model_dims(const sf_model* m, int* out);
SF_API sf_status sf_model_log_density(const sf_model* m, const double* x, size_t n, double* log_p);
/* force = d log p / dx; log_p may be NULL. */
SF_API sf_status sf_model_force(const sf_model* m, const double* x, size_t n, double* log_p, double* force);
/* x -> z (density direction); log_det = log|det dz/dx|. */
SF_API sf_status sf_model_inverse(const sf_model* m, const double* x, size_t n, double* z, double* log_det);
/* z -> x (sampling direction); log_det = log|det dx/dz|. */
SF_API sf_status sf_model_forward(const sf_model* m, const double* z, size_t n, double* x, double* log_det);
SF_API sf_status sf_model_sample(const sf_model* m, size_t n, uint64_t seed, double* x, double* log_p);

/* Commands. `seed` may be NULL to use the configured seed. `summary` may be
 * NULL; otherwise it receives a string to release with sf_string_free. */
SF_API sf_status sf_cmd_gen_data(const char* config_path, const char* out_csv, const uint64_t* seed, sf_string** summary);
SF_API sf_status sf_cmd_train(const char* config_path, const char* data_csv, const char* out_dir, const uint64_t* seed,
                              sf_string** summary);
/* out_json may be NULL: the metrics JSON is then returned in summary. */
SF_API sf_status sf_cmd_eval(const char* model_path, const char* data_csv, const char* out_json, int kld_samples, const uint64_t* seed,
                             sf_string** summary);
/* model_path NULL: simulate the config's toy potential. data_csv may be NULL. */
SF_API sf_status sf_cmd_mdsim(const char* config_path, const char* model_path, const char* data_csv, const char* out_csv,
                              const uint64_t* seed, sf_string** summary);
SF_API sf_status sf_cmd_bench_rootfind(const int* dims, size_t n_dims, const int* bins, size_t n_bins, int batch, int reps, double eps,
                                       uint64_t seed, int timing, const char* out_csv, sf_string** summary);
/* Exactly one of model_path / config_path non-NULL. */
SF_API sf_status sf_cmd_export_grid(const char* model_path, const char* config_path, int resolution, const char* out_csv,
                                    sf_string** summary);

#ifdef __cplusplus
}
#endif

#endif /* SMOOTHFLOW_H */
