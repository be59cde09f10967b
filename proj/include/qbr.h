#ifndef QBR_H
#define QBR_H

/*
 * C interface to the quantile-adjusted inference library.
 *
 * Every fallible call returns a qbr_status; on failure, qbr_last_error()
 * gives a human-readable description (thread local, valid until the next
 * failing call on the same thread). Model handles are opaque and must be
 * released with qbr_model_free. Handles are not thread safe; use one handle
 * per thread.
 */

#include <stddef.h>
#include <stdint.h>

#ifndef QBR_API
#if defined(__GNUC__)
#define QBR_API __attribute__((visibility("default")))
#else
#define QBR_API
#endif
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qbr_status {
  QBR_OK = 0,
  QBR_ERROR = 1,             /* unclassified failure */
  QBR_DOMAIN_ERROR = 2,      /* evaluation outside the model's domain */
  QBR_ACCURACY_ERROR = 3,    /* requested accuracy not attainable */
  QBR_CONVERGENCE_ERROR = 4, /* iteration limit reached */
  QBR_BOUNDARY_ERROR = 5,    /* estimate diverged to a parameter bound */
  QBR_NO_ROOT_ERROR = 6,     /* quantile equation has no root in range */
  QBR_SINGULAR_ERROR = 7,    /* singular or degenerate information */
  QBR_CONFIG_ERROR = 8,      /* invalid specification or options */
  QBR_IO_ERROR = 9           /* file reading or parsing failure */
} qbr_status;

typedef enum qbr_method {
  QBR_METHOD_ML = 0,   /* Wald interval at the maximum likelihood estimate */
  QBR_METHOD_MBR = 1,  /* Wald interval at the median-adjusted estimate */
  QBR_METHOD_QBR = 2,  /* quantile-root interval (third-order accurate) */
  QBR_METHOD_EXACT = 3 /* family-specific exact pivot */
} qbr_method;

typedef enum qbr_kind {
  QBR_KIND_TWO_SIDED = 0,
  QBR_KIND_LOWER = 1,
  QBR_KIND_UPPER = 2
} qbr_kind;

typedef struct qbr_model qbr_model;

/* Message for the most recent failure on the calling thread. */
QBR_API const char* qbr_last_error(void);

/*
 * Constructors return NULL on failure (see qbr_last_error). y has n
 * entries. Design matrices are row major: x is n-by-q, z is n-by-m.
 * mean_names/disp_names may be NULL for positional defaults (beta0...,
 * gamma0...).
 */
QBR_API qbr_model* qbr_model_exponential(const double* y, int n);
QBR_API qbr_model* qbr_model_normal_variance(const double* y, int n);
QBR_API qbr_model* qbr_model_skew_normal(const double* y, int n);
QBR_API qbr_model* qbr_model_gamma(const double* y, int n);
QBR_API qbr_model* qbr_model_beta_regression(const double* y, int n, const double* x,
                                     int q, const double* z, int m,
                                     const char* const* mean_names,
                                     const char* const* disp_names);
/*
 * Symmetric location-scale regression with identity mean link and log
 * dispersion link. family is one of "normal", "student_t", "logistic_i",
 * "logistic_ii", "power_exp"; nu is the shape index for student_t and
 * power_exp and is ignored otherwise.
 */
QBR_API qbr_model* qbr_model_symmetric_regression(const char* family, double nu,
                                          const double* y, int n,
                                          const double* x, int q,
                                          const double* z, int m,
                                          const char* const* mean_names,
                                          const char* const* disp_names);

QBR_API void qbr_model_free(qbr_model* model);

/* Number of parameters, or -1 for NULL. */
QBR_API int qbr_model_dim(const qbr_model* model);

/* Copies parameter psi's name into out (NUL terminated, truncated at cap). */
QBR_API qbr_status qbr_parameter_name(const qbr_model* model, int psi, char* out,
                              size_t cap);

/*
 * Maximum likelihood and median-adjusted estimates. theta receives
 * qbr_model_dim values. Results are computed once and cached inside the
 * handle.
 */
QBR_API qbr_status qbr_fit(qbr_model* model, double* theta);
QBR_API qbr_status qbr_mbr(qbr_model* model, double* theta);

typedef struct qbr_interval {
  double lo;
  double hi;
  int lo_open; /* endpoint sits on a parameter-space bound */
  int hi_open;
} qbr_interval;

/* Confidence interval for parameter psi at the given level. */
QBR_API qbr_status qbr_interval_compute(qbr_model* model, int psi, qbr_method method,
                                double level, qbr_kind kind,
                                qbr_interval* out);

/* Root of the alpha-quantile adjusted profile score for parameter psi. */
QBR_API qbr_status qbr_quantile_root(qbr_model* model, int psi, double alpha,
                             double* root);

/* Exact pivot interval; family is "exponential" or "normal_variance". */
QBR_API qbr_status qbr_exact_interval(const char* family, const double* y, int n,
                              double level, qbr_kind kind, qbr_interval* out);

/*
 * Coverage study. scenario is one of "exp5", "gamma15", "betareg25",
 * "readingskills"; methods, levels, and kinds are comma-separated lists
 * (e.g. "ml,mbr,qbr", "0.9,0.95,0.99", "two-sided,upper"). data_dir may be
 * NULL to fall back to $QBR_DATA_DIR and then ./data. On success *csv owns
 * a malloc'd CSV document; release it with qbr_string_free.
 */
QBR_API qbr_status qbr_simulate_csv(const char* scenario, const char* methods,
                            const char* levels, const char* kinds,
                            int replicates, uint64_t seed, int workers,
                            const char* data_dir, char** csv);

QBR_API void qbr_string_free(char* s);

/* Standard normal quantile, NaN outside (0, 1). */
QBR_API double qbr_normal_quantile(double p);

#ifdef __cplusplus
}
#endif

#endif /* QBR_H */
