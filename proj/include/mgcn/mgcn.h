/* C interface of the manifold GCN library.
 *
 * Objects are opaque handles created and destroyed through this API. Every
 * fallible call returns an mgcn_status; on failure mgcn_last_error() gives a
 * message for the calling thread. Strings returned through char** outputs
 * are owned by the caller and released with mgcn_string_free.
 */
#ifndef MGCN_H
#define MGCN_H

#include <stddef.h>
#include <stdint.h>

#if defined(MGCN_BUILDING_LIBRARY)
#define MGCN_API __attribute__((visibility("default")))
#else
#define MGCN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mgcn_status {
  MGCN_OK = 0,
  /* bad argument or hyperparameter */
  MGCN_ERR_CONTRACT = 1,
  /* a file does not match its schema; the message names the JSON path */
  MGCN_ERR_SCHEMA = 2,
  MGCN_ERR_IO = 3,
  /* a logarithm was requested on the cut locus */
  MGCN_ERR_CUT_LOCUS = 4,
  /* an iterative computation did not converge */
  MGCN_ERR_NONCONVERGENCE = 5,
  MGCN_ERR_INTERNAL = 6
} mgcn_status;

typedef struct mgcn_graph mgcn_graph;
typedef struct mgcn_dataset mgcn_dataset;
typedef struct mgcn_model mgcn_model;

MGCN_API const char* mgcn_version(void);
MGCN_API const char* mgcn_last_error(void);
MGCN_API const char* mgcn_status_name(mgcn_status status);
MGCN_API void mgcn_string_free(char* s);

/* ---- graphs (schema v1 JSON) ---- */

MGCN_API mgcn_status mgcn_graph_read(const char* path, mgcn_graph** out);
MGCN_API mgcn_status mgcn_graph_from_json(const char* text, mgcn_graph** out);
MGCN_API mgcn_status mgcn_graph_write(const mgcn_graph* g, const char* path);
MGCN_API mgcn_status mgcn_graph_to_json(const mgcn_graph* g, char** out);
MGCN_API mgcn_status mgcn_graph_info(const mgcn_graph* g, int* nodes, int* edges, int* channels,
                                     int* ambient_dim);
MGCN_API void mgcn_graph_free(mgcn_graph* g);

/* Explicit diffusion of one channel up to time T with step dt; writes one
 * JSON line per kept snapshot ({"t":..,"coords":[..]}) to `path`. */
MGCN_API mgcn_status mgcn_diffuse(const mgcn_graph* g, int channel, double T, double dt,
                                  int record_every, const char* path);

/* ---- datasets ---- */

/* embedding: "onehot-lorentz", "degree-lorentz" or "onehot-spd". */
MGCN_API mgcn_status mgcn_dataset_synthetic(int per_class, int nodes, const char* embedding,
                                            uint64_t seed, int dim, mgcn_dataset** out);
MGCN_API mgcn_status mgcn_dataset_mesh(int per_class, int subdivisions, uint64_t seed,
                                       mgcn_dataset** out);
/* Writes one graph file per sample and `dir`/manifest.json. */
MGCN_API mgcn_status mgcn_dataset_write(const mgcn_dataset* d, const char* dir,
                                        const char* description);
MGCN_API mgcn_status mgcn_dataset_read(const char* manifest_path, mgcn_dataset** out);
MGCN_API mgcn_status mgcn_dataset_size(const mgcn_dataset* d, int* size);
/* {"samples", "manifold":{"kind","dim"}, "channels", "classes", "covariates",
 *  "max_nodes", "max_degree"} */
MGCN_API mgcn_status mgcn_dataset_summary(const mgcn_dataset* d, char** out);
MGCN_API void mgcn_dataset_free(mgcn_dataset* d);

/* ---- models ---- */

/* Descriptor JSON as produced by mgcn_model_descriptor, e.g.
 * {"manifold":{"kind":"lorentz","dim":30},"widths":[5,8,8],"hidden":3,"classes":3}.
 * Missing fields take their defaults. */
MGCN_API mgcn_status mgcn_model_create(const char* descriptor_json, uint64_t seed, mgcn_model** out);
MGCN_API mgcn_status mgcn_model_load(const char* checkpoint_path, mgcn_model** out);
MGCN_API mgcn_status mgcn_model_save(const mgcn_model* m, const char* checkpoint_path);
MGCN_API mgcn_status mgcn_model_descriptor(const mgcn_model* m, char** out);
MGCN_API mgcn_status mgcn_model_param_count(const mgcn_model* m, int64_t* count);
/* Training seed, selected epoch and its validation score (zeros for fresh models). */
MGCN_API mgcn_status mgcn_model_training_info(const mgcn_model* m, uint64_t* seed, int* epoch,
                                              double* validation_score);
/* Log-probabilities of one graph; `capacity` must be at least the class count. */
MGCN_API mgcn_status mgcn_model_forward(const mgcn_model* m, const mgcn_graph* g, double* log_probs,
                                        int capacity);
MGCN_API void mgcn_model_free(mgcn_model* m);

/* {"total":n,"breakdown":[{"component":..,"count":..},...]} */
MGCN_API mgcn_status mgcn_count_params(const char* descriptor_json, char** out);

/* ---- training and evaluation ---- */

typedef struct mgcn_train_options {
  int epochs;          /* 60 */
  int batch_size;      /* 3 */
  double lr;           /* 1e-3 */
  uint64_t seed;       /* batch order and split */
  int ratios[3];       /* train:validation:test, 4:1:1 */
  int first_best;      /* 0: last epoch among the best validation scores */
  int finite_differences; /* 0: reverse-mode gradients */
  double averaging;    /* running-average step for selection; 0 disables */
  const char* history_csv_path; /* optional */
  int verbose;         /* print one line per epoch to stderr */
} mgcn_train_options;

MGCN_API void mgcn_train_options_default(mgcn_train_options* options);

/* Trains `model` in place; on return it holds the selected parameters. The
 * optional report is JSON with the split, the history and test metrics. */
MGCN_API mgcn_status mgcn_train(mgcn_model* model, const mgcn_dataset* data,
                                const mgcn_train_options* options, char** report);

/* part: "all", "train", "validation" or "test" (the latter three use the
 * stratified split given by seed and ratios). Writes metrics JSON. */
MGCN_API mgcn_status mgcn_evaluate(const mgcn_model* model, const mgcn_dataset* data,
                                   const char* part, uint64_t seed, const int ratios[3],
                                   char** report);

/* ---- verification ---- */

/* suite: a suite name or "all". `passed` receives 1 if every suite passed. */
MGCN_API mgcn_status mgcn_verify(const char* suite, uint64_t seed, int learning_seeds,
                                 int learning_epochs, int verbose, char** report, int* passed);
/* Comma-separated suite names in criterion order. */
MGCN_API const char* mgcn_verify_suites(void);

#ifdef __cplusplus
}
#endif

#endif /* MGCN_H */
