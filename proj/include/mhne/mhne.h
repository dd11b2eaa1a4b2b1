/*
 * C interface to the Hopfield node-embedding library.
 *
 * All objects are opaque handles created by a *_load / *_create style call
 * and released with the matching *_free. Every fallible call returns an
 * mhne_status; on failure mhne_last_error() describes the problem for the
 * calling thread until the next failing call.
 */
#ifndef MHNE_MHNE_H
#define MHNE_MHNE_H

#include <stddef.h>
#include <stdint.h>

#if defined(MHNE_BUILDING_LIBRARY)
#define MHNE_API __attribute__((visibility("default")))
#else
#define MHNE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mhne_status {
  MHNE_OK = 0,
  MHNE_ERR_INVALID_ARGUMENT = 1,
  MHNE_ERR_NOT_FOUND = 2,
  MHNE_ERR_FORMAT = 3,
  MHNE_ERR_NUMERIC = 4,
  MHNE_ERR_INTERNAL = 5
} mhne_status;

typedef struct mhne_graph mhne_graph;
typedef struct mhne_labels mhne_labels;
typedef struct mhne_pairs mhne_pairs;
typedef struct mhne_model mhne_model;
typedef struct mhne_embedding mhne_embedding;
typedef struct mhne_report mhne_report;

MHNE_API const char* mhne_last_error(void);
MHNE_API const char* mhne_version(void);

/* Warnings go to stderr by default. Pass NULL to silence them. */
typedef void (*mhne_log_fn)(int is_warning, const char* message, void* user);
MHNE_API void mhne_set_log_callback(mhne_log_fn fn, void* user);
MHNE_API void mhne_set_default_logging(void);

/* ---- graph ---------------------------------------------------------- */

MHNE_API mhne_status mhne_graph_load(const char* path, int directed_input, mhne_graph** out);
MHNE_API mhne_status mhne_graph_sbm(const size_t* block_sizes, size_t blocks, double p_in,
                                    double p_out, uint64_t seed, mhne_graph** graph_out,
                                    mhne_labels** labels_out);
MHNE_API void mhne_graph_free(mhne_graph* g);
MHNE_API size_t mhne_graph_node_count(const mhne_graph* g);
MHNE_API size_t mhne_graph_edge_count(const mhne_graph* g);
/* Dense index of an original node id. */
MHNE_API mhne_status mhne_graph_dense_index(const mhne_graph* g, int64_t original_id,
                                            uint32_t* out);
MHNE_API mhne_status mhne_graph_save_edges(const mhne_graph* g, const char* path);
MHNE_API mhne_status mhne_graph_save_id_map(const mhne_graph* g, const char* path);
MHNE_API mhne_status mhne_jaccard(const mhne_graph* g, uint32_t u, uint32_t v, double* out);

MHNE_API mhne_status mhne_labels_load(const mhne_graph* g, const char* path, mhne_labels** out);
MHNE_API mhne_status mhne_labels_save(const mhne_graph* g, const mhne_labels* labels,
                                      const char* path);
MHNE_API void mhne_labels_free(mhne_labels* labels);
MHNE_API size_t mhne_labels_count(const mhne_labels* labels);

/* Samples n_pos edges and n_neg non-edges. With holdout set, *train_graph
 * receives the graph minus the sampled positives, else a copy of g.
 * train_graph may be NULL. */
MHNE_API mhne_status mhne_pairs_sample(const mhne_graph* g, size_t n_pos, size_t n_neg,
                                       uint64_t seed, int holdout, mhne_pairs** out,
                                       mhne_graph** train_graph);
/* Copy of g with the sample's positive pairs removed. */
MHNE_API mhne_status mhne_graph_without_positives(const mhne_graph* g, const mhne_pairs* pairs,
                                                  mhne_graph** out);
MHNE_API mhne_status mhne_pairs_load(const mhne_graph* g, const char* path, mhne_pairs** out);
MHNE_API mhne_status mhne_pairs_save(const mhne_graph* g, const mhne_pairs* pairs,
                                     const char* path);
MHNE_API void mhne_pairs_free(mhne_pairs* pairs);
MHNE_API size_t mhne_pairs_count(const mhne_pairs* pairs);

/* ---- training ------------------------------------------------------- */

typedef struct mhne_train_config {
  int memories;  /* K */
  int steps;     /* T */
  double alpha;
  double beta1;
  double beta2;
  double learning_rate;
  double weight_decay;
  int epochs;
  int batch_size;
  uint64_t seed;
  int hops;
  int threads; /* 0: HE_THREADS or hardware concurrency */
} mhne_train_config;

MHNE_API void mhne_train_config_default(mhne_train_config* cfg);
MHNE_API mhne_status mhne_train_config_validate(const mhne_train_config* cfg);

/* Return nonzero to continue, zero to stop after this epoch. */
typedef int (*mhne_epoch_fn)(int epoch, double mean_loss, double wall_ms,
                             const mhne_model* current, void* user);

/* Trains on g. The per-epoch loss history is written as CSV to loss_csv_path
 * when it is not NULL. */
MHNE_API mhne_status mhne_train(const mhne_graph* g, const mhne_train_config* cfg,
                                mhne_epoch_fn on_epoch, void* user,
                                const char* loss_csv_path, mhne_model** out);

MHNE_API mhne_status mhne_model_load(const char* path, mhne_model** out);
MHNE_API mhne_status mhne_model_save(const mhne_model* model, const char* path);
MHNE_API void mhne_model_free(mhne_model* model);
MHNE_API void mhne_model_shape(const mhne_model* model, size_t* memories, size_t* nodes);

/* Energy along a T-step retrieval for one node's context: writes steps+1
 * values per form into the caller's buffers (either may be NULL). */
MHNE_API mhne_status mhne_energy_trace(const mhne_model* model, const mhne_graph* g,
                                       uint32_t node, int steps, int hops,
                                       double* beta_weighted, double* verbatim);

typedef struct mhne_gradcheck_config {
  int trials;
  int nodes;
  int memories;
  int batch;
  double step;
  double tolerance;
  uint64_t seed;
  int inject_fault; /* test hook: corrupts the analytic gradient */
} mhne_gradcheck_config;

typedef struct mhne_gradcheck_result {
  int trials;
  int failures;
  double max_relative_error;
  int passed;
} mhne_gradcheck_result;

MHNE_API void mhne_gradcheck_config_default(mhne_gradcheck_config* cfg);
MHNE_API mhne_status mhne_gradcheck(const mhne_gradcheck_config* cfg,
                                    mhne_gradcheck_result* result);

/* ---- embeddings ----------------------------------------------------- */

MHNE_API mhne_status mhne_embed(const mhne_model* model, const mhne_graph* g, int hops,
                                mhne_embedding** out);
MHNE_API mhne_status mhne_embedding_load(const char* path, mhne_embedding** out);
MHNE_API mhne_status mhne_embedding_save(const mhne_embedding* e, const char* path);
MHNE_API void mhne_embedding_free(mhne_embedding* e);
MHNE_API void mhne_embedding_shape(const mhne_embedding* e, size_t* nodes, size_t* dimension);
/* Copies row `node` (dense index) into out[0..dimension). */
MHNE_API mhne_status mhne_embedding_row(const mhne_embedding* e, size_t node, double* out);

/* ---- evaluation ----------------------------------------------------- */

typedef struct mhne_eval_config {
  int runs;
  double train_fraction;
  double l2;
  int max_iter;
  uint64_t seed;
  int classify;
  int link;
} mhne_eval_config;

MHNE_API void mhne_eval_config_default(mhne_eval_config* cfg);

/* labels and pairs may be NULL to skip that task. Embedding rows are
 * matched to g by original node id. */
MHNE_API mhne_status mhne_evaluate(const mhne_embedding* e, const mhne_graph* g,
                                   const mhne_labels* labels, const mhne_pairs* pairs,
                                   const mhne_eval_config* cfg, mhne_report** out);
MHNE_API void mhne_report_free(mhne_report* r);

typedef struct mhne_report_summary {
  int has_classification;
  double micro_f1_mean, micro_f1_std;
  double macro_f1_mean, macro_f1_std;
  int runs;
  int has_link;
  double auc;
  double jaccard_auc;
  size_t link_pairs;
} mhne_report_summary;

MHNE_API void mhne_report_get(const mhne_report* r, mhne_report_summary* out);
/* Writes <prefix>.txt, <prefix>.csv and, with link results, <prefix>_roc.csv,
 * <prefix>_jaccard_roc.csv and <prefix>_roc.svg. */
MHNE_API mhne_status mhne_report_write(const mhne_report* r, const char* prefix);

#ifdef __cplusplus
}
#endif

#endif /* MHNE_MHNE_H */
