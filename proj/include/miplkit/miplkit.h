#ifndef MIPLKIT_H
#define MIPLKIT_H

/* C interface to the miplkit shared library.
 *
 * Conventions:
 *   - every function returns mk_status; MK_OK (0) means success
 *   - on failure, mk_last_error() returns a message for the calling thread
 *   - objects come back through out-pointers as opaque handles that the
 *     caller frees with the matching mk_*_free
 *   - config structs must be initialized with their mk_*_init before use
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MK_API __declspec(dllexport)
#else
#define MK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mk_status {
  MK_OK = 0,
  MK_ERR_INVALID_ARGUMENT = 1, /* bad config value, shape mismatch */
  MK_ERR_IO = 2,               /* file cannot be opened/read/written */
  MK_ERR_PARSE = 3,            /* file opened but malformed */
  MK_ERR_NUMERIC = 4,          /* non-finite values, collapsed distributions */
  MK_ERR_INTERNAL = 5
} mk_status;

MK_API const char* mk_version(void);

/* Message for the most recent failure on this thread; never NULL. */
MK_API const char* mk_last_error(void);

typedef struct mk_dataset mk_dataset;
typedef struct mk_model mk_model;
typedef struct mk_history mk_history;

/* ------------------------------------------------------------------ */
/* datasets                                                            */

typedef struct mk_synth_config {
  int num_classes;
  int num_distractors;
  int false_positives; /* r: candidate labels beyond the truth */
  int bags_per_class;
  int min_instances;
  int max_instances;
  double min_positive_fraction;
  double max_positive_fraction;
  double cluster_separation;
  int dim; /* 0 = num_classes + num_distractors */
  uint64_t seed;
} mk_synth_config;

MK_API void mk_synth_config_init(mk_synth_config* cfg);

MK_API mk_status mk_dataset_generate(const mk_synth_config* cfg,
                                     mk_dataset** out);
MK_API mk_status mk_dataset_load(const char* path, mk_dataset** out);
MK_API mk_status mk_dataset_save(const mk_dataset* ds, const char* path);
MK_API void mk_dataset_free(mk_dataset* ds);

MK_API mk_status mk_dataset_num_bags(const mk_dataset* ds, size_t* out);
MK_API mk_status mk_dataset_num_classes(const mk_dataset* ds, int* out);
MK_API mk_status mk_dataset_dim(const mk_dataset* ds, int* out);
MK_API mk_status mk_dataset_avg_instances(const mk_dataset* ds, double* out);
MK_API mk_status mk_dataset_avg_candidates(const mk_dataset* ds, double* out);

MK_API mk_status mk_dataset_split(const mk_dataset* ds, double train_ratio,
                                  uint64_t seed, mk_dataset** train,
                                  mk_dataset** test);

/* ------------------------------------------------------------------ */
/* image corpora                                                       */

typedef struct mk_baggen_config {
  const char* generator; /* row | sbn | kmeansseg | sift */
  int sbn_blob;
  int sbn_stride; /* 0 = blob size */
  int kmeans_k;
  int kmeans_iters;
  int sift_grid_x;
  int sift_grid_y;
  int sift_patch;
  uint64_t seed;
} mk_baggen_config;

MK_API void mk_baggen_config_init(mk_baggen_config* cfg);

/* Called once per skipped file while the corpus keeps processing. */
typedef void (*mk_file_error_fn)(const char* file, const char* message,
                                 void* user_data);

/* One bag per label-file line ("<filename> <class-int>", paths relative to
 * dir). num_classes 0 infers max label + 1; candidate_seed drives the
 * candidate corruption; threads 0 = serial. May produce an empty dataset if
 * every file fails -- the caller decides whether that is an error. */
MK_API mk_status mk_dataset_from_images(const char* dir,
                                        const mk_baggen_config* cfg,
                                        const char* label_file,
                                        int false_positives, int num_classes,
                                        uint64_t candidate_seed, int threads,
                                        mk_file_error_fn on_error,
                                        void* user_data, mk_dataset** out);

/* ------------------------------------------------------------------ */
/* training                                                            */

typedef struct mk_train_config {
  double lr_max;
  double lr_min;
  double momentum;
  double weight_decay;
  int epochs;
  int batch_size;
  double attention_loss_weight;
  uint64_t seed;
  const char* variant;   /* full | no_att | pro | avg | pll_mean | pll_maxmin */
  const char* extractor; /* id | mlp */
  int hidden_dim;        /* mlp feature dim */
} mk_train_config;

MK_API void mk_train_config_init(mk_train_config* cfg);

typedef struct mk_epoch_stats {
  int epoch; /* 1-based */
  double lr;
  double loss_total;
  double loss_m;
  double loss_a;
  double train_acc;
  double test_acc; /* valid only when has_test_acc != 0 */
  int has_test_acc;
} mk_epoch_stats;

/* test may be NULL. weights_csv, when non-NULL, receives the per-epoch
 * candidate weight table as "epoch,bag_id,class,weight" rows (epoch 0 is the
 * initialization). Either out pointer may be NULL if unwanted. */
MK_API mk_status mk_train(const mk_dataset* train, const mk_dataset* test,
                          const mk_train_config* cfg, const char* weights_csv,
                          mk_model** out_model, mk_history** out_history);

MK_API mk_status mk_history_size(const mk_history* h, size_t* out);
MK_API mk_status mk_history_get(const mk_history* h, size_t index,
                                mk_epoch_stats* out);
MK_API void mk_history_free(mk_history* h);

MK_API mk_status mk_model_save(const mk_model* m, const char* path);
MK_API mk_status mk_model_load(const char* path, mk_model** out);
MK_API void mk_model_free(mk_model* m);

MK_API mk_status mk_evaluate(const mk_model* m, const mk_dataset* ds,
                             double* accuracy);
MK_API mk_status mk_predict(const mk_model* m, const mk_dataset* ds,
                            size_t bag_index, int* label);

/* counts must hold `bins` entries; scores of exactly 1 land in the last bin */
MK_API mk_status mk_attention_histogram(const mk_model* m, const mk_dataset* ds,
                                        int bins, uint64_t* counts);

/* n_runs random 7:3-style splits (train_ratio), each trained from a seed
 * pre-drawn off cfg->seed; byte-identical results for any thread count. */
MK_API mk_status mk_run_experiment(const mk_dataset* ds,
                                   const mk_train_config* cfg, int n_runs,
                                   double train_ratio, int threads,
                                   double* mean_acc, double* std_acc);

/* ------------------------------------------------------------------ */
/* gradient check                                                      */

#define MK_GRADCHECK_MAX_BLOCKS 8

typedef struct mk_gradcheck_block {
  char name[32];
  double max_rel_err;
} mk_gradcheck_block;

typedef struct mk_gradcheck_report {
  mk_gradcheck_block blocks[MK_GRADCHECK_MAX_BLOCKS];
  int num_blocks;
  double tolerance;
  int configs_run;
  int passed;
} mk_gradcheck_report;

/* inject_fault != 0 corrupts one analytic gradient per config (the harness's
 * negative control); the report must then fail. */
MK_API mk_status mk_gradcheck(uint64_t seed, int num_configs, int inject_fault,
                              mk_gradcheck_report* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MIPLKIT_H */
