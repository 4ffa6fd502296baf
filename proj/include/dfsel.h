/*
 * dfsel — adaptive SpGEMM dataflow selection.
 *
 * C interface to the dataflow simulators, feature extraction, dataset
 * builder, trained selectors (decision tree, DQN) and the rule heuristic.
 * All functions returning dfsel_status set a thread-local message readable
 * via dfsel_last_error() on failure. Objects returned through ** out
 * parameters are owned by the caller and released with the matching _free.
 */
#ifndef DFSEL_H
#define DFSEL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dfsel_status {
    DFSEL_OK = 0,
    DFSEL_ERR_INVALID_ARGUMENT = 1,
    DFSEL_ERR_PARSE = 2,
    DFSEL_ERR_IO = 3,
    DFSEL_ERR_DIMENSION = 4,
    DFSEL_ERR_INTERNAL = 5
} dfsel_status;

/* Message for the most recent failure on the calling thread. */
const char* dfsel_last_error(void);

typedef enum dfsel_dataflow { DFSEL_IP = 0, DFSEL_OP = 1, DFSEL_RW = 2 } dfsel_dataflow;

#define DFSEL_FEATURE_COUNT 12

/* Name of feature column i (fixed CSV order); NULL when out of range. */
const char* dfsel_feature_name(int index);

typedef struct dfsel_matrix dfsel_matrix;
typedef struct dfsel_dataset dfsel_dataset;
typedef struct dfsel_tree dfsel_tree;
typedef struct dfsel_qmodel dfsel_qmodel;

/* ---- simulators ---- */

typedef struct dfsel_sim_config {
    int num_pes;               /* default 4 */
    int64_t mem_block_rows;    /* rows of B per memory block, default 256 */
    int resident_blocks;       /* LRU window size in blocks, default 4 */
    uint64_t miss_penalty_cycles; /* default 64 */
} dfsel_sim_config;

void dfsel_sim_config_default(dfsel_sim_config* cfg);

typedef struct dfsel_sim_result {
    int dataflow;
    uint64_t latency_cycles;
    double pe_utilization;
    uint64_t total_work_cycles;
    int64_t result_nnz;
} dfsel_sim_result;

/* dataflow 0/1/2 fills out[0]; dataflow -1 runs all three into out[0..2]. */
dfsel_status dfsel_simulate(const dfsel_matrix* a, const dfsel_matrix* b, int dataflow,
                            const dfsel_sim_config* cfg, dfsel_sim_result* out);

/* ---- matrices ---- */

dfsel_status dfsel_matrix_read_mtx(const char* path, dfsel_matrix** out);
dfsel_status dfsel_matrix_parse_mtx(const char* text, dfsel_matrix** out);
dfsel_status dfsel_matrix_write_mtx(const dfsel_matrix* m, const char* path);
/* pattern: "uniform" | "banded" | "clustered" */
dfsel_status dfsel_matrix_random(int64_t rows, int64_t cols, double density, const char* pattern,
                                 uint64_t seed, dfsel_matrix** out);
dfsel_status dfsel_trim_to_fit(const dfsel_matrix* a, const dfsel_matrix* b, dfsel_matrix** a_out,
                               dfsel_matrix** b_out);
int64_t dfsel_matrix_rows(const dfsel_matrix* m);
int64_t dfsel_matrix_cols(const dfsel_matrix* m);
int64_t dfsel_matrix_nnz(const dfsel_matrix* m);
void dfsel_matrix_free(dfsel_matrix* m);

/* ---- features ---- */

dfsel_status dfsel_extract_features(const dfsel_matrix* a, const dfsel_matrix* b,
                                    const dfsel_sim_config* cfg,
                                    double out[DFSEL_FEATURE_COUNT]);

/* Applies the min-max scaler stored in a ".scaler" sidecar file. */
dfsel_status dfsel_scaler_apply_file(const char* scaler_path,
                                     const double raw[DFSEL_FEATURE_COUNT],
                                     double out[DFSEL_FEATURE_COUNT]);

/* ---- datasets ---- */

/* Manifest: "pair_id path_a path_b" lines; '#' comments. Simulates every
 * compatible block pair. Saving a dataset writes "<path>.scaler" beside it;
 * loading picks the sidecar up when present. */
dfsel_status dfsel_dataset_build(const char* manifest_path, const dfsel_sim_config* cfg,
                                 int64_t block_rows, int64_t block_cols, int jobs,
                                 dfsel_dataset** out);
dfsel_status dfsel_dataset_load_csv(const char* path, dfsel_dataset** out);
dfsel_status dfsel_dataset_save_csv(const dfsel_dataset* d, const char* path);
/* Grouped split by pair id; the scaler is refitted on the train side. */
dfsel_status dfsel_dataset_split(const dfsel_dataset* d, double train_fraction, uint64_t seed,
                                 dfsel_dataset** train_out, dfsel_dataset** eval_out);
int64_t dfsel_dataset_rows(const dfsel_dataset* d);
void dfsel_dataset_free(dfsel_dataset* d);

/* ---- decision tree ---- */

typedef struct dfsel_tree_params {
    int max_depth;          /* default 9 */
    int min_samples_leaf;   /* default 1 */
    int use_all_features;   /* 0 (default): the five most influential features */
    int auto_class_weights; /* 1 (default): inverse-frequency weights */
    double class_weights[3];
} dfsel_tree_params;

void dfsel_tree_params_default(dfsel_tree_params* params);

dfsel_status dfsel_tree_train(const dfsel_dataset* train, const dfsel_tree_params* params,
                              dfsel_tree** out);
dfsel_status dfsel_tree_save(const dfsel_tree* t, const char* path);
dfsel_status dfsel_tree_load(const char* path, dfsel_tree** out);
/* raw (unscaled) features; the model applies its stored scaler */
dfsel_status dfsel_tree_predict(const dfsel_tree* t, const double raw[DFSEL_FEATURE_COUNT],
                                int* label_out);
dfsel_status dfsel_tree_accuracy(const dfsel_tree* t, const dfsel_dataset* d, double* out);
dfsel_status dfsel_tree_importance(const dfsel_tree* t, const dfsel_dataset* train,
                                   double out[DFSEL_FEATURE_COUNT]);
dfsel_status dfsel_tree_export_rules(const dfsel_tree* t, int depth_limit, const char* path);
void dfsel_tree_free(dfsel_tree* t);

/* Grouped, label-stratified k-fold cross-validation. fold_acc may be NULL;
 * otherwise it receives min(k, max_folds) per-fold accuracies. */
dfsel_status dfsel_cross_validate(const dfsel_dataset* d, int k,
                                  const dfsel_tree_params* params, uint64_t seed,
                                  double* fold_acc, int max_folds, double* mean_out);

/* ---- deep Q-network ---- */

typedef struct dfsel_dqn_hyper {
    double epsilon_start;  /* 1.0 */
    double epsilon_decay;  /* 0.995 per episode */
    double epsilon_min;    /* 0.05 */
    int64_t replay_capacity; /* 10000 */
    int batch_size;        /* 64 */
    double learning_rate;  /* 1e-3 */
    double reward_weight;  /* utilization term, 0.1 */
    int64_t episodes;      /* 20000 */
    int hidden_dim;        /* 1024 */
    uint64_t seed;
} dfsel_dqn_hyper;

void dfsel_dqn_hyper_default(dfsel_dqn_hyper* hyper);

dfsel_status dfsel_qmodel_train(const dfsel_dataset* train, const dfsel_dqn_hyper* hyper,
                                dfsel_qmodel** out);
dfsel_status dfsel_qmodel_save(const dfsel_qmodel* m, const char* path);
dfsel_status dfsel_qmodel_load(const char* path, dfsel_qmodel** out);
dfsel_status dfsel_qmodel_predict(const dfsel_qmodel* m, const double raw[DFSEL_FEATURE_COUNT],
                                  int* label_out);
dfsel_status dfsel_qmodel_accuracy(const dfsel_qmodel* m, const dfsel_dataset* d, double* out);
int64_t dfsel_qmodel_param_count(const dfsel_qmodel* m);
void dfsel_qmodel_free(dfsel_qmodel* m);

/* ---- heuristic ---- */

/* Scaled features in, label code out (never fails). */
int dfsel_heuristic_predict(const double scaled[DFSEL_FEATURE_COUNT]);
dfsel_status dfsel_heuristic_write_rules(const char* path);

/* ---- evaluation ---- */

typedef struct dfsel_metrics {
    double accuracy;
    double speedup_vs[4];        /* vs IP, OP, RW, heuristic (totals ratio) */
    double mean_pair_speedup[4]; /* arithmetic mean of per-pair ratios */
    uint64_t total_cycles;
} dfsel_metrics;

/* selector: "dt" | "rl" (model_path required) | "heuristic" | "oracle" |
 * "ip" | "op" | "rw". report_csv_path may be NULL to skip the per-pair file. */
dfsel_status dfsel_evaluate(const char* selector, const char* model_path,
                            const dfsel_dataset* eval, const char* report_csv_path,
                            dfsel_metrics* out);

dfsel_status dfsel_storage_report(const char* const* paths, int n, const char* out_csv);
dfsel_status dfsel_sweep_report(const dfsel_dataset* d, const char* out_csv);

#ifdef __cplusplus
}
#endif

#endif /* DFSEL_H */
