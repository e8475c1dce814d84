/*
 * Copyright 2026 The Fedsniff Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * fedsniff -- public C API of the federated-learning label-composition
 * inference toolkit.
 *
 * The library simulates FedAvg-style federated training (clients train
 * locally, the server only ever sees the averaged parameter update) and
 * implements three passive attacks that read nothing but consecutive global
 * models: Class Sniffing (is label L present in this round's training data?),
 * Quantity Inference (how many selected clients hold label L?) and Whole
 * Determination (which labels received similar amounts of training data
 * overall?). A top-magnitude update-compression defense is built into the
 * simulator.
 *
 * Conventions:
 *   - every function returns an fsn_status; FSN_OK (0) means success,
 *   - on failure, fsn_last_error() describes the problem (thread-local),
 *   - objects are opaque handles created and released by this library,
 *   - all experiments are deterministic functions of their seed.
 */

#ifndef FEDSNIFF_H
#define FEDSNIFF_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fsn_status {
  FSN_OK = 0,
  FSN_ERROR = 1,         /* unexpected failure */
  FSN_ERR_CONFIG = 2,    /* bad config file, key or option value */
  FSN_ERR_DATA = 3,      /* missing or malformed input data */
  FSN_ERR_NUMERIC = 4,   /* non-finite values during training */
  FSN_ERR_SHAPE = 5,     /* dimension mismatch */
  FSN_ERR_USAGE = 6      /* precondition violation */
} fsn_status;

const char* fsn_version(void);

/* Thread-local message for the most recent failure in this thread. */
const char* fsn_last_error(void);

/* ---- option sets ---------------------------------------------------------
 * String key/value pairs used both as config-file overrides (keys identical
 * to the config file) and as attack/report options:
 *   margin, th_r, abort_k  -- attack thresholds (numbers)
 *   linkage                -- single | complete | average
 *   cut                    -- clustering cut distance, or "auto"
 *   stage                  -- middle | late | both (whole attack)
 *   metric                 -- abs | rel (quantity success bound)
 *   threads                -- worker threads for local training
 */
typedef struct fsn_options fsn_options;

fsn_options* fsn_options_new(void);
void fsn_options_free(fsn_options* opts);
fsn_status fsn_options_set(fsn_options* opts, const char* key, const char* value);

/* ---- experiment drivers (the CLI surface) -------------------------------- */

/* Simulates the configured number of rounds and writes a run directory:
 * manifest.txt, models/round_*.fsnn, round_log.csv, truth.csv,
 * aux_indices.csv. `overrides` may carry config keys and "threads"; NULL is
 * fine. Re-running with the same seed produces byte-identical files. */
fsn_status fsn_simulate(const char* config_path, const char* out_dir, const fsn_options* opts);

/* Replays an attack against a stored run directory. kind is "sniff",
 * "quantity" or "whole"; writes <kind>_report.csv into the run directory. */
fsn_status fsn_attack(const char* run_dir, const char* kind, const fsn_options* opts);

/* Re-runs the experiment per value of one hyper-parameter axis (batch_size,
 * local_epochs, selection_fraction, n_participants, compression_rate) and
 * writes one summary CSV row per value. values is a comma-separated list. */
fsn_status fsn_sweep(const char* config_path, const char* axis, const char* values,
                     const char* out_csv, const fsn_options* opts);

/* Aggregates the stored reports of a run into report_summary.csv and returns
 * the aligned text table (owned by the library until the next call in the
 * same thread). */
fsn_status fsn_report(const char* run_dir, const fsn_options* opts, const char** text_out);

/* ---- datasets ------------------------------------------------------------ */

typedef struct fsn_dataset fsn_dataset;

/* k Gaussian clusters on scaled one-hot corners, per_class samples each. */
fsn_status fsn_dataset_synthetic(int32_t classes, int32_t dim, int32_t per_class, double spread,
                                 uint64_t seed, fsn_dataset** out);

/* IDX image/label file pair as distributed upstream. */
fsn_status fsn_dataset_mnist(const char* images_path, const char* labels_path, fsn_dataset** out);

void fsn_dataset_free(fsn_dataset* ds);
int32_t fsn_dataset_size(const fsn_dataset* ds);
int32_t fsn_dataset_classes(const fsn_dataset* ds);
int32_t fsn_dataset_feature_dim(const fsn_dataset* ds);

/* ---- networks ------------------------------------------------------------ */

typedef struct fsn_network fsn_network;

/* widths = {input, hidden..., output}; ReLU hidden layers, Softmax output. */
fsn_status fsn_network_mlp(const int32_t* widths, int32_t n_widths, uint64_t seed,
                           fsn_network** out);

/* Preset "desk" (input-64-32-k) or "mnist-mlp" (input-256-64-k). */
fsn_status fsn_network_preset(const char* name, int32_t input_dim, int32_t classes, uint64_t seed,
                              fsn_network** out);

fsn_status fsn_network_clone(const fsn_network* net, fsn_network** out);
fsn_status fsn_network_save(const fsn_network* net, const char* path);
fsn_status fsn_network_load(const char* path, fsn_network** out);
void fsn_network_free(fsn_network* net);

int64_t fsn_network_param_count(const fsn_network* net);
int32_t fsn_network_classes(const fsn_network* net);

/* Softmax probabilities for `rows` samples of width `cols`; probs_out must
 * hold rows * classes doubles, row-major. */
fsn_status fsn_network_forward(const fsn_network* net, const double* batch, int32_t rows,
                               int32_t cols, double* probs_out);

/* Mini-batch SGD on `n` dataset rows given by `indices` (NULL = all rows).
 * Returns a newly allocated trained network; the input is untouched. */
fsn_status fsn_network_train(const fsn_network* net, const fsn_dataset* ds,
                             const int32_t* indices, int32_t n, double lr, int32_t epochs,
                             int32_t batch_size, uint64_t seed, fsn_network** out);

fsn_status fsn_network_accuracy(const fsn_network* net, const fsn_dataset* ds, double* out);

/* ---- one-round attack ------------------------------------------------------
 * Runs Class Sniffing and Quantity Inference against the model pair
 * (g_t, g_t1) using auxiliary samples drawn from `aux_source` (the first
 * aux_per_label samples of each class). Outputs, each of length k:
 *   sniff_out    -- 1 = label present, 0 = absent
 *   estimate_out -- estimated owner count (0 when sniffed absent)
 *   stddev_out   -- candidate spread behind each estimate
 *   aborted_out  -- 1 = the estimate was aborted
 * Any output pointer may be NULL. opts may carry margin/th_r/abort_k/threads.
 */
fsn_status fsn_attack_round(const fsn_network* g_t, const fsn_network* g_t1,
                            const fsn_dataset* aux_source, int32_t aux_per_label,
                            int32_t n_participants, double selection_fraction, double avg_labels,
                            double lr, int32_t epochs, int32_t batch_size, uint64_t seed,
                            const fsn_options* opts, int32_t* sniff_out, double* estimate_out,
                            double* stddev_out, int32_t* aborted_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FEDSNIFF_H */
