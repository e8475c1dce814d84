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

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "attack.hpp"
#include "evaluation.hpp"
#include "sim.hpp"

// End-to-end experiment drivers: config files, run directories, report CSVs.
// This is the layer the C API and with it the CLI sit on.

namespace fedsniff::exp {

struct DatasetSpec {
  enum class Kind { Synthetic, Mnist };
  Kind kind = Kind::Synthetic;
  int synthetic_k = 10;
  int synthetic_dim = 32;
  int synthetic_per_class = 3000;
  double synthetic_spread = 0.55;
  std::string mnist_images;
  std::string mnist_labels;

  std::string id() const;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::string model = "desk";  // preset name, see nn::make_preset
  sim::FLConfig fl;
};

/// Flat key=value config. '#' starts a comment; keys mirror the FLConfig and
/// DatasetSpec field names exactly; unknown keys are errors.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string config_to_text(const ExperimentConfig& cfg);

/// Builds the dataset named by the spec (synthetic data is regenerated
/// deterministically from the FL seed).
data::LabeledDataset build_dataset(const ExperimentConfig& cfg);

/// In-memory federated run: owns dataset, allocation and the global model,
/// and advances one aggregation round at a time.
class Simulation {
 public:
  explicit Simulation(ExperimentConfig cfg, int threads = 1);

  const ExperimentConfig& config() const { return cfg_; }
  const data::LabeledDataset& dataset() const { return ds_; }
  const sim::LabelAllocation& allocation() const { return alloc_; }
  const nn::Network& global() const { return global_; }
  const nn::Network& previous() const { return previous_; }  // G_t of the last step
  int rounds_done() const { return round_; }

  sim::RoundTruth step();
  double test_accuracy() const;
  attack::AuxiliaryData auxiliary() const;
  attack::AttackPriors priors() const;

  /// The update the attacker itself uploaded in the last step, when
  /// cfg.fl.attacker_id was selected.
  const std::optional<nn::UpdateDelta>& last_attacker_delta() const { return attacker_delta_; }

 private:
  ExperimentConfig cfg_;
  int threads_;
  data::LabeledDataset ds_;
  sim::LabelAllocation alloc_;
  nn::Network global_;
  nn::Network previous_;
  std::vector<int> test_idx_;
  std::optional<nn::UpdateDelta> attacker_delta_;
  int round_ = 0;
};

struct AttackOptions {
  double margin = 0.25;
  double th_r = 0.5;
  double abort_k = 0.3;
  cluster::Linkage linkage = cluster::Linkage::Complete;
  std::optional<double> cut;  // empty = half the max merge distance
};

struct RoundAttackResult {
  std::vector<attack::Verdict> verdicts;           // per label
  std::vector<attack::QuantityEstimate> estimates; // per label; only when quantities requested
};

/// Runs Class Sniffing (and optionally Quantity Inference) for one round.
/// Pure function of its arguments; labels sniffed absent get a zero estimate.
RoundAttackResult attack_round(const nn::Network& g_t, const nn::Network& g_t1,
                               const attack::AuxiliaryData& aux, const attack::AttackPriors& priors,
                               const nn::TrainParams& params, std::uint64_t bank_seed,
                               const AttackOptions& opts, bool want_quantity, int threads = 1);

/// Per-round bank seed; shared by the inline and run-directory attack paths.
std::uint64_t bank_seed_for_round(std::uint64_t experiment_seed, int round);

// --- run directories -------------------------------------------------------

struct RunPaths {
  std::string dir;
  std::string manifest() const { return dir + "/manifest.txt"; }
  std::string round_log() const { return dir + "/round_log.csv"; }
  std::string truth() const { return dir + "/truth.csv"; }
  std::string aux() const { return dir + "/aux_indices.csv"; }
  std::string models() const { return dir + "/models"; }
  std::string model(int index) const;
  std::string sniff_report() const { return dir + "/sniff_report.csv"; }
  std::string quantity_report() const { return dir + "/quantity_report.csv"; }
  std::string whole_report() const { return dir + "/whole_report.csv"; }
  std::string report_summary() const { return dir + "/report_summary.csv"; }
};

/// Simulates cfg.fl.rounds rounds and persists the manifest, per-round global
/// models, the round log and the ground truth.
void cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir, int threads = 1);

/// Replays the attacker against a stored run. kind: "sniff", "quantity" or
/// "whole" (whole requires a planted-allocation run and stage triggers hit by
/// the stored accuracy curve). Writes the corresponding report CSV.
void cmd_attack(const std::string& run_dir, const std::string& kind, const AttackOptions& opts,
                const std::string& stage = "both", int threads = 1);

/// Re-runs the experiment in memory for every value on the axis and writes a
/// summary CSV row per value. Axes: batch_size, local_epochs,
/// selection_fraction, n_participants, compression_rate.
void cmd_sweep(const ExperimentConfig& base, const std::string& axis,
               const std::vector<double>& values, const std::string& out_csv,
               const AttackOptions& opts, const eval::MetricConfig& mc, int threads = 1);

/// Joins stored reports with the ground truth and writes/prints summary
/// tables. Returns the text table. Idempotent.
std::string cmd_report(const std::string& run_dir, const eval::MetricConfig& mc);

// Helpers shared with tests.
std::string format_partition(const eval::Partition& p);
eval::Partition parse_partition(const std::string& s);
eval::Partition planted_partition(const std::vector<int>& planted_group);

/// Stage trigger: first round whose post-aggregation accuracy reaches the
/// stage threshold (middle: >= 0.5, late: > 0.85). Returns the round index or
/// empty if the curve never gets there.
std::optional<int> stage_round(const std::vector<double>& accuracies, const std::string& stage);

}  // namespace fedsniff::exp
