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
#include <optional>
#include <vector>

#include "clustering.hpp"
#include "dataset.hpp"
#include "nn.hpp"

// Label-composition inference from aggregated model updates only. Everything
// here is a pure function of (global models, the attacker's own auxiliary
// data, public priors, seed) -- deliberately, this header knows nothing about
// the simulator's ground truth types.

namespace fedsniff::attack {

/// What the attacker legitimately knows about the training process.
struct AttackPriors {
  int n_participants = 0;         // N_p
  double selection_fraction = 0;  // P
  double avg_labels = 0;          // N_L: mean labels per selected client

  int selected_count() const;     // round(N_p * P)
};

/// The attacker's own labeled samples, one block per label. Owns its storage.
struct AuxiliaryData {
  std::vector<Matrix> per_label;

  int classes() const { return static_cast<int>(per_label.size()); }
  int feature_dim() const;
};

/// Copies the given dataset rows into attacker-owned storage.
AuxiliaryData draw_auxiliary(const data::LabeledDataset& ds,
                             const std::vector<std::vector<int>>& indices);

/// Per-label local updates g_Li - G_t obtained by training a copy of G_t on
/// each label's auxiliary samples alone. All rows of a delta's output-layer
/// block are kept: row i of output_rows(j) is the update that training label
/// j alone inflicts on label i's inputting weights.
struct LocalDeltaBank {
  int round = -1;
  std::vector<nn::UpdateDelta> per_label;

  int classes() const { return static_cast<int>(per_label.size()); }
  int width() const;  // penultimate layer width
  const Matrix& output_rows(int source_label) const;
};

LocalDeltaBank build_delta_bank(const nn::Network& g_t, const AuxiliaryData& aux,
                                const nn::TrainParams& params, std::uint64_t seed,
                                int round = -1, int threads = 1);

/// Worst-case "label absent" thresholds, one row per label:
///   Th_low[i] = N_p * P * N_L * mean over labels j != i of output_rows(j)[i].
/// The thresholds are in summed-over-clients units; aggregate_scale converts
/// an observed mean update into the same units.
struct SniffThresholds {
  Matrix th_low;
  double margin = 0.25;
  double aggregate_scale = 1.0;  // N_p * P
};

SniffThresholds sniff_thresholds(const LocalDeltaBank& bank, const AttackPriors& priors,
                                 double margin = 0.25);

enum class Verdict : int { Absent = 0, Present = 1 };

/// Present iff the mean inputting-weight update of `label`, scaled to summed
/// units, exceeds mean(Th_low) by more than margin * |mean(Th_low)|.
Verdict class_sniff(const nn::UpdateDelta& global_delta, const SniffThresholds& th, int label);

struct QuantityEstimate {
  int label = -1;
  double estimate = 0.0;          // X*, mean of surviving candidates
  std::vector<int> surviving;     // weight indices that passed both filters
  std::vector<double> candidates; // x_i per surviving weight
  double stddev = 0.0;            // population stddev of candidates
  bool aborted = false;
};

/// Estimates how many selected clients hold `label`, by inverting the average
/// aggregation per weight:
///   x_i = N_p * P * (G_i - N_L * w_n_i) / (w_p_i - w_n_i)
/// where G_i is the observed aggregate update of weight i, w_p its update in
/// the label's own auxiliary delta and w_n the mean over other labels'
/// deltas. Weights with |w_n|/|w_p| > th_r are dropped first (offset-prone),
/// then candidates outside [0, N_p*P]. Aborts when no weight survives or the
/// candidate spread exceeds abort_k * N_p * P. Callers should only invoke
/// this after class_sniff reports the label present.
QuantityEstimate quantity_infer(const nn::UpdateDelta& global_delta, const LocalDeltaBank& bank,
                                const AttackPriors& priors, int label, double th_r = 0.5,
                                double abort_k = 0.3);

/// Ratio vector V_pn for `label`: for every other label j, the ratio
/// |mean W_p| / |mean W_n on g_Lj|, ordered by j. Near-zero denominators are
/// capped at 1e6.
std::vector<double> ratio_vector(const LocalDeltaBank& bank, int label);

/// Groups labels whose ratio vectors sit close together: labels in the same
/// group saw approximately the same amount of training data. Cut defaults to
/// half the dendrogram's largest merge distance.
std::vector<std::vector<int>> whole_determination(
    const LocalDeltaBank& bank, cluster::Linkage linkage = cluster::Linkage::Complete,
    std::optional<double> cut = std::nullopt);

/// A selected attacker removes its own uploaded update, scaled by 1/(N_p*P),
/// from the observed global delta before any analysis.
nn::UpdateDelta remove_own_contribution(const nn::UpdateDelta& global_delta,
                                        const nn::UpdateDelta& own_delta,
                                        const AttackPriors& priors);

}  // namespace fedsniff::attack
