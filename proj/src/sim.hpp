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

#include "dataset.hpp"
#include "nn.hpp"

namespace fedsniff::sim {

enum class AllocationMode { Mains, Planted };

/// Full description of one federated run. Field names double as the config
/// file keys.
struct FLConfig {
  int n_participants = 100;           // N_p
  double selection_fraction = 0.1;    // P, clients per round = round(N_p * P)
  int local_batch_size = 32;          // L_bs
  double local_lr = 0.05;             // L_lr
  int local_epochs = 2;               // L_ep
  double avg_labels_per_client = 4;   // N_L prior handed to the attacker
  int rounds = 100;
  std::uint64_t seed = 1;
  double compression_rate = 0.0;      // CR in [0,1); 0 disables the defense
  std::vector<int> main_labels_choices = {3, 4, 5};
  int samples_per_main_label = 64;
  int samples_per_minor_label = 4;    // every non-main label, 0 = mains only
  AllocationMode allocation = AllocationMode::Mains;
  int planted_base = 60;              // per-client samples of a group-0 label
  std::vector<double> planted_factors = {1.0, 0.25, 0.2};
  int attacker_id = -1;               // >= 0: that participant is the attacker
  bool allow_replacement = false;     // reuse samples when a class pool runs dry
  int test_samples_per_label = 50;    // held-out accuracy split
  int aux_samples_per_label = 0;      // 0 = samples_per_main_label

  int selected_count() const;
  int aux_count() const;
  nn::TrainParams local_params() const;
  void validate(int classes) const;
};

struct ClientData {
  std::vector<int> main_labels;              // sorted label ids
  std::vector<std::vector<int>> per_label;   // dataset indices, one list per label
  std::vector<int> flat_indices;             // concatenation of per_label
};

struct LabelAllocation {
  std::vector<ClientData> clients;
  std::vector<std::vector<int>> aux_indices;   // attacker-held samples per label
  std::vector<std::vector<int>> test_indices;  // held-out eval split per label
  std::vector<int> planted_group;              // per label; Planted mode only
  bool used_replacement = false;

  std::vector<int> flat_test() const;
};

/// Draws the held-out splits and every client's indices. Main labels are
/// chosen uniformly from main_labels_choices per client; every other label is
/// held at the minor sample count. Planted mode instead gives every client
/// every label, with per-label counts scaled by that label's group factor.
LabelAllocation allocate(const data::LabeledDataset& ds, const FLConfig& cfg, Rng& rng);

/// Uniform sample without replacement of round(N_p*P) client ids, ascending;
/// deterministic per (cfg.seed, round).
std::vector<int> select_clients(const FLConfig& cfg, int round);

struct RoundTruth {
  int round = 0;
  std::vector<int> selected;      // ascending client ids
  std::vector<int> owner_counts;  // per label: selected clients with it as a main label
};

struct RoundResult {
  nn::Network next_global;
  RoundTruth truth;
  // Set when cfg.attacker_id was among the selected clients: the update the
  // attacker itself uploaded (post-compression), for self-removal.
  std::optional<nn::UpdateDelta> attacker_delta;
};

/// One aggregation round: selected clients train locally from `global`, their
/// parameter deltas (compressed when CR > 0) are averaged in ascending client
/// id order, and the mean is applied to the global model. Local trainings may
/// run on `threads` workers; per-client seeds keep the result identical
/// either way.
RoundResult run_round(const nn::Network& global, const data::LabeledDataset& ds,
                      const LabelAllocation& alloc, const FLConfig& cfg, int round,
                      int threads = 1);

/// Client-side compression defense: within each output-layer row, keep the
/// ceil(cr*n) largest-magnitude update entries and zero the rest. Other
/// layers and biases pass through; cr == 0 is the identity.
nn::UpdateDelta compress_update(const nn::UpdateDelta& d, double cr);

}  // namespace fedsniff::sim
