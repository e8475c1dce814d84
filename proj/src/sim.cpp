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

#include "sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "errors.hpp"

namespace fedsniff::sim {

namespace {

// Stream tags for Rng::mix, so unrelated draws never share a stream.
constexpr std::uint64_t kTagSelect = 0x5E1EC7;
constexpr std::uint64_t kTagLocal = 0x10CA1;

class ClassPools {
 public:
  ClassPools(const data::LabeledDataset& ds, Rng& rng, bool allow_replacement)
      : allow_replacement_(allow_replacement) {
    pools_ = data::partition_by_class(ds);
    for (auto& p : pools_) rng.shuffle(p);
    cursor_.assign(pools_.size(), 0);
  }

  // Draws `count` indices of `label`, without replacement until the pool is
  // exhausted; then either fails or falls back to uniform re-draws.
  std::vector<int> take(int label, int count, Rng& rng) {
    std::vector<int> out;
    out.reserve(count);
    auto& pool = pools_[label];
    std::size_t& cur = cursor_[label];
    for (int i = 0; i < count; ++i) {
      if (cur < pool.size()) {
        out.push_back(pool[cur++]);
      } else if (allow_replacement_) {
        used_replacement_ = true;
        out.push_back(pool[rng.below(pool.size())]);
      } else {
        throw DataError("insufficient samples for label " + std::to_string(label) +
                        " (set allow_replacement to reuse samples)");
      }
    }
    return out;
  }

  bool used_replacement() const { return used_replacement_; }

 private:
  std::vector<std::vector<int>> pools_;
  std::vector<std::size_t> cursor_;
  bool allow_replacement_ = false;
  bool used_replacement_ = false;
};

void append(std::vector<int>& dst, const std::vector<int>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

int FLConfig::selected_count() const {
  return static_cast<int>(std::lround(n_participants * selection_fraction));
}

int FLConfig::aux_count() const {
  return aux_samples_per_label > 0 ? aux_samples_per_label : samples_per_main_label;
}

nn::TrainParams FLConfig::local_params() const {
  return nn::TrainParams{local_lr, local_epochs, local_batch_size};
}

void FLConfig::validate(int classes) const {
  if (n_participants < 1) throw ConfigError("n_participants must be >= 1");
  if (selection_fraction <= 0.0 || selection_fraction > 1.0) {
    throw ConfigError("selection_fraction must be in (0, 1]");
  }
  if (selected_count() < 1) throw ConfigError("round(n_participants * selection_fraction) must be >= 1");
  if (local_batch_size < 1) throw ConfigError("local_batch_size must be >= 1");
  if (local_lr < 0.0) throw ConfigError("local_lr must be non-negative");
  if (local_epochs < 1) throw ConfigError("local_epochs must be >= 1");
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (compression_rate < 0.0 || compression_rate >= 1.0) {
    throw ConfigError("compression_rate must be in [0, 1)");
  }
  if (allocation == AllocationMode::Mains) {
    if (main_labels_choices.empty()) throw ConfigError("main_labels_choices must be non-empty");
    for (int c : main_labels_choices) {
      if (c < 1 || c > classes) throw ConfigError("main label counts must be in [1, classes]");
    }
    if (samples_per_main_label < 1) throw ConfigError("samples_per_main_label must be >= 1");
    if (samples_per_minor_label < 0) throw ConfigError("samples_per_minor_label must be >= 0");
  } else {
    if (planted_base < 1) throw ConfigError("planted_base must be >= 1");
    if (planted_factors.empty()) throw ConfigError("planted_factors must be non-empty");
    for (double f : planted_factors) {
      if (f <= 0.0 || f > 1.0) throw ConfigError("planted_factors must be in (0, 1]");
    }
  }
  if (attacker_id >= n_participants) throw ConfigError("attacker_id out of range");
  if (test_samples_per_label < 0) throw ConfigError("test_samples_per_label must be >= 0");
}

std::vector<int> LabelAllocation::flat_test() const {
  std::vector<int> out;
  for (const auto& t : test_indices) append(out, t);
  return out;
}

LabelAllocation allocate(const data::LabeledDataset& ds, const FLConfig& cfg, Rng& rng) {
  cfg.validate(ds.k);
  const int k = ds.k;
  ClassPools pools(ds, rng, cfg.allow_replacement);
  LabelAllocation alloc;

  alloc.test_indices.resize(k);
  for (int l = 0; l < k; ++l) alloc.test_indices[l] = pools.take(l, cfg.test_samples_per_label, rng);
  alloc.aux_indices.resize(k);
  for (int l = 0; l < k; ++l) alloc.aux_indices[l] = pools.take(l, cfg.aux_count(), rng);

  if (cfg.allocation == AllocationMode::Planted) {
    // Labels are shuffled into len(planted_factors) groups of near-equal size;
    // every client holds every label with count planted_base * factor(group).
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const int n_groups = static_cast<int>(cfg.planted_factors.size());
    alloc.planted_group.assign(k, 0);
    for (int pos = 0; pos < k; ++pos) {
      alloc.planted_group[order[pos]] = pos % n_groups;
    }
    alloc.clients.resize(cfg.n_participants);
    for (int c = 0; c < cfg.n_participants; ++c) {
      ClientData& cd = alloc.clients[c];
      cd.per_label.resize(k);
      for (int l = 0; l < k; ++l) {
        const int count = std::max(
            1, static_cast<int>(std::lround(cfg.planted_base * cfg.planted_factors[alloc.planted_group[l]])));
        cd.per_label[l] = pools.take(l, count, rng);
        append(cd.flat_indices, cd.per_label[l]);
        cd.main_labels.push_back(l);
      }
    }
    alloc.used_replacement = pools.used_replacement();
    return alloc;
  }

  alloc.clients.resize(cfg.n_participants);
  std::vector<int> label_order(k);
  for (int c = 0; c < cfg.n_participants; ++c) {
    ClientData& cd = alloc.clients[c];
    cd.per_label.resize(k);
    const int n_main =
        cfg.main_labels_choices[rng.below(cfg.main_labels_choices.size())];
    std::iota(label_order.begin(), label_order.end(), 0);
    rng.shuffle(label_order);
    cd.main_labels.assign(label_order.begin(), label_order.begin() + n_main);
    std::sort(cd.main_labels.begin(), cd.main_labels.end());
    for (int l = 0; l < k; ++l) {
      const bool is_main =
          std::binary_search(cd.main_labels.begin(), cd.main_labels.end(), l);
      const int count = is_main ? cfg.samples_per_main_label : cfg.samples_per_minor_label;
      if (count > 0) {
        cd.per_label[l] = pools.take(l, count, rng);
        append(cd.flat_indices, cd.per_label[l]);
      }
    }
    if (cd.flat_indices.empty()) throw DataError("client " + std::to_string(c) + " received no samples");
  }
  alloc.used_replacement = pools.used_replacement();
  return alloc;
}

std::vector<int> select_clients(const FLConfig& cfg, int round) {
  const int m = cfg.selected_count();
  Rng rng(Rng::mix({cfg.seed, kTagSelect, static_cast<std::uint64_t>(round)}));
  std::vector<int> ids(cfg.n_participants);
  std::iota(ids.begin(), ids.end(), 0);
  for (int i = 0; i < m; ++i) {
    const std::size_t j = i + rng.below(ids.size() - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(m);
  std::sort(ids.begin(), ids.end());
  return ids;
}

nn::UpdateDelta compress_update(const nn::UpdateDelta& d, double cr) {
  if (cr < 0.0 || cr >= 1.0) throw UsageError("compress_update: cr must be in [0, 1)");
  nn::UpdateDelta out = d;
  if (cr == 0.0 || d.weights.empty()) return out;
  Matrix& rows = out.weights.back();
  const int n = rows.cols;
  const int keep = static_cast<int>(std::ceil(cr * n));
  if (keep >= n) return out;
  std::vector<int> idx(n);
  for (int r = 0; r < rows.rows; ++r) {
    double* w = rows.row(r);
    std::iota(idx.begin(), idx.end(), 0);
    // Top `keep` by |value|; ties resolved toward the lower index.
    std::nth_element(idx.begin(), idx.begin() + keep, idx.end(), [&](int a, int b) {
      const double av = std::abs(w[a]);
      const double bv = std::abs(w[b]);
      return av > bv || (av == bv && a < b);
    });
    for (int i = keep; i < n; ++i) w[idx[i]] = 0.0;
  }
  return out;
}

RoundResult run_round(const nn::Network& global, const data::LabeledDataset& ds,
                      const LabelAllocation& alloc, const FLConfig& cfg, int round,
                      int threads) {
  const std::vector<int> selected = select_clients(cfg, round);
  const int m = static_cast<int>(selected.size());
  std::vector<nn::UpdateDelta> deltas(m);
  std::vector<std::exception_ptr> errors(m);

  auto train_one = [&](int i) {
    const int c = selected[i];
    try {
      Rng crng(Rng::mix({cfg.seed, kTagLocal, static_cast<std::uint64_t>(round),
                         static_cast<std::uint64_t>(c)}));
      const nn::Network local = nn::train_local(global, ds.samples, ds.labels,
                                                alloc.clients[c].flat_indices,
                                                cfg.local_params(), crng);
      nn::UpdateDelta d = nn::delta(local, global);
      if (cfg.compression_rate > 0.0) d = compress_update(d, cfg.compression_rate);
      deltas[i] = std::move(d);
    } catch (const NumericError& e) {
      errors[i] = std::make_exception_ptr(
          NumericError("client " + std::to_string(c) + ": " + e.what()));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const int workers = std::max(1, std::min(threads, m));
  if (workers == 1) {
    for (int i = 0; i < m; ++i) train_one(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < m; i = next.fetch_add(1)) train_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Fixed ascending-id reduction keeps floating point results independent of
  // the number of workers.
  nn::UpdateDelta mean = nn::UpdateDelta::zeros_like(global);
  for (int i = 0; i < m; ++i) mean.add_scaled(deltas[i], 1.0 / m);

  RoundResult res{nn::apply(global, mean), RoundTruth{}, std::nullopt};
  res.truth.round = round;
  res.truth.selected = selected;
  res.truth.owner_counts.assign(ds.k, 0);
  for (int i = 0; i < m; ++i) {
    for (int l : alloc.clients[selected[i]].main_labels) ++res.truth.owner_counts[l];
    if (selected[i] == cfg.attacker_id) res.attacker_delta = deltas[i];
  }
  return res;
}

}  // namespace fedsniff::sim
