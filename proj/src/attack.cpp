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

#include "attack.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "errors.hpp"

namespace fedsniff::attack {

namespace {

constexpr std::uint64_t kTagBank = 0xBA4C;
constexpr double kDivisionEps = 1e-12;
constexpr double kRatioCap = 1e6;

double mean(const double* v, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += v[i];
  return s / n;
}

}  // namespace

int AttackPriors::selected_count() const {
  return static_cast<int>(std::lround(n_participants * selection_fraction));
}

int AuxiliaryData::feature_dim() const {
  for (const Matrix& m : per_label) {
    if (m.rows > 0) return m.cols;
  }
  return 0;
}

AuxiliaryData draw_auxiliary(const data::LabeledDataset& ds,
                             const std::vector<std::vector<int>>& indices) {
  AuxiliaryData aux;
  aux.per_label.resize(indices.size());
  for (std::size_t l = 0; l < indices.size(); ++l) {
    Matrix block(static_cast<int>(indices[l].size()), ds.feature_dim());
    for (std::size_t r = 0; r < indices[l].size(); ++r) {
      const double* src = ds.samples.row(indices[l][r]);
      std::copy(src, src + ds.feature_dim(), block.row(static_cast<int>(r)));
    }
    aux.per_label[l] = std::move(block);
  }
  return aux;
}

int LocalDeltaBank::width() const {
  if (per_label.empty()) throw UsageError("empty delta bank");
  return per_label.front().weights.back().cols;
}

const Matrix& LocalDeltaBank::output_rows(int source_label) const {
  if (source_label < 0 || source_label >= classes()) {
    throw UsageError("output_rows: label out of range");
  }
  return per_label[source_label].weights.back();
}

LocalDeltaBank build_delta_bank(const nn::Network& g_t, const AuxiliaryData& aux,
                                const nn::TrainParams& params, std::uint64_t seed,
                                int round, int threads) {
  const int k = aux.classes();
  if (k != g_t.output_width()) throw ShapeError("auxiliary labels do not match model classes");
  for (int l = 0; l < k; ++l) {
    if (aux.per_label[l].rows == 0) {
      throw UsageError("missing auxiliary data for label " + std::to_string(l));
    }
  }

  LocalDeltaBank bank;
  bank.round = round;
  bank.per_label.resize(k);
  std::vector<std::exception_ptr> errors(k);

  auto train_one = [&](int l) {
    try {
      Rng rng(Rng::mix({seed, kTagBank, static_cast<std::uint64_t>(l)}));
      const Matrix& block = aux.per_label[l];
      const std::vector<int> labels(block.rows, l);
      const nn::Network local = nn::train_local(g_t, block, labels, params, rng);
      bank.per_label[l] = nn::delta(local, g_t);
    } catch (...) {
      errors[l] = std::current_exception();
    }
  };

  const int workers = std::max(1, std::min(threads, k));
  if (workers == 1) {
    for (int l = 0; l < k; ++l) train_one(l);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int l = next.fetch_add(1); l < k; l = next.fetch_add(1)) train_one(l);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return bank;
}

SniffThresholds sniff_thresholds(const LocalDeltaBank& bank, const AttackPriors& priors,
                                 double margin) {
  const int k = bank.classes();
  if (k < 2) throw UsageError("sniff_thresholds: need at least 2 labels");
  const int width = bank.width();
  const double factor =
      priors.n_participants * priors.selection_fraction * priors.avg_labels;

  SniffThresholds th;
  th.margin = margin;
  th.aggregate_scale = priors.n_participants * priors.selection_fraction;
  th.th_low = Matrix(k, width);
  for (int i = 0; i < k; ++i) {
    double* row = th.th_low.row(i);
    for (int j = 0; j < k; ++j) {
      if (j == i) continue;
      const double* cross = bank.output_rows(j).row(i);
      for (int w = 0; w < width; ++w) row[w] += cross[w];
    }
    const double scale = factor / (k - 1);
    for (int w = 0; w < width; ++w) row[w] *= scale;
  }
  return th;
}

Verdict class_sniff(const nn::UpdateDelta& global_delta, const SniffThresholds& th, int label) {
  if (label < 0 || label >= th.th_low.rows) throw UsageError("class_sniff: label out of range");
  const std::vector<double> row = nn::inputting_weight_updates(global_delta, label);
  if (static_cast<int>(row.size()) != th.th_low.cols) {
    throw ShapeError("class_sniff: width mismatch between delta and thresholds");
  }
  const double observed = th.aggregate_scale * mean(row.data(), static_cast<int>(row.size()));
  const double floor = mean(th.th_low.row(label), th.th_low.cols);
  return observed > floor + th.margin * std::abs(floor) ? Verdict::Present : Verdict::Absent;
}

QuantityEstimate quantity_infer(const nn::UpdateDelta& global_delta, const LocalDeltaBank& bank,
                                const AttackPriors& priors, int label, double th_r,
                                double abort_k) {
  const int k = bank.classes();
  if (k < 2) throw UsageError("quantity_infer: need at least 2 labels");
  if (label < 0 || label >= k) throw UsageError("quantity_infer: label out of range");
  const int width = bank.width();
  const std::vector<double> observed = nn::inputting_weight_updates(global_delta, label);
  if (static_cast<int>(observed.size()) != width) {
    throw ShapeError("quantity_infer: width mismatch between delta and bank");
  }

  const double m = priors.n_participants * priors.selection_fraction;
  const double n_l = priors.avg_labels;
  const double* w_p = bank.output_rows(label).row(label);
  // w_n: per weight, the mean cross-label update of this label's row.
  std::vector<double> w_n(width, 0.0);
  for (int j = 0; j < k; ++j) {
    if (j == label) continue;
    const double* cross = bank.output_rows(j).row(label);
    for (int w = 0; w < width; ++w) w_n[w] += cross[w];
  }
  for (int w = 0; w < width; ++w) w_n[w] /= (k - 1);

  QuantityEstimate est;
  est.label = label;
  for (int w = 0; w < width; ++w) {
    // Offset-prone weights: cross-label pull comparable to the own-label
    // push. |w_n| <= th_r * |w_p| avoids the division entirely.
    if (std::abs(w_n[w]) > th_r * std::abs(w_p[w])) continue;
    const double denom = w_p[w] - w_n[w];
    if (std::abs(denom) < kDivisionEps) continue;  // counts as filtered, never divides
    const double x = m * (observed[w] - n_l * w_n[w]) / denom;
    if (x < 0.0 || x > m) continue;  // implausible candidate count
    est.surviving.push_back(w);
    est.candidates.push_back(x);
  }

  if (est.candidates.empty()) {
    est.aborted = true;
    return est;
  }
  double sum = 0.0;
  for (double x : est.candidates) sum += x;
  est.estimate = sum / static_cast<double>(est.candidates.size());
  double var = 0.0;
  for (double x : est.candidates) var += (x - est.estimate) * (x - est.estimate);
  est.stddev = std::sqrt(var / static_cast<double>(est.candidates.size()));
  est.aborted = est.stddev > abort_k * m;
  return est;
}

std::vector<double> ratio_vector(const LocalDeltaBank& bank, int label) {
  const int k = bank.classes();
  if (label < 0 || label >= k) throw UsageError("ratio_vector: label out of range");
  const int width = bank.width();
  const double w_p = std::abs(mean(bank.output_rows(label).row(label), width));
  std::vector<double> v;
  v.reserve(k - 1);
  for (int j = 0; j < k; ++j) {
    if (j == label) continue;
    const double w_n = std::abs(mean(bank.output_rows(j).row(label), width));
    v.push_back(std::min(w_p / std::max(w_n, kDivisionEps), kRatioCap));
  }
  return v;
}

std::vector<std::vector<int>> whole_determination(const LocalDeltaBank& bank,
                                                  cluster::Linkage linkage,
                                                  std::optional<double> cut) {
  const int k = bank.classes();
  std::vector<std::vector<double>> points;
  points.reserve(k);
  for (int i = 0; i < k; ++i) points.push_back(ratio_vector(bank, i));
  const cluster::Dendrogram dg = cluster::agglomerate(points, linkage);
  const double threshold = cut.value_or(0.5 * dg.max_distance());
  return cluster::cut_partition(dg, threshold);
}

nn::UpdateDelta remove_own_contribution(const nn::UpdateDelta& global_delta,
                                        const nn::UpdateDelta& own_delta,
                                        const AttackPriors& priors) {
  if (!global_delta.same_shape(own_delta)) {
    throw ShapeError("remove_own_contribution: shape mismatch");
  }
  nn::UpdateDelta out = global_delta;
  out.add_scaled(own_delta, -1.0 / priors.selected_count());
  return out;
}

}  // namespace fedsniff::attack
