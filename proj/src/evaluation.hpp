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

#include <optional>
#include <vector>

namespace fedsniff::eval {

/// Success bound for quantity estimates: absolute (|est - truth| <= alpha_abs)
/// or relative (alpha = alpha_rel_fraction * selected clients).
struct MetricConfig {
  enum class Mode { Absolute, Relative };
  Mode mode = Mode::Absolute;
  double alpha_abs = 1.0;
  double alpha_rel_fraction = 0.05;

  double alpha(int selected_count) const;
};

struct SniffRecord {
  int round = 0;
  int label = 0;
  bool truth_present = false;
  bool detected = false;
};

struct QuantityRecord {
  int round = 0;
  int label = 0;
  int truth_count = 0;
  double estimate = 0.0;
  double stddev = 0.0;
  bool aborted = false;
};

/// Correct verdicts over all verdicts.
double sniff_success_rate(const std::vector<SniffRecord>& records);

struct QuantityRates {
  std::optional<double> success_rate;  // empty when every record aborted
  double aborting_rate = 0.0;
  int successes = 0;
  int evaluated = 0;  // records that were not aborted
  int aborted = 0;
  int total = 0;
};

/// Aborted records are excluded from the success denominator but counted in
/// the aborting rate.
QuantityRates quantity_success_rate(const std::vector<QuantityRecord>& records,
                                    const MetricConfig& mc, int selected_count);

using Partition = std::vector<std::vector<int>>;

/// Sorts members and groups into the canonical form used for comparison and
/// serialization.
Partition normalize_partition(Partition p);

/// Exact set-of-sets equality (group order and member order irrelevant).
bool whole_success(const Partition& found, const Partition& planted);

}  // namespace fedsniff::eval
