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

#include "evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace fedsniff::eval {

double MetricConfig::alpha(int selected_count) const {
  return mode == Mode::Absolute ? alpha_abs : alpha_rel_fraction * selected_count;
}

double sniff_success_rate(const std::vector<SniffRecord>& records) {
  if (records.empty()) throw UsageError("sniff_success_rate: no records");
  int correct = 0;
  for (const SniffRecord& r : records) {
    if (r.detected == r.truth_present) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

QuantityRates quantity_success_rate(const std::vector<QuantityRecord>& records,
                                    const MetricConfig& mc, int selected_count) {
  if (records.empty()) throw UsageError("quantity_success_rate: no records");
  QuantityRates rates;
  rates.total = static_cast<int>(records.size());
  const double alpha = mc.alpha(selected_count);
  for (const QuantityRecord& r : records) {
    if (r.aborted) {
      ++rates.aborted;
      continue;
    }
    ++rates.evaluated;
    if (std::abs(r.estimate - r.truth_count) <= alpha) ++rates.successes;
  }
  rates.aborting_rate = static_cast<double>(rates.aborted) / rates.total;
  if (rates.evaluated > 0) {
    rates.success_rate = static_cast<double>(rates.successes) / rates.evaluated;
  }
  return rates;
}

Partition normalize_partition(Partition p) {
  for (auto& g : p) std::sort(g.begin(), g.end());
  p.erase(std::remove_if(p.begin(), p.end(), [](const auto& g) { return g.empty(); }), p.end());
  std::sort(p.begin(), p.end());
  return p;
}

bool whole_success(const Partition& found, const Partition& planted) {
  return normalize_partition(found) == normalize_partition(planted);
}

}  // namespace fedsniff::eval
