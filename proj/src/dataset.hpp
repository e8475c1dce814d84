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

#include <string>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace fedsniff::data {

struct LabeledDataset {
  Matrix samples;            // one row per sample
  std::vector<int> labels;   // values in [0, k)
  int k = 0;

  int size() const { return samples.rows; }
  int feature_dim() const { return samples.cols; }
};

/// k Gaussian clusters with distinct means placed on scaled one-hot corners,
/// per_class samples each, isotropic stddev `spread`. Samples are emitted
/// class-major and the result is deterministic per generator state.
LabeledDataset gen_synthetic(int k, int dim, int per_class, double spread, Rng& rng);

/// Reads a pair of IDX files as distributed upstream (big-endian magic and
/// counts, raw bytes). Pixels are scaled to [0,1]; labels must be in [0,10).
LabeledDataset load_mnist(const std::string& images_path, const std::string& labels_path);

/// Index lists per label; together they partition [0, size).
std::vector<std::vector<int>> partition_by_class(const LabeledDataset& ds);

}  // namespace fedsniff::data
