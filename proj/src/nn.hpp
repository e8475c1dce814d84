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
#include <string>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace fedsniff::nn {

enum class Activation : std::uint8_t { Relu = 0, Identity = 1, Softmax = 2 };

struct DenseLayer {
  Matrix weights;  // rows = out neurons, cols = in neurons
  std::vector<double> bias;
  Activation activation = Activation::Relu;
};

/// Layered dense feed-forward classifier.
///
/// The output layer is always Softmax with one row per label class; those
/// weight rows are the "inputting weights" of the class neurons, the surface
/// the attack engine inspects.
struct Network {
  std::vector<DenseLayer> layers;

  int input_width() const;
  int output_width() const;       // number of label classes k
  int penultimate_width() const;  // fan-in of the output layer
  std::size_t param_count() const;

  /// Adjacent shapes agree, output layer is Softmax, all parameters finite.
  void check_valid() const;
};

/// widths = {input, hidden..., output}. Hidden layers are ReLU, the output is
/// Softmax. Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases 0.
Network make_mlp(const std::vector<int>& widths, Rng& rng);

/// Named presets: "desk" = input-64-32-k, "mnist-mlp" = input-256-64-k.
Network make_preset(const std::string& name, int input_dim, int classes, Rng& rng);

/// Parameter-wise difference between two shape-compatible networks.
struct UpdateDelta {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  bool same_shape(const UpdateDelta& o) const;
  void add_scaled(const UpdateDelta& o, double s);  // this += s * o
  double max_abs() const;

  static UpdateDelta zeros_like(const Network& net);
};

UpdateDelta delta(const Network& after, const Network& before);
Network apply(const Network& base, const UpdateDelta& d, double scale = 1.0);

/// Row `label` of the output-layer weight block of d: the update of the
/// weights feeding class neuron `label` from the penultimate layer.
std::vector<double> inputting_weight_updates(const UpdateDelta& d, int label);

struct TrainParams {
  double lr = 0.01;
  int epochs = 1;
  int batch_size = 32;
};

/// Softmax probabilities for a batch, one row per sample.
Matrix forward(const Network& net, const Matrix& batch);

/// Mini-batch SGD with cross-entropy loss over the softmax output.
///
/// Returns a new network; `net` is untouched. Sample order is reshuffled once
/// per epoch from `rng`; the trailing partial batch is kept. Batch gradients
/// are scaled by the nominal batch size, so every sample carries weight
/// lr/batch_size no matter where batch boundaries fall -- local updates then
/// superpose additively across data subsets, which the update analysis
/// depends on. Trains on rows `idx` of `samples`.
Network train_local(const Network& net, const Matrix& samples, const std::vector<int>& labels,
                    const std::vector<int>& idx, const TrainParams& p, Rng& rng);

/// Convenience overload: trains on all rows.
Network train_local(const Network& net, const Matrix& samples, const std::vector<int>& labels,
                    const TrainParams& p, Rng& rng);

double mean_loss(const Network& net, const Matrix& samples, const std::vector<int>& labels,
                 const std::vector<int>& idx);
double accuracy(const Network& net, const Matrix& samples, const std::vector<int>& labels,
                const std::vector<int>& idx);

/// Versioned binary serialization; round-trips bit-exactly.
std::vector<std::uint8_t> to_bytes(const Network& net);
Network from_bytes(const std::vector<std::uint8_t>& bytes);
void save(const Network& net, const std::string& path);
Network load(const std::string& path);
void save_delta(const UpdateDelta& d, const std::string& path);
UpdateDelta load_delta(const std::string& path);

bool equal_params(const Network& a, const Network& b);  // exact comparison

}  // namespace fedsniff::nn
