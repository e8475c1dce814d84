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

#include "nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "errors.hpp"

namespace fedsniff::nn {

namespace {

constexpr std::uint32_t kMagic = 0x4E4E5346;  // "FSNN" little-endian
constexpr std::uint32_t kVersion = 1;

void require(bool ok, const char* msg) {
  if (!ok) throw ShapeError(msg);
}

// z = W * x + b
void affine(const DenseLayer& l, const double* x, double* z) {
  const int out = l.weights.rows;
  const int in = l.weights.cols;
  for (int r = 0; r < out; ++r) {
    const double* w = l.weights.row(r);
    double s = l.bias[r];
    for (int c = 0; c < in; ++c) s += w[c] * x[c];
    z[r] = s;
  }
}

void activate(Activation act, const double* z, double* a, int n) {
  switch (act) {
    case Activation::Relu:
      for (int i = 0; i < n; ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
      break;
    case Activation::Identity:
      for (int i = 0; i < n; ++i) a[i] = z[i];
      break;
    case Activation::Softmax: {
      double m = z[0];
      for (int i = 1; i < n; ++i) m = std::max(m, z[i]);
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        a[i] = std::exp(z[i] - m);
        sum += a[i];
      }
      for (int i = 0; i < n; ++i) a[i] /= sum;
      break;
    }
  }
}

struct Workspace {
  std::vector<std::vector<double>> z;  // pre-activations per layer
  std::vector<std::vector<double>> a;  // activations per layer
  std::vector<std::vector<double>> dz;
  std::vector<Matrix> gw;
  std::vector<std::vector<double>> gb;

  explicit Workspace(const Network& net) {
    for (const DenseLayer& l : net.layers) {
      const int out = l.weights.rows;
      z.emplace_back(out);
      a.emplace_back(out);
      dz.emplace_back(out);
      gw.emplace_back(l.weights.rows, l.weights.cols);
      gb.emplace_back(out, 0.0);
    }
  }

  void zero_grads() {
    for (Matrix& g : gw) std::fill(g.data.begin(), g.data.end(), 0.0);
    for (auto& g : gb) std::fill(g.begin(), g.end(), 0.0);
  }
};

// Forward pass for one sample, storing per-layer pre-activations and
// activations for the backward pass.
void forward_sample(const Network& net, const double* x, Workspace& ws) {
  const double* in = x;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const DenseLayer& l = net.layers[li];
    affine(l, in, ws.z[li].data());
    activate(l.activation, ws.z[li].data(), ws.a[li].data(), l.weights.rows);
    in = ws.a[li].data();
  }
}

// Accumulates the cross-entropy gradient of one sample into ws.gw / ws.gb.
// Softmax + CE gives dz_out = p - onehot(y).
void backward_sample(const Network& net, const double* x, int label, Workspace& ws) {
  const int last = static_cast<int>(net.layers.size()) - 1;
  {
    const int k = net.layers[last].weights.rows;
    for (int i = 0; i < k; ++i) ws.dz[last][i] = ws.a[last][i];
    ws.dz[last][label] -= 1.0;
  }
  for (int li = last; li >= 0; --li) {
    const DenseLayer& l = net.layers[li];
    const int out = l.weights.rows;
    const int in = l.weights.cols;
    const double* prev = li == 0 ? x : ws.a[li - 1].data();
    const double* dz = ws.dz[li].data();
    for (int r = 0; r < out; ++r) {
      const double g = dz[r];
      if (g == 0.0) continue;
      double* grow = ws.gw[li].row(r);
      for (int c = 0; c < in; ++c) grow[c] += g * prev[c];
      ws.gb[li][r] += g;
    }
    if (li == 0) break;
    // dh = W^T dz, then through the previous layer's activation.
    std::vector<double>& dprev = ws.dz[li - 1];
    std::fill(dprev.begin(), dprev.end(), 0.0);
    for (int r = 0; r < out; ++r) {
      const double g = dz[r];
      if (g == 0.0) continue;
      const double* w = l.weights.row(r);
      for (int c = 0; c < in; ++c) dprev[c] += g * w[c];
    }
    const DenseLayer& pl = net.layers[li - 1];
    if (pl.activation == Activation::Relu) {
      for (int c = 0; c < in; ++c) {
        if (ws.z[li - 1][c] <= 0.0) dprev[c] = 0.0;
      }
    }
    // Identity passes dprev through unchanged; Softmax only occurs on the
    // output layer.
  }
}

// theta -= step * grad, throwing on the first non-finite result.
void apply_step(Network& net, const Workspace& ws, double step, int epoch, int batch_index) {
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    DenseLayer& l = net.layers[li];
    double* w = l.weights.data.data();
    const double* g = ws.gw[li].data.data();
    const std::size_t n = l.weights.data.size();
    for (std::size_t i = 0; i < n; ++i) {
      w[i] -= step * g[i];
      if (!std::isfinite(w[i])) {
        throw NumericError("non-finite parameter after SGD step (epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_index) + ")");
      }
    }
    for (std::size_t i = 0; i < l.bias.size(); ++i) {
      l.bias[i] -= step * ws.gb[li][i];
      if (!std::isfinite(l.bias[i])) {
        throw NumericError("non-finite bias after SGD step (epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_index) + ")");
      }
    }
  }
}

template <typename F>
void write_raw(std::vector<std::uint8_t>& out, const F& v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(F));
}

template <typename F>
F read_raw(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + sizeof(F) > in.size()) throw DataError("network blob truncated");
  F v;
  std::memcpy(&v, in.data() + pos, sizeof(F));
  pos += sizeof(F);
  return v;
}

}  // namespace

int Network::input_width() const {
  require(!layers.empty(), "network has no layers");
  return layers.front().weights.cols;
}

int Network::output_width() const {
  require(!layers.empty(), "network has no layers");
  return layers.back().weights.rows;
}

int Network::penultimate_width() const {
  require(!layers.empty(), "network has no layers");
  return layers.back().weights.cols;
}

std::size_t Network::param_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers) n += l.weights.data.size() + l.bias.size();
  return n;
}

void Network::check_valid() const {
  if (layers.empty()) throw ShapeError("network has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const DenseLayer& l = layers[i];
    if (static_cast<int>(l.bias.size()) != l.weights.rows) {
      throw ShapeError("bias length does not match layer rows");
    }
    if (i > 0 && l.weights.cols != layers[i - 1].weights.rows) {
      throw ShapeError("adjacent layer dimensions disagree");
    }
    for (double v : l.weights.data) {
      if (!std::isfinite(v)) throw NumericError("non-finite weight");
    }
    for (double v : l.bias) {
      if (!std::isfinite(v)) throw NumericError("non-finite bias");
    }
  }
  if (layers.back().activation != Activation::Softmax) {
    throw ShapeError("output layer must be Softmax");
  }
}

Network make_mlp(const std::vector<int>& widths, Rng& rng) {
  if (widths.size() < 2) throw UsageError("make_mlp: need at least input and output widths");
  for (int w : widths) {
    if (w < 1) throw UsageError("make_mlp: widths must be positive");
  }
  Network net;
  for (std::size_t i = 1; i < widths.size(); ++i) {
    DenseLayer l;
    l.weights = Matrix(widths[i], widths[i - 1]);
    l.bias.assign(widths[i], 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[i - 1]));
    for (double& v : l.weights.data) v = rng.uniform(-bound, bound);
    l.activation = i + 1 == widths.size() ? Activation::Softmax : Activation::Relu;
    net.layers.push_back(std::move(l));
  }
  return net;
}

Network make_preset(const std::string& name, int input_dim, int classes, Rng& rng) {
  if (name == "desk") return make_mlp({input_dim, 64, 32, classes}, rng);
  if (name == "mnist-mlp") return make_mlp({input_dim, 256, 64, classes}, rng);
  throw ConfigError("unknown model preset: " + name);
}

bool UpdateDelta::same_shape(const UpdateDelta& o) const {
  if (weights.size() != o.weights.size()) return false;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!weights[i].same_shape(o.weights[i])) return false;
    if (biases[i].size() != o.biases[i].size()) return false;
  }
  return true;
}

void UpdateDelta::add_scaled(const UpdateDelta& o, double s) {
  if (!same_shape(o)) throw ShapeError("UpdateDelta::add_scaled: shape mismatch");
  for (std::size_t li = 0; li < weights.size(); ++li) {
    double* a = weights[li].data.data();
    const double* b = o.weights[li].data.data();
    for (std::size_t i = 0; i < weights[li].data.size(); ++i) a[i] += s * b[i];
    for (std::size_t i = 0; i < biases[li].size(); ++i) biases[li][i] += s * o.biases[li][i];
  }
}

double UpdateDelta::max_abs() const {
  double m = 0.0;
  for (const Matrix& w : weights) {
    for (double v : w.data) m = std::max(m, std::abs(v));
  }
  for (const auto& b : biases) {
    for (double v : b) m = std::max(m, std::abs(v));
  }
  return m;
}

UpdateDelta UpdateDelta::zeros_like(const Network& net) {
  UpdateDelta d;
  for (const DenseLayer& l : net.layers) {
    d.weights.emplace_back(l.weights.rows, l.weights.cols);
    d.biases.emplace_back(l.bias.size(), 0.0);
  }
  return d;
}

UpdateDelta delta(const Network& after, const Network& before) {
  if (after.layers.size() != before.layers.size()) {
    throw ShapeError("delta: layer count mismatch");
  }
  UpdateDelta d;
  for (std::size_t li = 0; li < after.layers.size(); ++li) {
    const DenseLayer& a = after.layers[li];
    const DenseLayer& b = before.layers[li];
    if (!a.weights.same_shape(b.weights) || a.bias.size() != b.bias.size()) {
      throw ShapeError("delta: layer shape mismatch");
    }
    Matrix dw(a.weights.rows, a.weights.cols);
    for (std::size_t i = 0; i < dw.data.size(); ++i) {
      dw.data[i] = a.weights.data[i] - b.weights.data[i];
    }
    std::vector<double> db(a.bias.size());
    for (std::size_t i = 0; i < db.size(); ++i) db[i] = a.bias[i] - b.bias[i];
    d.weights.push_back(std::move(dw));
    d.biases.push_back(std::move(db));
  }
  return d;
}

Network apply(const Network& base, const UpdateDelta& d, double scale) {
  if (base.layers.size() != d.weights.size()) throw ShapeError("apply: layer count mismatch");
  Network out = base;
  for (std::size_t li = 0; li < out.layers.size(); ++li) {
    DenseLayer& l = out.layers[li];
    if (!l.weights.same_shape(d.weights[li]) || l.bias.size() != d.biases[li].size()) {
      throw ShapeError("apply: layer shape mismatch");
    }
    for (std::size_t i = 0; i < l.weights.data.size(); ++i) {
      l.weights.data[i] += scale * d.weights[li].data[i];
    }
    for (std::size_t i = 0; i < l.bias.size(); ++i) l.bias[i] += scale * d.biases[li][i];
  }
  return out;
}

std::vector<double> inputting_weight_updates(const UpdateDelta& d, int label) {
  if (d.weights.empty()) throw ShapeError("inputting_weight_updates: empty delta");
  const Matrix& out = d.weights.back();
  if (label < 0 || label >= out.rows) {
    throw UsageError("inputting_weight_updates: label out of range");
  }
  const double* r = out.row(label);
  return std::vector<double>(r, r + out.cols);
}

Matrix forward(const Network& net, const Matrix& batch) {
  net.check_valid();
  if (batch.cols != net.input_width()) throw ShapeError("forward: batch width mismatch");
  Workspace ws(net);
  Matrix probs(batch.rows, net.output_width());
  for (int s = 0; s < batch.rows; ++s) {
    forward_sample(net, batch.row(s), ws);
    const std::vector<double>& out = ws.a.back();
    std::copy(out.begin(), out.end(), probs.row(s));
  }
  return probs;
}

Network train_local(const Network& net, const Matrix& samples, const std::vector<int>& labels,
                    const std::vector<int>& idx, const TrainParams& p, Rng& rng) {
  net.check_valid();
  if (idx.empty()) throw UsageError("train_local: empty training data");
  if (p.lr < 0.0) throw UsageError("train_local: negative learning rate");
  if (p.epochs < 1) throw UsageError("train_local: epochs must be >= 1");
  if (p.batch_size < 1) throw UsageError("train_local: batch_size must be >= 1");
  if (samples.cols != net.input_width()) throw ShapeError("train_local: feature width mismatch");
  const int k = net.output_width();
  for (int i : idx) {
    if (i < 0 || i >= samples.rows) throw UsageError("train_local: sample index out of range");
    if (labels[i] < 0 || labels[i] >= k) throw UsageError("train_local: label out of range");
  }

  Network work = net;
  Workspace ws(work);
  std::vector<int> order = idx;
  const double step = p.lr / static_cast<double>(p.batch_size);

  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    rng.shuffle(order);
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += p.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + p.batch_size);
      ws.zero_grads();
      for (std::size_t s = start; s < end; ++s) {
        const double* x = samples.row(order[s]);
        forward_sample(work, x, ws);
        backward_sample(work, x, labels[order[s]], ws);
      }
      apply_step(work, ws, step, epoch, batch_index);
    }
  }
  return work;
}

Network train_local(const Network& net, const Matrix& samples, const std::vector<int>& labels,
                    const TrainParams& p, Rng& rng) {
  std::vector<int> idx(samples.rows);
  std::iota(idx.begin(), idx.end(), 0);
  return train_local(net, samples, labels, idx, p, rng);
}

double mean_loss(const Network& net, const Matrix& samples, const std::vector<int>& labels,
                 const std::vector<int>& idx) {
  if (idx.empty()) throw UsageError("mean_loss: empty index set");
  Workspace ws(net);
  double total = 0.0;
  for (int i : idx) {
    forward_sample(net, samples.row(i), ws);
    const double p = std::max(ws.a.back()[labels[i]], 1e-300);
    total -= std::log(p);
  }
  const double loss = total / static_cast<double>(idx.size());
  if (!std::isfinite(loss)) throw NumericError("non-finite loss");
  return loss;
}

double accuracy(const Network& net, const Matrix& samples, const std::vector<int>& labels,
                const std::vector<int>& idx) {
  if (idx.empty()) throw UsageError("accuracy: empty index set");
  Workspace ws(net);
  int hits = 0;
  for (int i : idx) {
    forward_sample(net, samples.row(i), ws);
    const std::vector<double>& out = ws.a.back();
    int best = 0;
    for (std::size_t c = 1; c < out.size(); ++c) {
      if (out[c] > out[best]) best = static_cast<int>(c);
    }
    if (best == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(idx.size());
}

std::vector<std::uint8_t> to_bytes(const Network& net) {
  std::vector<std::uint8_t> out;
  write_raw(out, kMagic);
  write_raw(out, kVersion);
  write_raw(out, static_cast<std::uint32_t>(net.layers.size()));
  for (const DenseLayer& l : net.layers) {
    write_raw(out, static_cast<std::uint32_t>(l.weights.rows));
    write_raw(out, static_cast<std::uint32_t>(l.weights.cols));
    write_raw(out, static_cast<std::uint8_t>(l.activation));
    for (double v : l.weights.data) write_raw(out, v);
    for (double v : l.bias) write_raw(out, v);
  }
  return out;
}

Network from_bytes(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  if (read_raw<std::uint32_t>(bytes, pos) != kMagic) throw DataError("bad network magic");
  if (read_raw<std::uint32_t>(bytes, pos) != kVersion) throw DataError("unsupported network version");
  const auto n_layers = read_raw<std::uint32_t>(bytes, pos);
  Network net;
  for (std::uint32_t li = 0; li < n_layers; ++li) {
    const auto rows = read_raw<std::uint32_t>(bytes, pos);
    const auto cols = read_raw<std::uint32_t>(bytes, pos);
    const auto act = read_raw<std::uint8_t>(bytes, pos);
    if (act > 2) throw DataError("bad activation tag");
    DenseLayer l;
    l.weights = Matrix(static_cast<int>(rows), static_cast<int>(cols));
    l.bias.assign(rows, 0.0);
    l.activation = static_cast<Activation>(act);
    for (double& v : l.weights.data) v = read_raw<double>(bytes, pos);
    for (double& v : l.bias) v = read_raw<double>(bytes, pos);
    net.layers.push_back(std::move(l));
  }
  if (pos != bytes.size()) throw DataError("trailing bytes in network blob");
  return net;
}

void save(const Network& net, const std::string& path) {
  const std::vector<std::uint8_t> bytes = to_bytes(net);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("write failed: " + path);
}

Network load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return from_bytes(bytes);
}

namespace {

constexpr std::uint32_t kDeltaMagic = 0x444E5346;  // "FSND"

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open: " + path);
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("write failed: " + path);
}

}  // namespace

void save_delta(const UpdateDelta& d, const std::string& path) {
  std::vector<std::uint8_t> out;
  write_raw(out, kDeltaMagic);
  write_raw(out, kVersion);
  write_raw(out, static_cast<std::uint32_t>(d.weights.size()));
  for (std::size_t li = 0; li < d.weights.size(); ++li) {
    write_raw(out, static_cast<std::uint32_t>(d.weights[li].rows));
    write_raw(out, static_cast<std::uint32_t>(d.weights[li].cols));
    for (double v : d.weights[li].data) write_raw(out, v);
    for (double v : d.biases[li]) write_raw(out, v);
  }
  write_file_bytes(out, path);
}

UpdateDelta load_delta(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  std::size_t pos = 0;
  if (read_raw<std::uint32_t>(bytes, pos) != kDeltaMagic) throw DataError("bad delta magic");
  if (read_raw<std::uint32_t>(bytes, pos) != kVersion) throw DataError("unsupported delta version");
  const auto n_layers = read_raw<std::uint32_t>(bytes, pos);
  UpdateDelta d;
  for (std::uint32_t li = 0; li < n_layers; ++li) {
    const auto rows = read_raw<std::uint32_t>(bytes, pos);
    const auto cols = read_raw<std::uint32_t>(bytes, pos);
    Matrix w(static_cast<int>(rows), static_cast<int>(cols));
    for (double& v : w.data) v = read_raw<double>(bytes, pos);
    std::vector<double> b(rows);
    for (double& v : b) v = read_raw<double>(bytes, pos);
    d.weights.push_back(std::move(w));
    d.biases.push_back(std::move(b));
  }
  if (pos != bytes.size()) throw DataError("trailing bytes in delta blob");
  return d;
}

bool equal_params(const Network& a, const Network& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t li = 0; li < a.layers.size(); ++li) {
    if (!a.layers[li].weights.same_shape(b.layers[li].weights)) return false;
    if (a.layers[li].weights.data != b.layers[li].weights.data) return false;
    if (a.layers[li].bias != b.layers[li].bias) return false;
    if (a.layers[li].activation != b.layers[li].activation) return false;
  }
  return true;
}

}  // namespace fedsniff::nn
