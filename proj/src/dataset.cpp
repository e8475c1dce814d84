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

#include "dataset.hpp"

#include <cmath>
#include <fstream>

#include "errors.hpp"

namespace fedsniff::data {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_u32_be(std::ifstream& f, const std::string& path) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (!f) throw DataError("truncated IDX file: " + path);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

}  // namespace

LabeledDataset gen_synthetic(int k, int dim, int per_class, double spread, Rng& rng) {
  if (k < 2) throw UsageError("gen_synthetic: k must be >= 2");
  if (dim < 2) throw UsageError("gen_synthetic: dim must be >= 2");
  if (per_class < 1) throw UsageError("gen_synthetic: per_class must be >= 1");
  if (spread < 0.0) throw UsageError("gen_synthetic: spread must be non-negative");

  LabeledDataset ds;
  ds.k = k;
  ds.samples = Matrix(k * per_class, dim);
  ds.labels.assign(static_cast<std::size_t>(k) * per_class, 0);
  int row = 0;
  for (int c = 0; c < k; ++c) {
    // Mean of class c: one-hot corner at axis c%dim, pushed out one unit per
    // wrap so all k means stay distinct even when dim < k.
    const int axis = c % dim;
    const double scale = 1.0 + static_cast<double>(c / dim);
    for (int s = 0; s < per_class; ++s, ++row) {
      double* x = ds.samples.row(row);
      for (int d = 0; d < dim; ++d) {
        const double mean = d == axis ? scale : 0.0;
        x[d] = mean + spread * rng.normal();
      }
      ds.labels[row] = c;
    }
  }
  return ds;
}

LabeledDataset load_mnist(const std::string& images_path, const std::string& labels_path) {
  std::ifstream imgf(images_path, std::ios::binary);
  if (!imgf) throw DataError("cannot open: " + images_path);
  if (read_u32_be(imgf, images_path) != kImageMagic) {
    throw DataError("bad image magic number: " + images_path);
  }
  const std::uint32_t n_images = read_u32_be(imgf, images_path);
  const std::uint32_t rows = read_u32_be(imgf, images_path);
  const std::uint32_t cols = read_u32_be(imgf, images_path);

  std::ifstream lblf(labels_path, std::ios::binary);
  if (!lblf) throw DataError("cannot open: " + labels_path);
  if (read_u32_be(lblf, labels_path) != kLabelMagic) {
    throw DataError("bad label magic number: " + labels_path);
  }
  const std::uint32_t n_labels = read_u32_be(lblf, labels_path);
  if (n_images != n_labels) {
    throw DataError("image/label count mismatch: " + std::to_string(n_images) + " vs " +
                    std::to_string(n_labels));
  }

  LabeledDataset ds;
  ds.k = 10;
  const int dim = static_cast<int>(rows * cols);
  ds.samples = Matrix(static_cast<int>(n_images), dim);
  ds.labels.assign(n_images, 0);

  std::vector<unsigned char> buf(static_cast<std::size_t>(n_images) * dim);
  imgf.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!imgf) throw DataError("truncated IDX file: " + images_path);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    ds.samples.data[i] = static_cast<double>(buf[i]) / 255.0;
  }

  std::vector<unsigned char> lbl(n_images);
  lblf.read(reinterpret_cast<char*>(lbl.data()), static_cast<std::streamsize>(lbl.size()));
  if (!lblf) throw DataError("truncated IDX file: " + labels_path);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    if (lbl[i] >= 10) throw DataError("label out of range in " + labels_path);
    ds.labels[i] = lbl[i];
  }
  return ds;
}

std::vector<std::vector<int>> partition_by_class(const LabeledDataset& ds) {
  std::vector<std::vector<int>> parts(ds.k);
  for (int i = 0; i < ds.size(); ++i) parts[ds.labels[i]].push_back(i);
  return parts;
}

}  // namespace fedsniff::data
