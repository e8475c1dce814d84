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

#include "clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "errors.hpp"

namespace fedsniff::cluster {

namespace {

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// Linkage distance between two clusters, evaluated over all member pairs.
// Clusters in this project are tiny (one per label class), so the naive
// O(|A||B|) evaluation is the simplest correct choice.
double linkage_distance(const std::vector<int>& a, const std::vector<int>& b,
                        const std::vector<std::vector<double>>& dist, Linkage linkage) {
  double best = linkage == Linkage::Single ? std::numeric_limits<double>::infinity() : 0.0;
  double sum = 0.0;
  for (int i : a) {
    for (int j : b) {
      const double d = dist[i][j];
      switch (linkage) {
        case Linkage::Single:
          best = std::min(best, d);
          break;
        case Linkage::Complete:
          best = std::max(best, d);
          break;
        case Linkage::Average:
          sum += d;
          break;
      }
    }
  }
  if (linkage == Linkage::Average) {
    return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
  }
  return best;
}

}  // namespace

Linkage linkage_from_string(const std::string& s) {
  if (s == "single") return Linkage::Single;
  if (s == "complete") return Linkage::Complete;
  if (s == "average") return Linkage::Average;
  throw ConfigError("unknown linkage: " + s);
}

std::string to_string(Linkage l) {
  switch (l) {
    case Linkage::Single:
      return "single";
    case Linkage::Complete:
      return "complete";
    case Linkage::Average:
      return "average";
  }
  return "?";
}

double Dendrogram::max_distance() const {
  double m = 0.0;
  for (const Merge& mg : merges) m = std::max(m, mg.distance);
  return m;
}

Dendrogram agglomerate(const std::vector<std::vector<double>>& points, Linkage linkage) {
  const int n = static_cast<int>(points.size());
  if (n == 0) throw UsageError("agglomerate: no points");
  for (const auto& p : points) {
    if (p.size() != points[0].size()) throw ShapeError("agglomerate: dimension mismatch");
  }

  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = euclidean(points[i], points[j]);
  }

  // Active clusters keyed by id = smallest contained leaf.
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<std::vector<int>> members(n);
  for (int i = 0; i < n; ++i) members[i] = {i};

  Dendrogram dg;
  dg.leaves = n;
  while (static_cast<int>(ids.size()) > 1) {
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = i + 1; j < ids.size(); ++j) {
        const double d = linkage_distance(members[ids[i]], members[ids[j]], dist, linkage);
        const int a = std::min(ids[i], ids[j]);
        const int b = std::max(ids[i], ids[j]);
        if (bi < 0 || d < best || (d == best && std::pair(a, b) < std::pair(bi, bj))) {
          best = d;
          bi = a;
          bj = b;
        }
      }
    }
    dg.merges.push_back({bi, bj, best});
    auto& dst = members[bi];
    dst.insert(dst.end(), members[bj].begin(), members[bj].end());
    std::sort(dst.begin(), dst.end());
    members[bj].clear();
    ids.erase(std::remove(ids.begin(), ids.end(), bj), ids.end());
  }
  return dg;
}

std::vector<std::vector<int>> cut_partition(const Dendrogram& dg, double threshold) {
  std::vector<int> parent(dg.leaves);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  // Merge distances are non-decreasing for the supported linkages, so
  // stopping at the first merge above the threshold is exact.
  for (const Merge& m : dg.merges) {
    if (m.distance > threshold) break;
    const int ra = find(m.a);
    const int rb = find(m.b);
    parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<std::vector<int>> groups(dg.leaves);
  for (int i = 0; i < dg.leaves; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& g : groups) {
    if (!g.empty()) out.push_back(std::move(g));
  }
  return out;  // already sorted by smallest member because roots are minima
}

std::vector<std::vector<int>> cluster(const std::vector<std::vector<double>>& points,
                                      Linkage linkage, double cut) {
  return cut_partition(agglomerate(points, linkage), cut);
}

}  // namespace fedsniff::cluster
