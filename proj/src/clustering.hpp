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

namespace fedsniff::cluster {

enum class Linkage { Single, Complete, Average };

Linkage linkage_from_string(const std::string& s);
std::string to_string(Linkage l);

/// One agglomerative merge. `a` and `b` are cluster ids (the smallest leaf
/// index inside each cluster), a < b; the merged cluster keeps id `a`.
struct Merge {
  int a = 0;
  int b = 0;
  double distance = 0.0;
};

struct Dendrogram {
  int leaves = 0;
  std::vector<Merge> merges;  // chronological; exactly leaves-1 entries

  double max_distance() const;  // 0 when there is at most one leaf
};

/// Agglomerative hierarchical clustering with Euclidean distance. Ties are
/// broken toward the pair with the lexicographically smallest (a, b) ids, so
/// the result is deterministic.
Dendrogram agglomerate(const std::vector<std::vector<double>>& points, Linkage linkage);

/// Applies merges with distance <= threshold; groups come back sorted by
/// smallest member, members ascending.
std::vector<std::vector<int>> cut_partition(const Dendrogram& dg, double threshold);

std::vector<std::vector<int>> cluster(const std::vector<std::vector<double>>& points,
                                      Linkage linkage, double cut);

}  // namespace fedsniff::cluster
