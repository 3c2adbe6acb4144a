// Copyright 2026-present the ganns project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "ganns/knn_graph.hpp"
#include "ganns/vector_set.hpp"

namespace ganns {

struct BuildParams {
    size_t k = 30;
    size_t rounds = 10;
    size_t cluster_cap = 50;
    uint64_t rng_seed = 42;
};

/// Splits `members` into two non-empty clusters by 2-means (Lloyd, at most
/// 20 iterations, random distinct-vector initialization). Clusters whose
/// members are all identical are split by id parity instead.
std::pair<std::vector<uint32_t>, std::vector<uint32_t>> two_means(
    const VectorSet& x, std::span<const uint32_t> members, std::mt19937_64& rng);

/// Recursive bisection by two_means until every cluster has at most
/// cluster_cap members. Clusters are disjoint and cover all ids.
std::vector<std::vector<uint32_t>> partition(const VectorSet& x, size_t cluster_cap,
                                             std::mt19937_64& rng);

/// Graph construction: `rounds` independent partitions, every within-cluster
/// pair evaluated and both neighbor lists updated. Deterministic given
/// params.rng_seed regardless of `threads` (clusters are disjoint, so
/// parallel rounds touch disjoint lists).
KnnGraph build_graph(const VectorSet& x, const BuildParams& params, size_t threads = 1);

}  // namespace ganns
