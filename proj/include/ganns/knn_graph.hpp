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
#include <filesystem>
#include <span>
#include <vector>

#include "ganns/vector_set.hpp"

namespace ganns {

struct Neighbor {
    uint32_t id;
    float dist;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Ordering used for every neighbor list and rank list in the project:
/// ascending distance, ties broken by ascending id.
inline bool neighbor_less(const Neighbor& a, const Neighbor& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.id < b.id;
}

/// Inserts (candidate_id, distance) into a sorted neighbor list capped at k
/// entries. Returns false without modifying the list when the candidate id
/// is already present, or when the list is full and the candidate does not
/// beat the current worst entry. The caller must not pass the list owner's
/// own id.
bool update_neighbor_list(std::vector<Neighbor>& list, size_t k, uint32_t candidate_id,
                          float distance);

/// Immutable kNN graph: `count` nodes, each with exactly `k` neighbors
/// sorted ascending by (distance, id). Lists never contain the owning node
/// or duplicates; the constructor enforces all of this.
class KnnGraph {
public:
    KnnGraph(size_t k, std::vector<std::vector<Neighbor>> lists);

    size_t count() const { return count_; }
    size_t k() const { return k_; }

    std::span<const Neighbor> neighbors(size_t node) const {
        return {flat_.data() + node * k_, k_};
    }

    void save(const std::filesystem::path& path) const;
    static KnnGraph load(const std::filesystem::path& path);

    friend bool operator==(const KnnGraph&, const KnnGraph&) = default;

private:
    KnnGraph(size_t count, size_t k, std::vector<Neighbor> flat);
    void validate() const;

    size_t count_ = 0;
    size_t k_ = 0;
    std::vector<Neighbor> flat_;
};

/// Exact k nearest neighbors for every node by full pairwise scan. The
/// O(n²·D) oracle that graph construction is measured against.
KnnGraph exact_graph(const VectorSet& x, size_t k);

/// Mean over nodes of |top-at(g) ∩ top-at(exact)| / at.
double graph_recall(const KnnGraph& g, const KnnGraph& exact, size_t at);

}  // namespace ganns
