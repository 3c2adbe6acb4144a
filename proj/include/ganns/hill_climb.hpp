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

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ganns/knn_graph.hpp"
#include "ganns/vector_set.hpp"

namespace ganns {

struct SearchParams {
    size_t iterations = 10;    // t0: hill-climbing rounds
    size_t expand_width = 8;   // p: rank-list entries expanded per round; 1 reproduces GNNS
    size_t result_size = 10;   // entries reported
    size_t seed_count = 64;    // seeds drawn when seeding is random
};

struct SearchStats {
    size_t distance_evals = 0;
    size_t iterations_run = 0;
};

/// Bounded rank list ordered ascending by (distance, id), with a visited set
/// marking entries whose neighbor lists were already expanded.
class RankList {
public:
    explicit RankList(size_t capacity);

    /// False when the entry is already present, or the list is full and the
    /// entry loses to the current worst. An id must always be offered with
    /// the same distance (distances are a function of the id per query), so
    /// presence is detected by the (distance, id) pair.
    bool insert(uint32_t id, float dist);

    void mark_visited(uint32_t id);
    bool is_visited(uint32_t id) const {
        return std::binary_search(visited_ids_.begin(), visited_ids_.end(), id);
    }

    /// Ids of the best `width` entries not yet expanded, in rank order.
    std::vector<uint32_t> top_unvisited(size_t width) const;

    /// Drops all entries beyond the best `size`.
    void truncate(size_t size);

    std::span<const Neighbor> entries() const { return entries_; }
    size_t capacity() const { return capacity_; }

private:
    size_t capacity_;
    std::vector<Neighbor> entries_;
    // Invariant: expanded_[i] is 1 exactly when entries_[i].id is in
    // visited_ids_. The positional flags make frontier scans O(1) per entry;
    // the sorted id list keeps marks alive across eviction.
    std::vector<uint8_t> expanded_;
    std::vector<uint32_t> visited_ids_;
    // Cache: every entry at a position below scan_hint_ is visited, so
    // top_unvisited can skip the settled prefix instead of rescanning it.
    mutable size_t scan_hint_ = 0;
};

/// `count` distinct ids drawn uniformly without replacement from [0, n).
std::vector<uint32_t> random_seeds(size_t n, size_t count, std::mt19937_64& rng);

/// Enhanced hill-climbing search: seeds fill the rank list, then each
/// iteration expands the neighbor lists of the top expand_width unexpanded
/// entries, merging new candidates at iteration end. Terminates early when
/// an iteration adds nothing. Returns the top result_size entries.
RankList egnns_search(std::span<const float> q, const KnnGraph& g, const VectorSet& x,
                      std::span<const uint32_t> seeds, const SearchParams& params,
                      SearchStats* stats = nullptr);

/// Original hill-climbing procedure: expand_width forced to 1.
RankList gnns_search(std::span<const float> q, const KnnGraph& g, const VectorSet& x,
                     std::span<const uint32_t> seeds, const SearchParams& params,
                     SearchStats* stats = nullptr);

}  // namespace ganns
