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
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "ganns/hill_climb.hpp"
#include "ganns/knn_graph.hpp"
#include "ganns/rvq.hpp"
#include "ganns/vector_set.hpp"

namespace ganns {

/// Budgets for inverted-list seed selection.
struct SeedBudget {
    size_t l1_keep = 64;      // first-order words surviving the cascade
    size_t keys_probed = 256; // inverted lists visited per query
    size_t max_seeds = 64;    // cap on seeds handed to the graph search
};

/// Mixed-radix key for the leading `stage_sizes.size()` entries of a code:
/// key = ((c1·K2 + c2)·K3 + c3)·…, bijective with code tuples.
uint64_t compose_key(const RvqCode& code, std::span<const uint32_t> stage_sizes);

/// Inverted lists over composed codes, stored sparsely: only non-empty keys
/// appear, sorted ascending, each holding its member ids in ascending order.
class InvertedIndex {
public:
    InvertedIndex() = default;
    InvertedIndex(std::vector<uint32_t> stage_sizes, std::vector<uint64_t> keys,
                  std::vector<uint64_t> offsets, std::vector<uint32_t> ids);

    size_t vector_count() const { return ids_.size(); }
    std::span<const uint32_t> stage_sizes() const { return stage_sizes_; }
    size_t key_count() const { return keys_.size(); }
    uint64_t key_at(size_t pos) const { return keys_[pos]; }

    std::span<const uint32_t> list_at(size_t pos) const {
        return {ids_.data() + offsets_[pos], static_cast<size_t>(offsets_[pos + 1] - offsets_[pos])};
    }

    /// Position of `key` among the non-empty keys, or key_count() if absent.
    size_t find(uint64_t key) const;

    /// [begin, end) positions of the non-empty keys in [lo_key, hi_key).
    std::pair<size_t, size_t> key_range(uint64_t lo_key, uint64_t hi_key) const;

    size_t max_list_length() const;

    void save(const std::filesystem::path& path) const;
    static InvertedIndex load(const std::filesystem::path& path);

    friend bool operator==(const InvertedIndex&, const InvertedIndex&) = default;

private:
    void validate() const;

    std::vector<uint32_t> stage_sizes_;
    std::vector<uint64_t> keys_;
    std::vector<uint64_t> offsets_;  // keys_.size() + 1 entries
    std::vector<uint32_t> ids_;
};

/// Groups ids by composed key. Codes may be longer than stage_sizes; only
/// the leading stages participate in the key.
InvertedIndex build_index(std::span<const RvqCode> codes, std::span<const uint32_t> stage_sizes);

/// Per-query lookup tables: q·w for every word of every stage, plus q·q.
struct QueryTables {
    std::vector<std::vector<float>> ip;
    double qq = 0.0;
};

QueryTables build_query_tables(std::span<const float> q, const RvqModel& model);

/// Query-independent tables over the two indexing stages: pairwise word
/// inner products and per-word squared norms.
struct CrossTermTable {
    size_t k1 = 0;
    size_t k2 = 0;
    std::vector<float> cross;  // k1×k2 row-major: w1·w2
    std::vector<float> norm1;  // per first-stage word squared norm
    std::vector<float> norm2;
};

CrossTermTable build_cross_terms(const RvqModel& model);

/// Squared distance between the query behind `qt` and the decoded key
/// (w1[c1] + w2[c2]), computed purely from table lookups:
/// d = q·q − 2(w1+w2)·q + (‖w1‖² + 2·w1·w2 + ‖w2‖²).
double key_distance(const QueryTables& qt, const CrossTermTable& ct, uint32_t c1, uint32_t c2);

/// Two-term cascade: rank first-stage words by −2·w1·q + ‖w1‖², keep the
/// best l1_keep, then order every surviving non-empty key by full
/// key_distance. Returns up to keys_probed keys, ascending (distance, key).
std::vector<uint64_t> cascade_shortlist(const QueryTables& qt, const CrossTermTable& ct,
                                        const InvertedIndex& index, const SeedBudget& budget);

/// Concatenates list members in key-rank order (ascending id within a
/// list), truncated to max_seeds.
std::vector<uint32_t> collect_seeds(std::span<const uint64_t> keys, const InvertedIndex& index,
                                    const SeedBudget& budget);

/// Full pipeline: query tables, cascade, seed collection, then hill-climb.
/// Falls back to params.seed_count random seeds when the index yields none.
/// `ct` must be built from `model`; it is query-independent and passed in
/// so per-query work stays table lookups only.
RankList ivf_egnns_search(std::span<const float> q, const RvqModel& model,
                          const CrossTermTable& ct, const InvertedIndex& index, const KnnGraph& g,
                          const VectorSet& x, const SeedBudget& budget, const SearchParams& params,
                          std::mt19937_64& rng, SearchStats* stats = nullptr);

/// Encodes every row of x. Thread count never changes the result.
std::vector<RvqCode> encode_all(const VectorSet& x, const RvqModel& model, size_t threads = 1);

}  // namespace ganns
