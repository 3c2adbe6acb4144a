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

#include "ganns/hill_climb.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace ganns {

RankList::RankList(size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("RankList capacity must be at least 1");
    entries_.reserve(capacity);
    expanded_.reserve(capacity);
}

bool RankList::insert(uint32_t id, float dist) {
    const Neighbor cand{id, dist};
    const size_t pos = static_cast<size_t>(
        std::lower_bound(entries_.begin(), entries_.end(), cand, neighbor_less) -
        entries_.begin());
    if (pos < entries_.size() && entries_[pos] == cand) return false;
    if (entries_.size() >= capacity_) {
        // pos past the end means the candidate loses to the current worst.
        if (pos >= entries_.size()) return false;
        entries_.pop_back();
        expanded_.pop_back();
    }
    entries_.insert(entries_.begin() + pos, cand);
    expanded_.insert(expanded_.begin() + pos, is_visited(id) ? 1 : 0);
    scan_hint_ = std::min(scan_hint_, pos);
    return true;
}

void RankList::mark_visited(uint32_t id) {
    const auto it = std::lower_bound(visited_ids_.begin(), visited_ids_.end(), id);
    if (it != visited_ids_.end() && *it == id) return;
    visited_ids_.insert(it, id);
    // Entries below the hint already carry the flag, so start there.
    for (size_t i = scan_hint_; i < entries_.size(); ++i) {
        if (entries_[i].id == id) {
            expanded_[i] = 1;
            break;
        }
    }
}

std::vector<uint32_t> RankList::top_unvisited(size_t width) const {
    size_t pos = scan_hint_;
    while (pos < entries_.size() && expanded_[pos]) ++pos;
    scan_hint_ = pos;

    std::vector<uint32_t> out;
    out.reserve(width);
    for (; pos < entries_.size() && out.size() < width; ++pos) {
        if (!expanded_[pos]) out.push_back(entries_[pos].id);
    }
    return out;
}

void RankList::truncate(size_t size) {
    if (entries_.size() > size) {
        entries_.resize(size);
        expanded_.resize(size);
    }
    scan_hint_ = std::min(scan_hint_, entries_.size());
}

std::vector<uint32_t> random_seeds(size_t n, size_t count, std::mt19937_64& rng) {
    if (count < 1 || count > n) {
        throw std::invalid_argument("random_seeds: count must be in [1, n]");
    }
    // Partial Fisher-Yates over a virtual identity array; only displaced
    // slots are materialized, so large n costs O(count) memory.
    std::unordered_map<size_t, size_t> displaced;
    std::vector<uint32_t> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        const size_t j = std::uniform_int_distribution<size_t>(i, n - 1)(rng);
        const auto it_i = displaced.find(i);
        const size_t vi = it_i == displaced.end() ? i : it_i->second;
        const auto it_j = displaced.find(j);
        const size_t vj = it_j == displaced.end() ? j : it_j->second;
        out.push_back(static_cast<uint32_t>(vj));
        displaced[j] = vi;
    }
    return out;
}

RankList egnns_search(std::span<const float> q, const KnnGraph& g, const VectorSet& x,
                      std::span<const uint32_t> seeds, const SearchParams& params,
                      SearchStats* stats) {
    if (seeds.empty()) throw std::invalid_argument("egnns_search: seeds must be non-empty");
    if (q.size() != x.dim()) {
        throw std::invalid_argument("egnns_search: query dimension " + std::to_string(q.size()) +
                                    " does not match data dimension " + std::to_string(x.dim()));
    }
    if (params.expand_width < 1 || params.result_size < 1) {
        throw std::invalid_argument("egnns_search: expand_width and result_size must be >= 1");
    }

    SearchStats local;
    SearchStats& st = stats ? *stats : local;
    st = SearchStats{};

    const size_t capacity = std::max(params.result_size, params.expand_width * g.k() * 2);
    RankList r(capacity);
    // Flat per-id flags beat a hash set here: every id is probed at most a
    // handful of times and n is known, so the memset is the only real cost.
    std::vector<uint8_t> evaluated(x.count(), 0);

    for (uint32_t s : seeds) {
        if (s >= x.count()) throw std::invalid_argument("egnns_search: seed id out of range");
        if (evaluated[s]) continue;
        evaluated[s] = 1;
        ++st.distance_evals;
        r.insert(s, squared_l2(q, x.row(s)));
    }

    std::vector<Neighbor> fresh;
    for (size_t t = 0; t < params.iterations; ++t) {
        const auto expand = r.top_unvisited(params.expand_width);
        if (expand.empty()) break;
        fresh.clear();
        for (uint32_t id : expand) {
            r.mark_visited(id);
            for (const Neighbor& nb : g.neighbors(id)) {
                if (evaluated[nb.id]) continue;
                evaluated[nb.id] = 1;
                ++st.distance_evals;
                fresh.push_back({nb.id, squared_l2(q, x.row(nb.id))});
            }
        }
        ++st.iterations_run;
        bool any_new = false;
        for (const Neighbor& cand : fresh) {
            if (r.insert(cand.id, cand.dist)) any_new = true;
        }
        if (!any_new) break;
    }

    r.truncate(params.result_size);
    return r;
}

RankList gnns_search(std::span<const float> q, const KnnGraph& g, const VectorSet& x,
                     std::span<const uint32_t> seeds, const SearchParams& params,
                     SearchStats* stats) {
    SearchParams p = params;
    p.expand_width = 1;
    return egnns_search(q, g, x, seeds, p, stats);
}

}  // namespace ganns
