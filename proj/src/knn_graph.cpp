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

#include "ganns/knn_graph.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "ganns/io.hpp"

namespace ganns {

namespace {

constexpr uint32_t kGraphMagic = 0x474E4E47;  // bytes "GNNG" on disk
constexpr uint32_t kGraphVersion = 1;

}  // namespace

bool update_neighbor_list(std::vector<Neighbor>& list, size_t k, uint32_t candidate_id,
                          float distance) {
    for (const Neighbor& nb : list) {
        if (nb.id == candidate_id) return false;
    }
    const Neighbor cand{candidate_id, distance};
    if (list.size() >= k && !neighbor_less(cand, list.back())) return false;
    list.insert(std::upper_bound(list.begin(), list.end(), cand, neighbor_less), cand);
    if (list.size() > k) list.pop_back();
    return true;
}

KnnGraph::KnnGraph(size_t k, std::vector<std::vector<Neighbor>> lists) : count_(lists.size()), k_(k) {
    flat_.reserve(count_ * k_);
    for (size_t i = 0; i < lists.size(); ++i) {
        if (lists[i].size() != k_) {
            throw std::invalid_argument("node " + std::to_string(i) + " has " +
                                        std::to_string(lists[i].size()) + " neighbors, expected " +
                                        std::to_string(k_));
        }
        flat_.insert(flat_.end(), lists[i].begin(), lists[i].end());
    }
    validate();
}

KnnGraph::KnnGraph(size_t count, size_t k, std::vector<Neighbor> flat)
    : count_(count), k_(k), flat_(std::move(flat)) {
    validate();
}

void KnnGraph::validate() const {
    if (k_ == 0) throw std::invalid_argument("graph k must be at least 1");
    if (flat_.size() != count_ * k_) throw std::invalid_argument("graph storage size mismatch");
    std::vector<uint32_t> ids(k_);
    for (size_t i = 0; i < count_; ++i) {
        const auto list = neighbors(i);
        for (size_t j = 0; j < k_; ++j) {
            if (list[j].id == i) {
                throw std::invalid_argument("node " + std::to_string(i) +
                                            " lists itself as a neighbor");
            }
            if (list[j].id >= count_) {
                throw std::invalid_argument("node " + std::to_string(i) +
                                            " has an out-of-range neighbor id");
            }
            if (j > 0 && !neighbor_less(list[j - 1], list[j])) {
                throw std::invalid_argument("node " + std::to_string(i) +
                                            " neighbor list is not sorted by (distance, id)");
            }
            ids[j] = list[j].id;
        }
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
            throw std::invalid_argument("node " + std::to_string(i) +
                                        " has duplicate neighbor ids");
        }
    }
}

void KnnGraph::save(const std::filesystem::path& path) const {
    atomic_write_file(path, [&](std::ostream& out) {
        detail::put_u32(out, kGraphMagic);
        detail::put_u32(out, kGraphVersion);
        detail::put_u32(out, static_cast<uint32_t>(count_));
        detail::put_u32(out, static_cast<uint32_t>(k_));
        for (const Neighbor& nb : flat_) {
            detail::put_u32(out, nb.id);
            detail::put_f32(out, nb.dist);
        }
    });
}

KnnGraph KnnGraph::load(const std::filesystem::path& path) {
    std::ifstream in = detail::open_input(path);
    const std::string name = path.string();
    detail::expect_magic(in, kGraphMagic, name);
    const uint32_t version = detail::get_u32(in, name + ": version");
    if (version != kGraphVersion) {
        throw std::runtime_error(name + ": unsupported graph file version " +
                                 std::to_string(version));
    }
    const uint32_t n = detail::get_u32(in, name + ": node count");
    const uint32_t k = detail::get_u32(in, name + ": k");
    std::vector<Neighbor> flat;
    flat.reserve(size_t(n) * k);
    for (uint64_t i = 0; i < uint64_t(n) * k; ++i) {
        const uint32_t id = detail::get_u32(in, name + ": neighbor id");
        const float dist = detail::get_f32(in, name + ": neighbor distance");
        flat.push_back({id, dist});
    }
    detail::expect_eof(in, name);
    try {
        return KnnGraph(n, k, std::move(flat));
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(name + ": invalid graph content: " + e.what());
    }
}

KnnGraph exact_graph(const VectorSet& x, size_t k) {
    if (x.count() <= k) {
        throw std::invalid_argument("exact_graph requires more vectors than k");
    }
    const size_t n = x.count();
    std::vector<std::vector<Neighbor>> lists(n);
    std::vector<Neighbor> all;
    all.reserve(n - 1);
    for (size_t i = 0; i < n; ++i) {
        all.clear();
        const auto row = x.row(i);
        for (size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            all.push_back({static_cast<uint32_t>(j), squared_l2(row, x.row(j))});
        }
        std::nth_element(all.begin(), all.begin() + static_cast<ptrdiff_t>(k - 1), all.end(),
                         neighbor_less);
        all.resize(k);
        std::sort(all.begin(), all.end(), neighbor_less);
        lists[i] = all;
    }
    return KnnGraph(k, std::move(lists));
}

double graph_recall(const KnnGraph& g, const KnnGraph& exact, size_t at) {
    if (g.count() != exact.count()) {
        throw std::invalid_argument("graph_recall: node counts differ (" +
                                    std::to_string(g.count()) + " vs " +
                                    std::to_string(exact.count()) + ")");
    }
    if (at == 0 || at > g.k() || at > exact.k()) {
        throw std::invalid_argument("graph_recall: at must be in [1, k] of both graphs");
    }
    size_t hits = 0;
    for (size_t i = 0; i < g.count(); ++i) {
        const auto got = g.neighbors(i);
        const auto want = exact.neighbors(i);
        for (size_t a = 0; a < at; ++a) {
            for (size_t b = 0; b < at; ++b) {
                if (got[a].id == want[b].id) {
                    ++hits;
                    break;
                }
            }
        }
    }
    return static_cast<double>(hits) / (static_cast<double>(g.count()) * static_cast<double>(at));
}

}  // namespace ganns
