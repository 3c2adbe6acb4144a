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

#include "ganns/graph_build.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <stdexcept>
#include <thread>

namespace ganns {

namespace {

constexpr int kLloydCap = 20;

bool same_vector(std::span<const float> a, std::span<const float> b) {
    return std::equal(a.begin(), a.end(), b.begin());
}

// Squared distance from a float row to a double-precision centroid.
double dist_to_centroid(std::span<const float> v, const std::vector<double>& c) {
    double acc = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        const double d = static_cast<double>(v[i]) - c[i];
        acc += d * d;
    }
    return acc;
}

// Degenerate split for clusters of identical vectors: even ids left, odd ids
// right. If every member shares parity that would empty one side, so fall
// back to alternating positions, which always yields two non-empty sides.
std::pair<std::vector<uint32_t>, std::vector<uint32_t>> parity_split(
    std::span<const uint32_t> members) {
    std::vector<uint32_t> left, right;
    for (uint32_t id : members) {
        (id % 2 == 0 ? left : right).push_back(id);
    }
    if (left.empty() || right.empty()) {
        left.clear();
        right.clear();
        for (size_t pos = 0; pos < members.size(); ++pos) {
            (pos % 2 == 0 ? left : right).push_back(members[pos]);
        }
    }
    return {std::move(left), std::move(right)};
}

}  // namespace

std::pair<std::vector<uint32_t>, std::vector<uint32_t>> two_means(
    const VectorSet& x, std::span<const uint32_t> members, std::mt19937_64& rng) {
    if (members.size() < 2) {
        throw std::invalid_argument("two_means requires at least 2 members");
    }
    const size_t m = members.size();
    const size_t dim = x.dim();

    // Initialize with two members whose vectors differ. If none differ from
    // the first pick, the whole cluster is one repeated vector.
    const size_t ia = std::uniform_int_distribution<size_t>(0, m - 1)(rng);
    const auto va = x.row(members[ia]);
    std::vector<size_t> distinct;
    for (size_t pos = 0; pos < m; ++pos) {
        if (!same_vector(x.row(members[pos]), va)) distinct.push_back(pos);
    }
    if (distinct.empty()) {
        return parity_split(members);
    }
    const size_t ib = distinct[std::uniform_int_distribution<size_t>(0, distinct.size() - 1)(rng)];

    std::vector<double> ca(va.begin(), va.end());
    std::vector<double> cb(x.row(members[ib]).begin(), x.row(members[ib]).end());
    std::vector<char> side(m, 0);

    for (int iter = 0; iter < kLloydCap; ++iter) {
        bool changed = false;
        size_t left_count = 0;
        for (size_t pos = 0; pos < m; ++pos) {
            const auto v = x.row(members[pos]);
            const char s = dist_to_centroid(v, ca) <= dist_to_centroid(v, cb) ? 0 : 1;
            if (s != side[pos]) {
                side[pos] = s;
                changed = true;
            }
            if (s == 0) ++left_count;
        }

        // Empty-side repair: move the member farthest from the surviving
        // centroid across (ties broken by lowest id).
        if (left_count == 0 || left_count == m) {
            const char full_side = left_count == 0 ? 1 : 0;
            const std::vector<double>& c = full_side == 0 ? ca : cb;
            size_t worst_pos = 0;
            double worst_d = -1.0;
            for (size_t pos = 0; pos < m; ++pos) {
                const double d = dist_to_centroid(x.row(members[pos]), c);
                if (d > worst_d || (d == worst_d && members[pos] < members[worst_pos])) {
                    worst_d = d;
                    worst_pos = pos;
                }
            }
            side[worst_pos] = full_side == 0 ? 1 : 0;
            left_count = full_side == 0 ? m - 1 : 1;
            changed = true;
        }

        if (!changed && iter > 0) break;

        std::fill(ca.begin(), ca.end(), 0.0);
        std::fill(cb.begin(), cb.end(), 0.0);
        for (size_t pos = 0; pos < m; ++pos) {
            const auto v = x.row(members[pos]);
            std::vector<double>& c = side[pos] == 0 ? ca : cb;
            for (size_t d = 0; d < dim; ++d) c[d] += v[d];
        }
        const double nl = static_cast<double>(left_count);
        const double nr = static_cast<double>(m - left_count);
        for (size_t d = 0; d < dim; ++d) {
            ca[d] /= nl;
            cb[d] /= nr;
        }
    }

    std::vector<uint32_t> left, right;
    for (size_t pos = 0; pos < m; ++pos) {
        (side[pos] == 0 ? left : right).push_back(members[pos]);
    }
    return {std::move(left), std::move(right)};
}

std::vector<std::vector<uint32_t>> partition(const VectorSet& x, size_t cluster_cap,
                                             std::mt19937_64& rng) {
    if (cluster_cap < 2) throw std::invalid_argument("cluster_cap must be at least 2");
    if (x.count() == 0) throw std::invalid_argument("cannot partition an empty set");
    std::vector<uint32_t> all(x.count());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<uint32_t>(i);

    std::vector<std::vector<uint32_t>> out;
    std::vector<std::vector<uint32_t>> work;
    work.push_back(std::move(all));
    while (!work.empty()) {
        std::vector<uint32_t> cluster = std::move(work.back());
        work.pop_back();
        if (cluster.size() <= cluster_cap) {
            out.push_back(std::move(cluster));
            continue;
        }
        auto [left, right] = two_means(x, cluster, rng);
        work.push_back(std::move(right));
        work.push_back(std::move(left));
    }
    return out;
}

namespace {

// Evaluates every pair inside one cluster and updates both lists. Safe to
// run concurrently for different clusters of the same round: clusters are
// disjoint, so no two threads ever touch the same list.
void refine_cluster(const VectorSet& x, std::span<const uint32_t> cluster, size_t k,
                    std::vector<std::vector<Neighbor>>& lists) {
    for (size_t a = 0; a < cluster.size(); ++a) {
        const uint32_t i = cluster[a];
        const auto vi = x.row(i);
        for (size_t b = a + 1; b < cluster.size(); ++b) {
            const uint32_t j = cluster[b];
            const float d = squared_l2(vi, x.row(j));
            update_neighbor_list(lists[i], k, j, d);
            update_neighbor_list(lists[j], k, i, d);
        }
    }
}

}  // namespace

KnnGraph build_graph(const VectorSet& x, const BuildParams& params, size_t threads) {
    if (params.k < 1) throw std::invalid_argument("k must be at least 1");
    if (params.rounds < 1) throw std::invalid_argument("rounds must be at least 1");
    if (params.cluster_cap < 2) throw std::invalid_argument("cluster_cap must be at least 2");
    if (x.count() <= params.k) {
        throw std::invalid_argument("build_graph requires more vectors than k (" +
                                    std::to_string(x.count()) + " vectors, k=" +
                                    std::to_string(params.k) + ")");
    }
    if (threads == 0) threads = 1;

    const size_t n = x.count();
    std::mt19937_64 rng(params.rng_seed);
    std::vector<std::vector<Neighbor>> lists(n);
    for (auto& l : lists) l.reserve(params.k + 1);

    for (size_t round = 0; round < params.rounds; ++round) {
        // The partition consumes the single RNG stream serially, which is
        // what makes thread count irrelevant to the output.
        const auto clusters = partition(x, params.cluster_cap, rng);
        if (threads == 1 || clusters.size() == 1) {
            for (const auto& cluster : clusters) {
                refine_cluster(x, cluster, params.k, lists);
            }
        } else {
            std::atomic<size_t> next{0};
            std::vector<std::thread> pool;
            const size_t workers = std::min(threads, clusters.size());
            pool.reserve(workers);
            for (size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (size_t c = next.fetch_add(1); c < clusters.size();
                         c = next.fetch_add(1)) {
                        refine_cluster(x, clusters[c], params.k, lists);
                    }
                });
            }
            for (auto& t : pool) t.join();
        }
    }

    // Top-up pass: tiny caps or heavily degenerate data can leave a list
    // short of k distinct candidates. Scan ids in order until full so the
    // finished graph always has exactly k entries per node.
    for (size_t i = 0; i < n; ++i) {
        for (uint32_t j = 0; lists[i].size() < params.k && j < n; ++j) {
            if (j == i) continue;
            update_neighbor_list(lists[i], params.k, j, squared_l2(x.row(i), x.row(j)));
        }
    }

    return KnnGraph(params.k, std::move(lists));
}

}  // namespace ganns
