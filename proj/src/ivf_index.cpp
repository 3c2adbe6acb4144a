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

#include "ganns/ivf_index.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <thread>

#include "ganns/io.hpp"

namespace ganns {

namespace {

constexpr uint32_t kIndexMagic = 0x494E4E47;  // bytes "GNNI" on disk
constexpr uint32_t kIndexVersion = 1;

}  // namespace

uint64_t compose_key(const RvqCode& code, std::span<const uint32_t> stage_sizes) {
    if (stage_sizes.empty()) throw std::invalid_argument("compose_key: no stage sizes");
    if (code.size() < stage_sizes.size()) {
        throw std::invalid_argument("compose_key: code has " + std::to_string(code.size()) +
                                    " stages, key needs " + std::to_string(stage_sizes.size()));
    }
    uint64_t key = 0;
    for (size_t s = 0; s < stage_sizes.size(); ++s) {
        if (stage_sizes[s] == 0) throw std::invalid_argument("compose_key: zero stage size");
        if (code[s] >= stage_sizes[s]) {
            throw std::invalid_argument("compose_key: stage " + std::to_string(s) + " index " +
                                        std::to_string(code[s]) + " out of range [0, " +
                                        std::to_string(stage_sizes[s]) + ")");
        }
        key = key * stage_sizes[s] + code[s];
    }
    return key;
}

InvertedIndex::InvertedIndex(std::vector<uint32_t> stage_sizes, std::vector<uint64_t> keys,
                             std::vector<uint64_t> offsets, std::vector<uint32_t> ids)
    : stage_sizes_(std::move(stage_sizes)),
      keys_(std::move(keys)),
      offsets_(std::move(offsets)),
      ids_(std::move(ids)) {
    validate();
}

void InvertedIndex::validate() const {
    if (stage_sizes_.empty()) throw std::invalid_argument("index has no stage sizes");
    for (uint32_t s : stage_sizes_) {
        if (s == 0) throw std::invalid_argument("index stage sizes must be positive");
    }
    if (offsets_.size() != keys_.size() + 1 || (offsets_.empty() ? true : offsets_.front() != 0) ||
        offsets_.back() != ids_.size()) {
        throw std::invalid_argument("index offsets are inconsistent");
    }
    uint64_t keyspace = 1;
    bool keyspace_bounded = true;
    for (uint32_t s : stage_sizes_) {
        if (keyspace > UINT64_MAX / s) {
            keyspace_bounded = false;
            break;
        }
        keyspace *= s;
    }
    for (size_t p = 0; p < keys_.size(); ++p) {
        if (p > 0 && keys_[p - 1] >= keys_[p]) {
            throw std::invalid_argument("index keys are not strictly ascending");
        }
        if (keyspace_bounded && keys_[p] >= keyspace) {
            throw std::invalid_argument("index key exceeds the stage-size keyspace");
        }
        if (offsets_[p] >= offsets_[p + 1]) {
            throw std::invalid_argument("index stores an empty list");
        }
    }
    // Every id exactly once across all lists, ascending within each list.
    std::vector<bool> seen(ids_.size(), false);
    for (size_t p = 0; p < keys_.size(); ++p) {
        const auto list = list_at(p);
        for (size_t i = 0; i < list.size(); ++i) {
            if (list[i] >= ids_.size() || seen[list[i]]) {
                throw std::invalid_argument("index lists do not partition [0, n)");
            }
            seen[list[i]] = true;
            if (i > 0 && list[i - 1] >= list[i]) {
                throw std::invalid_argument("index list ids are not ascending");
            }
        }
    }
}

size_t InvertedIndex::find(uint64_t key) const {
    const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    if (it == keys_.end() || *it != key) return keys_.size();
    return static_cast<size_t>(it - keys_.begin());
}

std::pair<size_t, size_t> InvertedIndex::key_range(uint64_t lo_key, uint64_t hi_key) const {
    const auto lo = std::lower_bound(keys_.begin(), keys_.end(), lo_key);
    const auto hi = std::lower_bound(lo, keys_.end(), hi_key);
    return {static_cast<size_t>(lo - keys_.begin()), static_cast<size_t>(hi - keys_.begin())};
}

size_t InvertedIndex::max_list_length() const {
    size_t best = 0;
    for (size_t p = 0; p < keys_.size(); ++p) {
        best = std::max(best, list_at(p).size());
    }
    return best;
}

InvertedIndex build_index(std::span<const RvqCode> codes, std::span<const uint32_t> stage_sizes) {
    if (stage_sizes.empty()) throw std::invalid_argument("build_index: no stage sizes");
    for (size_t i = 1; i < codes.size(); ++i) {
        if (codes[i].size() != codes[0].size()) {
            throw std::invalid_argument("build_index: codes have mixed lengths");
        }
    }
    std::vector<std::pair<uint64_t, uint32_t>> entries;
    entries.reserve(codes.size());
    for (size_t id = 0; id < codes.size(); ++id) {
        entries.emplace_back(compose_key(codes[id], stage_sizes), static_cast<uint32_t>(id));
    }
    // Ids arrive ascending, so a stable sort by key keeps each list sorted.
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<uint64_t> keys;
    std::vector<uint64_t> offsets{0};
    std::vector<uint32_t> ids;
    ids.reserve(entries.size());
    for (const auto& [key, id] : entries) {
        if (keys.empty() || keys.back() != key) {
            if (!keys.empty()) offsets.push_back(ids.size());
            keys.push_back(key);
        }
        ids.push_back(id);
    }
    offsets.push_back(ids.size());
    if (keys.empty()) offsets = {0};
    return InvertedIndex(std::vector<uint32_t>(stage_sizes.begin(), stage_sizes.end()),
                         std::move(keys), std::move(offsets), std::move(ids));
}

QueryTables build_query_tables(std::span<const float> q, const RvqModel& model) {
    if (q.size() != model.dim()) {
        throw std::invalid_argument("build_query_tables: query dimension mismatch");
    }
    QueryTables qt;
    qt.qq = inner_product(q, q);
    qt.ip.reserve(model.stage_count());
    for (const Codebook& cb : model.stages) {
        std::vector<float> table(cb.size());
        for (size_t w = 0; w < cb.size(); ++w) {
            table[w] = inner_product(q, cb.word(w));
        }
        qt.ip.push_back(std::move(table));
    }
    return qt;
}

CrossTermTable build_cross_terms(const RvqModel& model) {
    if (model.stage_count() < 2) {
        throw std::invalid_argument("build_cross_terms: model needs at least two stages");
    }
    const Codebook& s1 = model.stages[0];
    const Codebook& s2 = model.stages[1];
    CrossTermTable ct;
    ct.k1 = s1.size();
    ct.k2 = s2.size();
    ct.cross.resize(ct.k1 * ct.k2);
    ct.norm1.resize(ct.k1);
    ct.norm2.resize(ct.k2);
    for (size_t a = 0; a < ct.k1; ++a) {
        ct.norm1[a] = inner_product(s1.word(a), s1.word(a));
        for (size_t b = 0; b < ct.k2; ++b) {
            ct.cross[a * ct.k2 + b] = inner_product(s1.word(a), s2.word(b));
        }
    }
    for (size_t b = 0; b < ct.k2; ++b) {
        ct.norm2[b] = inner_product(s2.word(b), s2.word(b));
    }
    return ct;
}

double key_distance(const QueryTables& qt, const CrossTermTable& ct, uint32_t c1, uint32_t c2) {
    if (qt.ip.size() < 2 || c1 >= ct.k1 || c2 >= ct.k2 || qt.ip[0].size() != ct.k1 ||
        qt.ip[1].size() != ct.k2) {
        throw std::invalid_argument("key_distance: tables and code are inconsistent");
    }
    const double ip = static_cast<double>(qt.ip[0][c1]) + static_cast<double>(qt.ip[1][c2]);
    const double composed_norm = static_cast<double>(ct.norm1[c1]) +
                                 2.0 * static_cast<double>(ct.cross[c1 * ct.k2 + c2]) +
                                 static_cast<double>(ct.norm2[c2]);
    return qt.qq - 2.0 * ip + composed_norm;
}

std::vector<uint64_t> cascade_shortlist(const QueryTables& qt, const CrossTermTable& ct,
                                        const InvertedIndex& index, const SeedBudget& budget) {
    if (budget.l1_keep < 1 || budget.keys_probed < 1 || budget.max_seeds < 1) {
        throw std::invalid_argument("cascade_shortlist: budget fields must be at least 1");
    }
    if (index.stage_sizes().size() != 2) {
        throw std::invalid_argument("cascade_shortlist: index must be keyed on two stages");
    }
    if (index.stage_sizes()[0] != ct.k1 || index.stage_sizes()[1] != ct.k2) {
        throw std::invalid_argument("cascade_shortlist: index and tables disagree on stage sizes");
    }

    // Term 1: rank first-stage words by the part of the distance that
    // depends only on c1 (q·q dropped, rank-invariant).
    std::vector<std::pair<double, uint32_t>> first;
    first.reserve(ct.k1);
    for (uint32_t c1 = 0; c1 < ct.k1; ++c1) {
        first.emplace_back(-2.0 * static_cast<double>(qt.ip[0][c1]) +
                               static_cast<double>(ct.norm1[c1]),
                           c1);
    }
    std::sort(first.begin(), first.end());
    const size_t keep = std::min(budget.l1_keep, first.size());

    // Term 2: full table distance for every non-empty key whose first-stage
    // word survived. Same arithmetic as key_distance, with the per-call
    // validation hoisted to the checks above.
    const uint64_t k2 = index.stage_sizes()[1];
    const auto scored_distance = [&](uint32_t c1, uint32_t c2) {
        const double ip = static_cast<double>(qt.ip[0][c1]) + static_cast<double>(qt.ip[1][c2]);
        const double composed_norm = static_cast<double>(ct.norm1[c1]) +
                                     2.0 * static_cast<double>(ct.cross[c1 * ct.k2 + c2]) +
                                     static_cast<double>(ct.norm2[c2]);
        return qt.qq - 2.0 * ip + composed_norm;
    };
    std::vector<std::pair<double, uint64_t>> scored;
    for (size_t i = 0; i < keep; ++i) {
        const uint32_t c1 = first[i].second;
        const auto [lo, hi] = index.key_range(uint64_t(c1) * k2, uint64_t(c1 + 1) * k2);
        for (size_t pos = lo; pos < hi; ++pos) {
            const uint64_t key = index.key_at(pos);
            const auto c2 = static_cast<uint32_t>(key % k2);
            scored.emplace_back(scored_distance(c1, c2), key);
        }
    }
    const size_t cut = std::min(scored.size(), budget.keys_probed);
    std::partial_sort(scored.begin(), scored.begin() + cut, scored.end());
    scored.resize(cut);

    std::vector<uint64_t> keys;
    keys.reserve(scored.size());
    for (const auto& [d, key] : scored) keys.push_back(key);
    return keys;
}

std::vector<uint32_t> collect_seeds(std::span<const uint64_t> keys, const InvertedIndex& index,
                                    const SeedBudget& budget) {
    std::vector<uint32_t> seeds;
    seeds.reserve(std::min(budget.max_seeds, index.vector_count()));
    for (uint64_t key : keys) {
        const size_t pos = index.find(key);
        if (pos == index.key_count()) continue;
        for (uint32_t id : index.list_at(pos)) {
            if (seeds.size() == budget.max_seeds) return seeds;
            seeds.push_back(id);
        }
    }
    return seeds;
}

RankList ivf_egnns_search(std::span<const float> q, const RvqModel& model,
                          const CrossTermTable& ct, const InvertedIndex& index, const KnnGraph& g,
                          const VectorSet& x, const SeedBudget& budget, const SearchParams& params,
                          std::mt19937_64& rng, SearchStats* stats) {
    const QueryTables qt = build_query_tables(q, model);
    const auto keys = cascade_shortlist(qt, ct, index, budget);
    std::vector<uint32_t> seeds = collect_seeds(keys, index, budget);
    if (seeds.empty()) {
        seeds = random_seeds(x.count(), std::min(params.seed_count, x.count()), rng);
    }
    return egnns_search(q, g, x, seeds, params, stats);
}

std::vector<RvqCode> encode_all(const VectorSet& x, const RvqModel& model, size_t threads) {
    std::vector<RvqCode> codes(x.count());
    if (threads == 0) threads = 1;
    if (threads == 1 || x.count() < 2 * threads) {
        for (size_t i = 0; i < x.count(); ++i) codes[i] = encode(x.row(i), model);
        return codes;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const size_t chunk = (x.count() + threads - 1) / threads;
    for (size_t w = 0; w < threads; ++w) {
        const size_t lo = w * chunk;
        const size_t hi = std::min(x.count(), lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            for (size_t i = lo; i < hi; ++i) codes[i] = encode(x.row(i), model);
        });
    }
    for (auto& t : pool) t.join();
    return codes;
}

void InvertedIndex::save(const std::filesystem::path& path) const {
    atomic_write_file(path, [&](std::ostream& out) {
        detail::put_u32(out, kIndexMagic);
        detail::put_u32(out, kIndexVersion);
        detail::put_u32(out, static_cast<uint32_t>(ids_.size()));
        detail::put_u32(out, static_cast<uint32_t>(stage_sizes_.size()));
        for (uint32_t s : stage_sizes_) detail::put_u32(out, s);
        for (size_t p = 0; p < keys_.size(); ++p) {
            const auto list = list_at(p);
            detail::put_u64(out, keys_[p]);
            detail::put_u32(out, static_cast<uint32_t>(list.size()));
            for (uint32_t id : list) detail::put_u32(out, id);
        }
    });
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
    std::ifstream in = detail::open_input(path);
    const std::string name = path.string();
    detail::expect_magic(in, kIndexMagic, name);
    const uint32_t version = detail::get_u32(in, name + ": version");
    if (version != kIndexVersion) {
        throw std::runtime_error(name + ": unsupported index file version " +
                                 std::to_string(version));
    }
    const uint32_t n = detail::get_u32(in, name + ": vector count");
    const uint32_t stage_count = detail::get_u32(in, name + ": stage count");
    if (stage_count == 0) throw std::runtime_error(name + ": index needs at least one stage");
    std::vector<uint32_t> sizes(stage_count);
    for (auto& s : sizes) s = detail::get_u32(in, name + ": stage size");

    std::vector<uint64_t> keys;
    std::vector<uint64_t> offsets{0};
    std::vector<uint32_t> ids;
    ids.reserve(n);
    while (ids.size() < n) {
        const uint64_t key = detail::get_u64(in, name + ": list key");
        const uint32_t len = detail::get_u32(in, name + ": list length");
        if (len == 0) throw std::runtime_error(name + ": empty list stored in index");
        if (ids.size() + len > n) {
            throw std::runtime_error(name + ": lists hold more ids than the declared count");
        }
        keys.push_back(key);
        for (uint32_t i = 0; i < len; ++i) {
            ids.push_back(detail::get_u32(in, name + ": list id"));
        }
        offsets.push_back(ids.size());
    }
    detail::expect_eof(in, name);
    try {
        return InvertedIndex(std::move(sizes), std::move(keys), std::move(offsets), std::move(ids));
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(name + ": invalid index content: " + e.what());
    }
}

}  // namespace ganns
