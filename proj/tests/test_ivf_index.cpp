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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "ganns/graph_build.hpp"
#include "ganns/ivf_index.hpp"
#include "oracles.hpp"

using namespace ganns;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() /
                 ("ganns_test_ivf_" + std::to_string(std::random_device{}()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

// Naive grouping oracle: map from key to ids in insertion (= ascending) order.
std::map<uint64_t, std::vector<uint32_t>> naive_grouping(std::span<const RvqCode> codes,
                                                         std::span<const uint32_t> sizes) {
    std::map<uint64_t, std::vector<uint32_t>> groups;
    for (size_t id = 0; id < codes.size(); ++id) {
        uint64_t key = 0;
        for (size_t s = 0; s < sizes.size(); ++s) key = key * sizes[s] + codes[id][s];
        groups[key].push_back(static_cast<uint32_t>(id));
    }
    return groups;
}

// Exhaustively ranks all non-empty keys by (key_distance, key).
std::vector<uint64_t> exhaustive_key_ranking(const QueryTables& qt, const CrossTermTable& ct,
                                             const InvertedIndex& index) {
    std::vector<std::pair<double, uint64_t>> scored;
    const uint64_t k2 = index.stage_sizes()[1];
    for (size_t pos = 0; pos < index.key_count(); ++pos) {
        const uint64_t key = index.key_at(pos);
        scored.emplace_back(key_distance(qt, ct, static_cast<uint32_t>(key / k2),
                                         static_cast<uint32_t>(key % k2)),
                            key);
    }
    std::sort(scored.begin(), scored.end());
    std::vector<uint64_t> keys;
    for (const auto& [d, key] : scored) keys.push_back(key);
    return keys;
}

// Sum of the first two stage words for a (c1, c2) pair.
std::vector<float> decode_pair(const RvqModel& model, uint32_t c1, uint32_t c2) {
    std::vector<float> out(model.dim());
    const auto w1 = model.stages[0].word(c1);
    const auto w2 = model.stages[1].word(c2);
    for (size_t d = 0; d < out.size(); ++d) out[d] = w1[d] + w2[d];
    return out;
}

}  // namespace

TEST_CASE("compose_key mixed-radix arithmetic") {
    const std::vector<uint32_t> sizes{256, 256};
    CHECK(compose_key({0, 0}, sizes) == 0);
    CHECK(compose_key({1, 0}, sizes) == 256);
    CHECK(compose_key({1, 2}, sizes) == 258);
    CHECK(compose_key({255, 255}, sizes) == 65535);

    // Exhaustive bijection over the full two-stage keyspace.
    std::vector<bool> hit(65536, false);
    for (uint32_t a = 0; a < 256; ++a) {
        for (uint32_t b = 0; b < 256; ++b) {
            const uint64_t key = compose_key({a, b}, sizes);
            REQUIRE(key < 65536);
            REQUIRE(!hit[key]);
            hit[key] = true;
        }
    }

    CHECK_THROWS_AS(compose_key({256, 0}, sizes), std::invalid_argument);
    CHECK_THROWS_AS(compose_key({0}, sizes), std::invalid_argument);
}

TEST_CASE("build_index trivial cases") {
    const std::vector<uint32_t> sizes{4, 4};
    std::vector<RvqCode> one{{2, 3}};
    auto idx = build_index(one, sizes);
    CHECK(idx.vector_count() == 1);
    REQUIRE(idx.key_count() == 1);
    CHECK(idx.key_at(0) == 11);
    CHECK(idx.list_at(0).size() == 1);
    CHECK(idx.list_at(0)[0] == 0);

    std::vector<RvqCode> same(7, RvqCode{1, 1});
    idx = build_index(same, sizes);
    REQUIRE(idx.key_count() == 1);
    CHECK(idx.list_at(0).size() == 7);
    for (uint32_t i = 0; i < 7; ++i) CHECK(idx.list_at(0)[i] == i);
}

TEST_CASE("build_index matches the naive grouping oracle") {
    std::mt19937_64 rng(9001);
    const std::vector<uint32_t> sizes{6, 5};
    std::vector<RvqCode> codes;
    for (int i = 0; i < 400; ++i) {
        codes.push_back({static_cast<uint32_t>(rng() % 6), static_cast<uint32_t>(rng() % 5)});
    }
    auto idx = build_index(codes, sizes);
    auto want = naive_grouping(codes, sizes);
    REQUIRE(idx.key_count() == want.size());
    size_t pos = 0;
    for (const auto& [key, ids] : want) {
        CHECK(idx.key_at(pos) == key);
        const auto list = idx.list_at(pos);
        REQUIRE(list.size() == ids.size());
        for (size_t i = 0; i < ids.size(); ++i) CHECK(list[i] == ids[i]);
        ++pos;
    }
}

TEST_CASE("index partition property on trained codes") {
    auto x = oracles::random_set(800, 8, 9002);
    std::mt19937_64 rng(9003);
    const size_t stages[] = {16, 16};
    auto model = train(x, stages, 25, rng);
    auto codes = encode_all(x, model);
    const std::vector<uint32_t> sizes{16, 16};
    auto idx = build_index(codes, sizes);

    CHECK(idx.vector_count() == x.count());
    std::vector<bool> seen(x.count(), false);
    for (size_t pos = 0; pos < idx.key_count(); ++pos) {
        for (uint32_t id : idx.list_at(pos)) {
            CHECK_FALSE(seen[id]);
            seen[id] = true;
            // Re-encoding the stored vector reproduces its list's key.
            CHECK(compose_key(encode(x.row(id), model), sizes) == idx.key_at(pos));
        }
    }
    CHECK(std::count(seen.begin(), seen.end(), true) == static_cast<ptrdiff_t>(x.count()));
}

TEST_CASE("encode_all is thread-count independent") {
    auto x = oracles::random_set(500, 8, 9004);
    std::mt19937_64 rng(9005);
    const size_t stages[] = {16, 8};
    auto model = train(x, stages, 25, rng);
    CHECK(encode_all(x, model, 1) == encode_all(x, model, 4));
}

TEST_CASE("key_distance matches direct distances") {
    auto x = oracles::random_set(600, 16, 9006, -1.0f, 1.0f);
    std::mt19937_64 rng(9007);
    const size_t stages[] = {24, 24};
    auto model = train(x, stages, 25, rng);
    auto ct = build_cross_terms(model);

    SUBCASE("exact reconstruction gives zero") {
        const auto v = decode_pair(model, 3, 7);
        auto qt = build_query_tables(v, model);
        CHECK(std::fabs(key_distance(qt, ct, 3, 7)) <= 1e-4);
    }

    SUBCASE("zero query gives the composed norm") {
        std::vector<float> zero(16, 0.0f);
        auto qt = build_query_tables(zero, model);
        const auto v = decode_pair(model, 5, 2);
        const double want = squared_l2(v, zero);
        CHECK(key_distance(qt, ct, 5, 2) == doctest::Approx(want).epsilon(1e-4));
    }

    SUBCASE("random pairs stay within the relative tolerance") {
        auto queries = oracles::random_set(50, 16, 9008, -1.0f, 1.0f);
        for (size_t qi = 0; qi < queries.count(); ++qi) {
            auto qt = build_query_tables(queries.row(qi), model);
            for (int trial = 0; trial < 20; ++trial) {
                const auto c1 = static_cast<uint32_t>(rng() % 24);
                const auto c2 = static_cast<uint32_t>(rng() % 24);
                const double direct = squared_l2(queries.row(qi), decode_pair(model, c1, c2));
                const double table = key_distance(qt, ct, c1, c2);
                CHECK(std::fabs(table - direct) <= 1e-4 * (1.0 + direct));
            }
        }
    }
}

TEST_CASE("pruning-disabled cascade equals the exhaustive ranking exactly") {
    auto x = oracles::random_set(700, 8, 9009);
    std::mt19937_64 rng(9010);
    const size_t stages[] = {16, 12};
    auto model = train(x, stages, 25, rng);
    auto ct = build_cross_terms(model);
    const std::vector<uint32_t> sizes{16, 12};
    auto idx = build_index(encode_all(x, model), sizes);

    SeedBudget budget;
    budget.l1_keep = 16;                  // keep every first-stage word
    budget.keys_probed = idx.key_count(); // probe every non-empty key

    auto queries = oracles::random_set(25, 8, 9011);
    for (size_t qi = 0; qi < queries.count(); ++qi) {
        auto qt = build_query_tables(queries.row(qi), model);
        const auto got = cascade_shortlist(qt, ct, idx, budget);
        const auto want = exhaustive_key_ranking(qt, ct, idx);
        REQUIRE(got.size() == want.size());
        for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
    }
}

TEST_CASE("a query equal to a decoded key ranks that key first") {
    auto x = oracles::random_set(500, 8, 9012);
    std::mt19937_64 rng(9013);
    const size_t stages[] = {12, 8};
    auto model = train(x, stages, 25, rng);
    auto ct = build_cross_terms(model);
    const std::vector<uint32_t> sizes{12, 8};
    auto idx = build_index(encode_all(x, model), sizes);
    REQUIRE(idx.key_count() > 1);

    SeedBudget budget;
    budget.l1_keep = 12;
    budget.keys_probed = idx.key_count();

    // Pick an existing non-empty key and query with its decoded vector.
    const uint64_t key = idx.key_at(idx.key_count() / 2);
    const auto c1 = static_cast<uint32_t>(key / 8);
    const auto c2 = static_cast<uint32_t>(key % 8);
    const auto q = decode_pair(model, c1, c2);
    auto qt = build_query_tables(q, model);
    const auto keys = cascade_shortlist(qt, ct, idx, budget);
    REQUIRE(!keys.empty());
    CHECK(keys.front() == key);
}

TEST_CASE("moderate first-stage pruning rarely changes the top key") {
    auto x = oracles::random_set(4000, 16, 9014, -1.0f, 1.0f);
    std::mt19937_64 rng(9015);
    const size_t stages[] = {256, 16};
    auto model = train(x, stages, 10, rng);
    auto ct = build_cross_terms(model);
    const std::vector<uint32_t> sizes{256, 16};
    auto idx = build_index(encode_all(x, model), sizes);

    SeedBudget pruned;
    pruned.l1_keep = 32;
    pruned.keys_probed = idx.key_count();
    SeedBudget full;
    full.l1_keep = 256;
    full.keys_probed = idx.key_count();

    auto queries = oracles::random_set(100, 16, 9016, -1.0f, 1.0f);
    size_t agree = 0;
    for (size_t qi = 0; qi < queries.count(); ++qi) {
        auto qt = build_query_tables(queries.row(qi), model);
        const auto a = cascade_shortlist(qt, ct, idx, pruned);
        const auto b = cascade_shortlist(qt, ct, idx, full);
        REQUIRE(!b.empty());
        if (!a.empty() && a.front() == b.front()) ++agree;
    }
    CHECK(agree >= 95);
}

TEST_CASE("collect_seeds concatenates in key-rank order") {
    // Hand-built index over 5 vectors: key 3 -> [3, 4]; key 10 -> [0];
    // key 11 -> [1, 2].
    InvertedIndex idx({4, 4}, {3, 10, 11}, {0, 2, 3, 5}, {3, 4, 0, 1, 2});

    SeedBudget b;
    b.max_seeds = 10;
    std::vector<uint64_t> one{3};
    CHECK(collect_seeds(one, idx, b) == std::vector<uint32_t>{3, 4});

    b.max_seeds = 1;
    std::vector<uint64_t> two{10, 11};
    CHECK(collect_seeds(two, idx, b) == std::vector<uint32_t>{0});

    b.max_seeds = 4;
    std::vector<uint64_t> all{11, 3, 10};
    CHECK(collect_seeds(all, idx, b) == std::vector<uint32_t>{1, 2, 3, 4});

    std::vector<uint64_t> none;
    CHECK(collect_seeds(none, idx, b).empty());
}

TEST_CASE("collect_seeds matches a naive concatenation oracle") {
    std::mt19937_64 rng(9017);
    const std::vector<uint32_t> sizes{8, 8};
    std::vector<RvqCode> codes;
    for (int i = 0; i < 300; ++i) {
        codes.push_back({static_cast<uint32_t>(rng() % 8), static_cast<uint32_t>(rng() % 8)});
    }
    auto idx = build_index(codes, sizes);
    auto groups = naive_grouping(codes, sizes);

    std::vector<uint64_t> keys;
    for (const auto& [key, ids] : groups) keys.push_back(key);
    std::shuffle(keys.begin(), keys.end(), rng);

    SeedBudget b;
    b.max_seeds = 37;
    const auto got = collect_seeds(keys, idx, b);

    std::vector<uint32_t> want;
    for (uint64_t key : keys) {
        for (uint32_t id : groups[key]) {
            if (want.size() < 37) want.push_back(id);
        }
    }
    CHECK(got == want);
    // No duplicates and within budget.
    auto sorted = got;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    CHECK(got.size() <= 37);
}

TEST_CASE("ivf search finds stored vectors when queried with them") {
    auto x = oracles::gaussian_mixture(3000, 16, 32, 0.6f, 9018);
    std::mt19937_64 rng(9019);
    const size_t stages[] = {32, 32};
    auto model = train(x, stages, 25, rng);
    auto ct = build_cross_terms(model);
    const std::vector<uint32_t> sizes{32, 32};
    auto idx = build_index(encode_all(x, model), sizes);
    BuildParams bp;
    bp.k = 10;
    bp.rounds = 8;
    bp.cluster_cap = 50;
    bp.rng_seed = 9020;
    auto g = build_graph(x, bp);

    SeedBudget budget;
    budget.l1_keep = 8;
    budget.keys_probed = 32;
    budget.max_seeds = 48;
    SearchParams sp;
    sp.iterations = 10;
    sp.expand_width = 8;
    sp.result_size = 1;

    std::mt19937_64 qrng(9021);
    size_t hits = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const size_t i = qrng() % x.count();
        auto r = ivf_egnns_search(x.row(i), model, ct, idx, g, x, budget, sp, qrng);
        REQUIRE(!r.entries().empty());
        if (r.entries()[0].id == i && r.entries()[0].dist == 0.0f) ++hits;
    }
    CHECK(hits >= 98);
}

TEST_CASE("maximal budgets reduce to all-ids seeding at the top") {
    auto x = oracles::random_set(400, 8, 9022);
    std::mt19937_64 rng(9023);
    const size_t stages[] = {8, 8};
    auto model = train(x, stages, 25, rng);
    auto ct = build_cross_terms(model);
    const std::vector<uint32_t> sizes{8, 8};
    auto idx = build_index(encode_all(x, model), sizes);
    auto g = exact_graph(x, 8);

    SeedBudget budget;
    budget.l1_keep = 8;
    budget.keys_probed = idx.key_count();
    budget.max_seeds = x.count();
    SearchParams sp;
    sp.iterations = 50;
    sp.expand_width = 8;
    sp.result_size = 1;

    std::vector<uint32_t> all(x.count());
    std::iota(all.begin(), all.end(), 0);

    auto queries = oracles::random_set(20, 8, 9024);
    for (size_t qi = 0; qi < queries.count(); ++qi) {
        std::mt19937_64 srng(1);
        auto a = ivf_egnns_search(queries.row(qi), model, ct, idx, g, x, budget, sp, srng);
        auto b = egnns_search(queries.row(qi), g, x, all, sp);
        REQUIRE(!a.entries().empty());
        CHECK(a.entries()[0] == b.entries()[0]);
    }
}

TEST_CASE("empty seed collection falls back to random seeds") {
    // Hand-built model: all data encodes under first-stage word 1; a query
    // near the origin ranks word 0 first, so l1_keep=1 probes nothing.
    RvqModel model;
    model.stages.push_back(Codebook{2, {0.0f, 0.0f, 10.0f, 10.0f}});
    model.stages.push_back(Codebook{2, {0.0f, 0.0f, 1.0f, 1.0f}});
    std::vector<float> data;
    std::mt19937_64 gen(9025);
    std::uniform_real_distribution<float> d(9.5f, 10.5f);
    for (int i = 0; i < 60; ++i) { data.push_back(d(gen)); data.push_back(d(gen)); }
    VectorSet x(60, 2, std::move(data));

    auto codes = encode_all(x, model);
    for (const auto& c : codes) REQUIRE(c[0] == 1);
    const std::vector<uint32_t> sizes{2, 2};
    auto idx = build_index(codes, sizes);
    auto ct = build_cross_terms(model);
    auto g = exact_graph(x, 5);

    SeedBudget budget;
    budget.l1_keep = 1;
    budget.keys_probed = 4;
    budget.max_seeds = 8;
    SearchParams sp;
    sp.iterations = 10;
    sp.expand_width = 4;
    sp.result_size = 1;
    sp.seed_count = 8;

    std::vector<float> q{0.1f, 0.1f};
    auto qt = build_query_tables(q, model);
    CHECK(collect_seeds(cascade_shortlist(qt, ct, idx, budget), idx, budget).empty());

    // The fallback draws seed_count random seeds from the caller's generator
    // and then searches normally, so it must agree with a plain search that
    // replicates the same draw.
    std::mt19937_64 srng(9026);
    auto r = ivf_egnns_search(q, model, ct, idx, g, x, budget, sp, srng);
    REQUIRE(!r.entries().empty());

    std::mt19937_64 replay(9026);
    auto seeds = random_seeds(x.count(), sp.seed_count, replay);
    auto want = egnns_search(q, g, x, seeds, sp);
    REQUIRE(r.entries().size() == want.entries().size());
    for (size_t i = 0; i < r.entries().size(); ++i) {
        CHECK(r.entries()[i] == want.entries()[i]);
    }
}

TEST_CASE("index files round-trip field-exact") {
    std::mt19937_64 rng(9027);
    const std::vector<uint32_t> sizes{8, 8};
    std::vector<RvqCode> codes;
    for (int i = 0; i < 200; ++i) {
        codes.push_back({static_cast<uint32_t>(rng() % 8), static_cast<uint32_t>(rng() % 8)});
    }
    auto idx = build_index(codes, sizes);
    const auto path = temp_dir() / "index.bin";
    idx.save(path);
    auto back = InvertedIndex::load(path);
    CHECK(back == idx);

    // Empty index round-trips too.
    auto empty = build_index({}, sizes);
    CHECK(empty.vector_count() == 0);
    const auto empty_path = temp_dir() / "empty_index.bin";
    empty.save(empty_path);
    CHECK(InvertedIndex::load(empty_path) == empty);
}

TEST_CASE("index load rejects corrupt files") {
    const auto bad = temp_dir() / "bad_index.bin";
    {
        std::ofstream out(bad, std::ios::binary);
        uint32_t junk = 7;
        out.write(reinterpret_cast<char*>(&junk), 4);
    }
    CHECK_THROWS_AS(InvertedIndex::load(bad), std::runtime_error);

    std::mt19937_64 rng(9028);
    const std::vector<uint32_t> sizes{4, 4};
    std::vector<RvqCode> codes;
    for (int i = 0; i < 50; ++i) {
        codes.push_back({static_cast<uint32_t>(rng() % 4), static_cast<uint32_t>(rng() % 4)});
    }
    auto idx = build_index(codes, sizes);
    const auto truncated = temp_dir() / "truncated_index.bin";
    idx.save(truncated);
    fs::resize_file(truncated, fs::file_size(truncated) - 2);
    CHECK_THROWS_WITH_AS(InvertedIndex::load(truncated), doctest::Contains("truncated"),
                         std::runtime_error);
}

TEST_CASE("InvertedIndex constructor rejects invariant violations") {
    // Duplicate id across lists.
    CHECK_THROWS_AS(InvertedIndex({4, 4}, {1, 2}, {0, 1, 2}, {0, 0}), std::invalid_argument);
    // Ids not ascending within a list.
    CHECK_THROWS_AS(InvertedIndex({4, 4}, {1}, {0, 2}, {1, 0}), std::invalid_argument);
    // Keys not ascending.
    CHECK_THROWS_AS(InvertedIndex({4, 4}, {5, 2}, {0, 1, 2}, {0, 1}), std::invalid_argument);
    // Key outside the keyspace (4x4 -> 16).
    CHECK_THROWS_AS(InvertedIndex({4, 4}, {16}, {0, 1}, {0}), std::invalid_argument);
    // Valid one for contrast.
    CHECK_NOTHROW(InvertedIndex({4, 4}, {2, 5}, {0, 1, 2}, {1, 0}));
}
