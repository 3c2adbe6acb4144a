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

#include "ganns/bench.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "ganns/hill_climb.hpp"
#include "ganns/io.hpp"
#include "ganns/knn_graph.hpp"
#include "ganns/rvq.hpp"

namespace ganns {

namespace {

// splitmix64 finalizer; decorrelates per-record generators drawn from one
// config seed.
uint64_t mix_seed(uint64_t seed, uint64_t serial) {
    uint64_t z = seed + 0x9E3779B97F4A7C15ull * (serial + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::vector<uint32_t> entry_ids(std::span<const Neighbor> entries) {
    std::vector<uint32_t> ids;
    ids.reserve(entries.size());
    for (const auto& e : entries) ids.push_back(e.id);
    return ids;
}

double elapsed_ms(std::chrono::steady_clock::time_point from,
                  std::chrono::steady_clock::time_point to) {
    return std::chrono::duration<double, std::milli>(to - from).count();
}

}  // namespace

std::vector<uint32_t> brute_force_search(std::span<const float> q, const VectorSet& x, size_t r) {
    if (r < 1 || r > x.count()) {
        throw std::invalid_argument("brute_force_search: r must be in [1, count]");
    }
    if (q.size() != x.dim()) {
        throw std::invalid_argument("brute_force_search: query dimension mismatch");
    }
    std::vector<std::pair<float, uint32_t>> scored(x.count());
    for (size_t i = 0; i < x.count(); ++i) {
        scored[i] = {squared_l2(q, x.row(i)), static_cast<uint32_t>(i)};
    }
    std::nth_element(scored.begin(), scored.begin() + (r - 1), scored.end());
    std::sort(scored.begin(), scored.begin() + r);
    std::vector<uint32_t> ids(r);
    for (size_t i = 0; i < r; ++i) ids[i] = scored[i].second;
    return ids;
}

GroundTruth exact_ground_truth(const VectorSet& queries, const VectorSet& x, size_t r) {
    GroundTruth gt;
    gt.ids.reserve(queries.count());
    for (size_t qi = 0; qi < queries.count(); ++qi) {
        gt.ids.push_back(brute_force_search(queries.row(qi), x, r));
    }
    return gt;
}

double recall_at(std::span<const uint32_t> result, std::span<const uint32_t> truth, size_t r) {
    if (r < 1) throw std::invalid_argument("recall_at: r must be at least 1");
    if (truth.size() < r) {
        throw std::invalid_argument("recall_at: truth list shorter than r");
    }
    std::unordered_set<uint32_t> want(truth.begin(), truth.begin() + r);
    size_t hit = 0;
    const size_t depth = std::min(result.size(), r);
    for (size_t i = 0; i < depth; ++i) {
        if (want.count(result[i]) != 0) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(r);
}

namespace {

struct LoadedArtifacts {
    VectorSet data;
    VectorSet queries;
    GroundTruth gt;
    std::optional<KnnGraph> graph;
    RvqModel model;
    InvertedIndex index;
    bool has_ivf = false;
};

template <typename Fn>
auto load_artifact(const char* kind, const std::filesystem::path& path, Fn&& loader) {
    if (path.empty()) {
        throw std::runtime_error(std::string("bench: no ") + kind + " artifact configured");
    }
    try {
        return loader(path);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("bench: cannot load ") + kind + " artifact '" +
                                 path.string() + "': " + e.what());
    }
}

LoadedArtifacts load_all(const BenchConfig& config, bool any_graph_method, bool ivf_method) {
    LoadedArtifacts a;
    a.data = load_artifact("dataset", config.data_path,
                           [](const auto& p) { return read_vectors(p, format_from_path(p)); });
    a.queries = load_artifact("query", config.query_path,
                              [](const auto& p) { return read_vectors(p, format_from_path(p)); });
    a.gt = load_artifact("ground-truth", config.gt_path,
                         [](const auto& p) { return load_ground_truth(p); });
    if (any_graph_method) {
        a.graph = load_artifact("graph", config.graph_path,
                                [](const auto& p) { return KnnGraph::load(p); });
    }
    if (ivf_method) {
        a.model = load_artifact("model", config.model_path,
                                [](const auto& p) { return RvqModel::load(p); });
        a.index = load_artifact("index", config.index_path,
                                [](const auto& p) { return InvertedIndex::load(p); });
        a.has_ivf = true;
    }
    return a;
}

void validate_inputs(const BenchConfig& config, const LoadedArtifacts& a) {
    if (config.result_size < 1 || config.result_size > a.data.count()) {
        throw std::invalid_argument("bench: result_size must be in [1, dataset size]");
    }
    if (a.queries.count() == 0) throw std::invalid_argument("bench: query set is empty");
    if (a.queries.dim() != a.data.dim()) {
        throw std::invalid_argument("bench: query and dataset dimensions differ");
    }
    if (a.gt.query_count() != a.queries.count()) {
        throw std::invalid_argument("bench: ground truth query count does not match query set");
    }
    for (const auto& list : a.gt.ids) {
        if (list.size() < config.result_size) {
            throw std::invalid_argument("bench: ground truth depth is below result_size");
        }
    }
    if (a.graph) {
        if (a.graph->count() != a.data.count()) {
            throw std::invalid_argument("bench: graph node count does not match dataset");
        }
        if (config.seed_count < 1) {
            throw std::invalid_argument("bench: seed_count must be at least 1");
        }
        if (config.expand_widths.empty() || config.iteration_counts.empty()) {
            throw std::invalid_argument("bench: empty parameter sweep");
        }
        for (size_t w : config.expand_widths) {
            if (w < 1) throw std::invalid_argument("bench: expand_width must be at least 1");
        }
        for (size_t t : config.iteration_counts) {
            if (t < 1) throw std::invalid_argument("bench: iterations must be at least 1");
        }
    }
    if (a.has_ivf) {
        if (a.model.dim() != a.data.dim()) {
            throw std::invalid_argument("bench: model dimension does not match dataset");
        }
        if (a.index.vector_count() != a.data.count()) {
            throw std::invalid_argument("bench: index vector count does not match dataset");
        }
    }
}

// Scores one parameter point of one method over the whole query stream.
template <typename SearchFn>
BenchRecord run_record(const std::string& method, size_t expand_width, size_t iterations,
                       const BenchConfig& config, const LoadedArtifacts& a, SearchFn&& search) {
    BenchRecord rec;
    rec.method = method;
    rec.expand_width = expand_width;
    rec.iterations = iterations;
    double r1 = 0.0;
    double rr = 0.0;
    for (size_t qi = 0; qi < a.queries.count(); ++qi) {
        const auto start = std::chrono::steady_clock::now();
        const std::vector<uint32_t> ids = search(qi);
        const auto stop = std::chrono::steady_clock::now();
        rec.total_ms += elapsed_ms(start, stop);
        r1 += recall_at(ids, a.gt.ids[qi], 1);
        rr += recall_at(ids, a.gt.ids[qi], config.result_size);
    }
    const auto nq = static_cast<double>(a.queries.count());
    rec.mean_query_ms = rec.total_ms / nq;
    rec.recall_at_1 = r1 / nq;
    rec.recall_at_r = rr / nq;
    return rec;
}

}  // namespace

BenchReport run_benchmark(const BenchConfig& config) {
    if (config.methods.empty()) throw std::invalid_argument("bench: no methods selected");
    bool want_exhaustive = false;
    bool want_gnns = false;
    bool want_egnns = false;
    bool want_ivf = false;
    for (const auto& m : config.methods) {
        if (m == "exhaustive") {
            want_exhaustive = true;
        } else if (m == "gnns") {
            want_gnns = true;
        } else if (m == "egnns") {
            want_egnns = true;
        } else if (m == "ivf-egnns") {
            want_ivf = true;
        } else {
            throw std::invalid_argument("bench: unknown method '" + m + "'");
        }
    }
    const bool any_graph = want_gnns || want_egnns || want_ivf;

    const LoadedArtifacts a = load_all(config, any_graph, want_ivf);
    validate_inputs(config, a);

    // Model-level preprocessing stays outside the timed loops, per-query
    // table construction inside them.
    CrossTermTable cross;
    if (want_ivf) cross = build_cross_terms(a.model);

    BenchReport report;
    report.query_count = a.queries.count();
    report.result_size = config.result_size;

    const size_t n = a.data.count();
    const size_t seeds_per_query = std::min(config.seed_count, n);
    uint64_t serial = 0;

    if (want_exhaustive) {
        report.records.push_back(run_record("exhaustive", 0, 0, config, a, [&](size_t qi) {
            return brute_force_search(a.queries.row(qi), a.data, config.result_size);
        }));
        ++serial;
    }

    for (const size_t w : config.expand_widths) {
        for (const size_t t : config.iteration_counts) {
            if (want_gnns) {
                // Single-node expansion with the grid's whole w*t round
                // budget, so each grid point grants every method the same
                // worst-case number of neighbor expansions.
                SearchParams params;
                params.iterations = w * t;
                params.expand_width = 1;
                params.result_size = config.result_size;
                params.seed_count = seeds_per_query;
                std::mt19937_64 rng(mix_seed(config.rng_seed, serial++));
                report.records.push_back(run_record("gnns", w, t, config, a, [&](size_t qi) {
                    const auto seeds = random_seeds(n, seeds_per_query, rng);
                    return entry_ids(
                        gnns_search(a.queries.row(qi), *a.graph, a.data, seeds, params).entries());
                }));
            }
            if (want_egnns) {
                SearchParams params;
                params.iterations = t;
                params.expand_width = w;
                params.result_size = config.result_size;
                params.seed_count = seeds_per_query;
                std::mt19937_64 rng(mix_seed(config.rng_seed, serial++));
                report.records.push_back(run_record("egnns", w, t, config, a, [&](size_t qi) {
                    const auto seeds = random_seeds(n, seeds_per_query, rng);
                    return entry_ids(
                        egnns_search(a.queries.row(qi), *a.graph, a.data, seeds, params).entries());
                }));
            }
            if (want_ivf) {
                SearchParams params;
                params.iterations = t;
                params.expand_width = w;
                params.result_size = config.result_size;
                params.seed_count = seeds_per_query;
                std::mt19937_64 rng(mix_seed(config.rng_seed, serial++));
                report.records.push_back(run_record("ivf-egnns", w, t, config, a, [&](size_t qi) {
                    return entry_ids(ivf_egnns_search(a.queries.row(qi), a.model, cross, a.index,
                                                      *a.graph, a.data, config.budget, params, rng)
                                         .entries());
                }));
            }
        }
    }
    return report;
}

void write_report_jsonl(const BenchReport& report, const std::filesystem::path& path) {
    atomic_write_file(path, [&](std::ostream& out) {
        for (const auto& rec : report.records) {
            nlohmann::json line{{"method", rec.method},
                                {"expand_width", rec.expand_width},
                                {"iterations", rec.iterations},
                                {"total_ms", rec.total_ms},
                                {"mean_query_ms", rec.mean_query_ms},
                                {"recall_at_1", rec.recall_at_1},
                                {"recall_at_r", rec.recall_at_r},
                                {"result_size", report.result_size},
                                {"query_count", report.query_count}};
            out << line.dump() << '\n';
        }
    });
}

void print_report_table(const BenchReport& report, std::ostream& out) {
    out << std::left << std::setw(12) << "method" << std::right << std::setw(7) << "width"
        << std::setw(7) << "iters" << std::setw(12) << "total_ms" << std::setw(12) << "ms/query"
        << std::setw(10) << "R@1" << std::setw(10) << ("R@" + std::to_string(report.result_size))
        << '\n';
    out << std::string(70, '-') << '\n';
    for (const auto& rec : report.records) {
        out << std::left << std::setw(12) << rec.method << std::right << std::setw(7)
            << rec.expand_width << std::setw(7) << rec.iterations << std::fixed
            << std::setprecision(3) << std::setw(12) << rec.total_ms << std::setw(12)
            << rec.mean_query_ms << std::setprecision(4) << std::setw(10) << rec.recall_at_1
            << std::setw(10) << rec.recall_at_r << '\n';
        out.unsetf(std::ios::fixed);
    }
}

}  // namespace ganns
