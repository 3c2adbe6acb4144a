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

#include "ganns/cli.hpp"

#include <chrono>
#include <iomanip>
#include <iostream>
#include <random>
#include <stdexcept>

#include <CLI11.hpp>

#include "ganns/bench.hpp"
#include "ganns/io.hpp"
#include "ganns/knn_graph.hpp"
#include "ganns/rvq.hpp"

namespace ganns {

namespace {

VectorSet load_data(const std::filesystem::path& path, const char* role) {
    if (path.empty()) {
        throw std::invalid_argument(std::string("no ") + role + " file given");
    }
    return read_vectors(path, format_from_path(path));
}

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

void cmd_convert(const RunConfig& cfg) {
    const auto set = load_data(cfg.in_path, "input");
    write_vectors(set, cfg.out_path, format_from_path(cfg.out_path));
    std::cout << "converted " << set.count() << " vectors of dimension " << set.dim() << " to "
              << cfg.out_path.string() << '\n';
}

void cmd_exact_gt(const RunConfig& cfg) {
    const auto data = load_data(cfg.data_path, "dataset");
    const auto queries = load_data(cfg.query_path, "query");
    if (queries.count() > 0 && queries.dim() != data.dim()) {
        throw std::invalid_argument("query and dataset dimensions differ");
    }
    if (cfg.gt_depth < 1 || cfg.gt_depth > data.count()) {
        throw std::invalid_argument("ground truth depth must be in [1, dataset size]");
    }
    const auto start = std::chrono::steady_clock::now();
    const auto gt = exact_ground_truth(queries, data, cfg.gt_depth);
    save_ground_truth(gt, cfg.out_path);
    std::cout << "wrote exact top-" << cfg.gt_depth << " for " << gt.query_count() << " queries ("
              << std::fixed << std::setprecision(1) << ms_since(start) << " ms)\n";
}

void cmd_build_graph(const RunConfig& cfg) {
    const auto data = load_data(cfg.data_path, "dataset");
    BuildParams params = cfg.build;
    params.rng_seed = cfg.rng_seed;
    const auto start = std::chrono::steady_clock::now();
    const auto graph = build_graph(data, params, cfg.threads);
    graph.save(cfg.out_path);
    std::cout << "built graph: n=" << graph.count() << " k=" << graph.k()
              << " rounds=" << params.rounds << " elapsed_ms=" << std::fixed
              << std::setprecision(1) << ms_since(start) << '\n';
}

void cmd_train_rvq(const RunConfig& cfg) {
    const auto data = load_data(cfg.data_path, "dataset");
    for (size_t k : cfg.stage_sizes) {
        if (k < 1 || k > data.count()) {
            throw std::invalid_argument("stage size " + std::to_string(k) +
                                        " outside [1, dataset size]");
        }
    }
    std::mt19937_64 rng(cfg.rng_seed);
    const auto start = std::chrono::steady_clock::now();
    const auto model = train(data, cfg.stage_sizes, kDefaultKmeansIters, rng);
    model.save(cfg.out_path);
    std::cout << "trained model: stages=" << model.stage_count() << " dim=" << model.dim()
              << " elapsed_ms=" << std::fixed << std::setprecision(1) << ms_since(start) << '\n';
    if (cfg.verbose) {
        std::cout << "training-set reconstruction mse=" << std::setprecision(6)
                  << reconstruction_mse(data, model) << '\n';
    }
}

void cmd_build_index(const RunConfig& cfg) {
    const auto data = load_data(cfg.data_path, "dataset");
    if (cfg.model_path.empty()) throw std::invalid_argument("no model file given");
    const auto model = RvqModel::load(cfg.model_path);
    if (model.stage_count() < 2) {
        throw std::invalid_argument("indexing needs a model with at least two stages");
    }
    if (data.count() > 0 && data.dim() != model.dim()) {
        throw std::invalid_argument("model and dataset dimensions differ");
    }
    const auto key_model = model.prefix(2);
    const std::vector<uint32_t> sizes{static_cast<uint32_t>(key_model.stages[0].size()),
                                      static_cast<uint32_t>(key_model.stages[1].size())};
    const auto start = std::chrono::steady_clock::now();
    const auto codes = encode_all(data, key_model, cfg.threads);
    const auto index = build_index(codes, sizes);
    index.save(cfg.out_path);
    std::cout << "built index: vectors=" << index.vector_count()
              << " non-empty keys=" << index.key_count()
              << " max list length=" << index.max_list_length() << " elapsed_ms=" << std::fixed
              << std::setprecision(1) << ms_since(start) << '\n';
}

void write_search_results(const RunConfig& cfg, const VectorSet& queries,
                          const std::vector<std::vector<Neighbor>>& results) {
    const auto emit = [&](std::ostream& out) {
        out << "# method=" << cfg.method << " result_size=" << cfg.search.result_size
            << " expand_width=" << cfg.search.expand_width
            << " iterations=" << cfg.search.iterations << " seed=" << cfg.rng_seed << '\n';
        out << "# query\trank\tid\tdistance\n";
        out << std::setprecision(9);
        for (size_t qi = 0; qi < queries.count(); ++qi) {
            for (size_t rank = 0; rank < results[qi].size(); ++rank) {
                out << qi << '\t' << rank << '\t' << results[qi][rank].id << '\t'
                    << results[qi][rank].dist << '\n';
            }
        }
    };
    if (cfg.out_path.empty()) {
        emit(std::cout);
    } else {
        atomic_write_file(cfg.out_path, emit);
    }
}

void cmd_search(const RunConfig& cfg) {
    const auto data = load_data(cfg.data_path, "dataset");
    const auto queries = load_data(cfg.query_path, "query");
    if (queries.count() > 0 && queries.dim() != data.dim()) {
        throw std::invalid_argument("query and dataset dimensions differ");
    }
    const size_t r = cfg.search.result_size;
    if (r < 1 || r > data.count()) {
        throw std::invalid_argument("result size must be in [1, dataset size]");
    }

    std::vector<std::vector<Neighbor>> results(queries.count());

    if (cfg.method == "exhaustive") {
        for (size_t qi = 0; qi < queries.count(); ++qi) {
            for (uint32_t id : brute_force_search(queries.row(qi), data, r)) {
                results[qi].push_back({id, squared_l2(queries.row(qi), data.row(id))});
            }
        }
        write_search_results(cfg, queries, results);
        return;
    }

    if (cfg.graph_path.empty()) throw std::invalid_argument("no graph file given");
    const auto graph = KnnGraph::load(cfg.graph_path);
    if (graph.count() != data.count()) {
        throw std::invalid_argument("graph node count does not match dataset");
    }
    SearchParams params = cfg.search;
    params.seed_count = std::min(params.seed_count, data.count());
    std::mt19937_64 rng(cfg.rng_seed);

    if (cfg.method == "gnns" || cfg.method == "egnns") {
        for (size_t qi = 0; qi < queries.count(); ++qi) {
            const auto seeds = random_seeds(data.count(), params.seed_count, rng);
            const auto hits = cfg.method == "gnns"
                                  ? gnns_search(queries.row(qi), graph, data, seeds, params)
                                  : egnns_search(queries.row(qi), graph, data, seeds, params);
            results[qi].assign(hits.entries().begin(), hits.entries().end());
        }
        write_search_results(cfg, queries, results);
        return;
    }

    if (cfg.method == "ivf-egnns") {
        if (cfg.model_path.empty()) throw std::invalid_argument("no model file given");
        if (cfg.index_path.empty()) throw std::invalid_argument("no index file given");
        const auto model = RvqModel::load(cfg.model_path);
        const auto index = InvertedIndex::load(cfg.index_path);
        if (model.dim() != data.dim()) {
            throw std::invalid_argument("model and dataset dimensions differ");
        }
        if (index.vector_count() != data.count()) {
            throw std::invalid_argument("index vector count does not match dataset");
        }
        const auto cross = build_cross_terms(model);
        for (size_t qi = 0; qi < queries.count(); ++qi) {
            const auto hits = ivf_egnns_search(queries.row(qi), model, cross, index, graph, data,
                                               cfg.budget, params, rng);
            results[qi].assign(hits.entries().begin(), hits.entries().end());
        }
        write_search_results(cfg, queries, results);
        return;
    }

    throw std::invalid_argument("unknown method '" + cfg.method + "'");
}

void cmd_bench(const RunConfig& cfg) {
    BenchConfig bench;
    bench.data_path = cfg.data_path;
    bench.query_path = cfg.query_path;
    bench.gt_path = cfg.gt_path;
    bench.graph_path = cfg.graph_path;
    bench.model_path = cfg.model_path;
    bench.index_path = cfg.index_path;
    if (!cfg.bench_methods.empty()) bench.methods = cfg.bench_methods;
    bench.expand_widths = cfg.bench_widths;
    bench.iteration_counts = cfg.bench_iterations;
    bench.result_size = cfg.search.result_size;
    bench.seed_count = cfg.search.seed_count;
    bench.budget = cfg.budget;
    bench.rng_seed = cfg.rng_seed;

    const auto report = run_benchmark(bench);
    print_report_table(report, std::cout);
    if (!cfg.out_path.empty()) {
        write_report_jsonl(report, cfg.out_path);
        std::cout << "wrote " << report.records.size() << " records to " << cfg.out_path.string()
                  << '\n';
    }
}

void add_common_search_flags(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--expand-width", cfg.search.expand_width,
                    "rank-list entries expanded per round");
    sub->add_option("--iterations", cfg.search.iterations, "search rounds per query");
    sub->add_option("--result-size", cfg.search.result_size, "neighbors returned per query");
    sub->add_option("--seed-count", cfg.search.seed_count, "random seeds per query");
    sub->add_option("--l1-keep", cfg.budget.l1_keep, "first-stage words kept by the cascade");
    sub->add_option("--keys-probed", cfg.budget.keys_probed, "keys kept by the cascade");
    sub->add_option("--max-seeds", cfg.budget.max_seeds, "seeds collected from probed lists");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"nearest neighbor search over two-means kNN graphs with RVQ seeding"};
    app.require_subcommand(1);
    RunConfig cfg;

    const auto add_global_flags = [&cfg](CLI::App* sub) {
        sub->add_option("--seed", cfg.rng_seed, "random number generator seed");
        sub->add_flag("--verbose", cfg.verbose, "print extra detail");
    };

    auto* convert = app.add_subcommand("convert", "convert between vector file formats");
    convert->add_option("--in", cfg.in_path, "input vector file")->required();
    convert->add_option("--out", cfg.out_path, "output vector file")->required();
    convert->callback([&] { cmd_convert(cfg); });

    auto* exact_gt = app.add_subcommand("exact-gt", "write brute-force ground truth");
    exact_gt->add_option("--data", cfg.data_path, "dataset vector file")->required();
    exact_gt->add_option("--queries", cfg.query_path, "query vector file")->required();
    exact_gt->add_option("--k", cfg.gt_depth, "neighbors per query");
    exact_gt->add_option("--out", cfg.out_path, "output ground truth file")->required();
    exact_gt->callback([&] { cmd_exact_gt(cfg); });

    auto* build_graph = app.add_subcommand("build-graph", "build the kNN graph");
    build_graph->add_option("--data", cfg.data_path, "dataset vector file")->required();
    build_graph->add_option("--k", cfg.build.k, "neighbors per node");
    build_graph->add_option("--rounds", cfg.build.rounds, "partition rounds");
    build_graph->add_option("--cluster-cap", cfg.build.cluster_cap,
                            "maximum cluster size before another split");
    build_graph->add_option("--threads", cfg.threads, "worker threads");
    build_graph->add_option("--out", cfg.out_path, "output graph file")->required();
    build_graph->callback([&] { cmd_build_graph(cfg); });

    auto* train_rvq = app.add_subcommand("train-rvq", "train the residue quantizer");
    train_rvq->add_option("--data", cfg.data_path, "dataset vector file")->required();
    train_rvq->add_option("--stages", cfg.stage_sizes, "words per stage, e.g. 256,256")
        ->delimiter(',');
    train_rvq->add_option("--out", cfg.out_path, "output model file")->required();
    train_rvq->callback([&] { cmd_train_rvq(cfg); });

    auto* build_index = app.add_subcommand("build-index", "build the inverted index");
    build_index->add_option("--data", cfg.data_path, "dataset vector file")->required();
    build_index->add_option("--model", cfg.model_path, "trained model file")->required();
    build_index->add_option("--threads", cfg.threads, "worker threads");
    build_index->add_option("--out", cfg.out_path, "output index file")->required();
    build_index->callback([&] { cmd_build_index(cfg); });

    auto* search = app.add_subcommand("search", "query a built graph");
    search->add_option("--data", cfg.data_path, "dataset vector file")->required();
    search->add_option("--queries", cfg.query_path, "query vector file")->required();
    search->add_option("--graph", cfg.graph_path, "graph file (graph methods)");
    search->add_option("--model", cfg.model_path, "model file (ivf-egnns)");
    search->add_option("--index", cfg.index_path, "index file (ivf-egnns)");
    search->add_option("--method", cfg.method, "exhaustive, gnns, egnns, or ivf-egnns");
    add_common_search_flags(search, cfg);
    search->add_option("--out", cfg.out_path, "output TSV file (default stdout)");
    search->callback([&] { cmd_search(cfg); });

    auto* bench = app.add_subcommand("bench", "sweep search parameters and report recall/time");
    bench->add_option("--data", cfg.data_path, "dataset vector file")->required();
    bench->add_option("--queries", cfg.query_path, "query vector file")->required();
    bench->add_option("--gt", cfg.gt_path, "ground truth file")->required();
    bench->add_option("--graph", cfg.graph_path, "graph file");
    bench->add_option("--model", cfg.model_path, "model file");
    bench->add_option("--index", cfg.index_path, "index file");
    bench->add_option("--method", cfg.bench_methods, "methods to run (default: all)");
    bench->add_option("--expand-width", cfg.bench_widths, "expand widths to sweep")
        ->delimiter(',');
    bench->add_option("--iterations", cfg.bench_iterations, "iteration counts to sweep")
        ->delimiter(',');
    bench->add_option("--result-size", cfg.search.result_size, "neighbors returned per query");
    bench->add_option("--seed-count", cfg.search.seed_count, "random seeds per query");
    bench->add_option("--l1-keep", cfg.budget.l1_keep, "first-stage words kept by the cascade");
    bench->add_option("--keys-probed", cfg.budget.keys_probed, "keys kept by the cascade");
    bench->add_option("--max-seeds", cfg.budget.max_seeds, "seeds collected from probed lists");
    bench->add_option("--out", cfg.out_path, "output JSONL report file");
    bench->callback([&] { cmd_bench(cfg); });

    for (auto* sub : {convert, exact_gt, build_graph, train_rvq, build_index, search, bench}) {
        add_global_flags(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace ganns
