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
#include <iosfwd>
#include <string>
#include <vector>

#include "ganns/ivf_index.hpp"
#include "ganns/vector_set.hpp"

namespace ganns {

/// Exact top-r ids for one query, by squared distance with ties broken by
/// ascending id. This is the oracle every approximate method is scored
/// against.
std::vector<uint32_t> brute_force_search(std::span<const float> q, const VectorSet& x, size_t r);

/// brute_force_search applied to every row of `queries`.
GroundTruth exact_ground_truth(const VectorSet& queries, const VectorSet& x, size_t r);

/// Overlap of the first r entries of `result` with the first r entries of
/// `truth`, as a fraction of r. A result shorter than r simply scores the
/// missing slots as misses; a truth list shorter than r is an error.
double recall_at(std::span<const uint32_t> result, std::span<const uint32_t> truth, size_t r);

struct BenchRecord {
    std::string method;        // "exhaustive", "gnns", "egnns", "ivf-egnns"
    size_t expand_width = 0;   // 0 for the exhaustive row
    size_t iterations = 0;     // 0 for the exhaustive row
    double total_ms = 0.0;     // wall clock over the whole query stream
    double mean_query_ms = 0.0;
    double recall_at_1 = 0.0;
    double recall_at_r = 0.0;
};

struct BenchReport {
    size_t query_count = 0;
    size_t result_size = 0;
    std::vector<BenchRecord> records;
};

struct BenchConfig {
    std::filesystem::path data_path;
    std::filesystem::path query_path;
    std::filesystem::path gt_path;
    std::filesystem::path graph_path;  // graph methods only
    std::filesystem::path model_path;  // ivf-egnns only
    std::filesystem::path index_path;  // ivf-egnns only

    std::vector<std::string> methods{"exhaustive", "gnns", "egnns", "ivf-egnns"};
    std::vector<size_t> expand_widths{1, 2, 4, 8, 16};
    std::vector<size_t> iteration_counts{2, 4, 8, 16};

    size_t result_size = 10;
    size_t seed_count = 64;  // random seeds per query for gnns/egnns
    SeedBudget budget;       // ivf-egnns seed selection
    uint64_t rng_seed = 42;
};

/// Runs the full sweep: one record for the exhaustive oracle plus one record
/// per (graph method, expand_width, iterations) grid point. Loads every
/// artifact the selected methods need up front; a missing or unreadable one
/// raises an error naming it. Search loops are single-threaded and timed with
/// a steady clock; recalls are deterministic given the config seed, times are
/// not. GNNS records spend the grid budget as expand_width x iterations
/// rounds of single-node expansion so every method row at a grid point gets
/// the same worst-case evaluation allowance.
BenchReport run_benchmark(const BenchConfig& config);

/// One JSON object per record, line-delimited.
void write_report_jsonl(const BenchReport& report, const std::filesystem::path& path);

/// Human-readable fixed-width table.
void print_report_table(const BenchReport& report, std::ostream& out);

}  // namespace ganns
