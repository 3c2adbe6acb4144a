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
#include <string>
#include <vector>

#include "ganns/graph_build.hpp"
#include "ganns/hill_climb.hpp"
#include "ganns/ivf_index.hpp"

namespace ganns {

/// Everything a subcommand needs, bound from flags before any work starts.
struct RunConfig {
    std::string subcommand;

    std::filesystem::path data_path;
    std::filesystem::path query_path;
    std::filesystem::path gt_path;
    std::filesystem::path graph_path;
    std::filesystem::path model_path;
    std::filesystem::path index_path;
    std::filesystem::path in_path;
    std::filesystem::path out_path;

    BuildParams build;
    std::vector<size_t> stage_sizes{256, 256};
    SeedBudget budget;
    SearchParams search;

    std::string method = "egnns";
    std::vector<std::string> bench_methods;  // empty selects every method
    std::vector<size_t> bench_widths{1, 2, 4, 8, 16};
    std::vector<size_t> bench_iterations{2, 4, 8, 16};

    size_t gt_depth = 100;
    uint64_t rng_seed = 42;
    size_t threads = 1;
    bool verbose = false;
};

/// Parses argv, runs the selected subcommand, and returns the process exit
/// status. All failures print a message to stderr and return nonzero; output
/// artifacts are written atomically, so a failed run leaves no partial file.
int run_cli(int argc, const char* const* argv);

}  // namespace ganns
