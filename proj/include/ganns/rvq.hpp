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
#include <vector>

#include "ganns/vector_set.hpp"

namespace ganns {

/// One quantization stage: K words of dimension dim, row-major.
struct Codebook {
    size_t dim = 0;
    std::vector<float> words;

    size_t size() const { return dim == 0 ? 0 : words.size() / dim; }
    std::span<const float> word(size_t i) const { return {words.data() + i * dim, dim}; }

    friend bool operator==(const Codebook&, const Codebook&) = default;
};

/// Per-stage word indices for one vector.
using RvqCode = std::vector<uint32_t>;

/// Residue quantizer: stage i's codebook is trained on what stages < i
/// failed to explain, and a vector decodes as the sum of its selected words.
struct RvqModel {
    std::vector<Codebook> stages;

    size_t dim() const { return stages.empty() ? 0 : stages.front().dim; }
    size_t stage_count() const { return stages.size(); }

    /// Model restricted to its first `count` stages.
    RvqModel prefix(size_t count) const;

    void save(const std::filesystem::path& path) const;
    static RvqModel load(const std::filesystem::path& path);

    friend bool operator==(const RvqModel&, const RvqModel&) = default;
};

/// Lloyd k-means with D²-weighted seeding and empty-cluster repair
/// (an empty centroid is reseeded to the point with the largest
/// quantization error). Deterministic given the rng state.
Codebook kmeans(const VectorSet& x, size_t k, size_t iters, std::mt19937_64& rng);

/// Trains one codebook per entry of stage_sizes on successive residues.
/// When training_codes is non-null it receives each training vector's
/// per-stage assignments, which batch encoding must reproduce.
RvqModel train(const VectorSet& x, std::span<const size_t> stage_sizes, size_t iters,
               std::mt19937_64& rng, std::vector<RvqCode>* training_codes = nullptr);

constexpr size_t kDefaultKmeansIters = 25;

/// Greedy stage-by-stage encoding: at each stage the word nearest the
/// current residue, ties broken by lower index.
RvqCode encode(std::span<const float> v, const RvqModel& model);

/// Componentwise sum of the selected stage words.
std::vector<float> decode(const RvqCode& code, const RvqModel& model);

/// Mean over x of the squared reconstruction error after encode+decode.
double reconstruction_mse(const VectorSet& x, const RvqModel& model);

}  // namespace ganns
