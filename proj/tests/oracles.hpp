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

// Deliberately naive reference implementations used as test oracles. Each
// one is written as a plain scalar loop with no shared code with the library
// so that agreement between the two is meaningful.

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ganns/vector_set.hpp"

namespace oracles {

inline double naive_squared_l2(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = double(a[i]) - double(b[i]);
        s += d * d;
    }
    return s;
}

inline double naive_inner_product(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        s += double(a[i]) * double(b[i]);
    }
    return s;
}

struct ScoredId {
    uint32_t id;
    float dist;
};

// Exhaustive top-k by squared L2, ties broken by ascending id. Sorts the
// entire candidate list rather than using any selection shortcut.
inline std::vector<ScoredId> naive_top_k(const ganns::VectorSet& base,
                                         std::span<const float> query, size_t k) {
    std::vector<ScoredId> all;
    all.reserve(base.count());
    for (size_t i = 0; i < base.count(); ++i) {
        const auto row = base.row(i);
        all.push_back({static_cast<uint32_t>(i),
                       static_cast<float>(naive_squared_l2(row, query))});
    }
    std::stable_sort(all.begin(), all.end(), [](const ScoredId& x, const ScoredId& y) {
        if (x.dist != y.dist) return x.dist < y.dist;
        return x.id < y.id;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

// Random vectors with components drawn uniformly from [lo, hi).
inline ganns::VectorSet random_set(size_t count, size_t dim, uint64_t seed, float lo = -1.0f,
                                   float hi = 1.0f) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> d(lo, hi);
    std::vector<float> data(count * dim);
    for (auto& v : data) v = d(rng);
    return ganns::VectorSet(count, dim, std::move(data));
}

// Gaussian mixture: `clusters` centers uniform in [-10,10]^dim, points
// normally distributed around a randomly chosen center with the given sigma.
inline ganns::VectorSet gaussian_mixture(size_t count, size_t dim, size_t clusters, float sigma,
                                         uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> center_d(-10.0f, 10.0f);
    std::vector<float> centers(clusters * dim);
    for (auto& v : centers) v = center_d(rng);
    std::uniform_int_distribution<size_t> pick(0, clusters - 1);
    std::normal_distribution<float> noise(0.0f, sigma);
    std::vector<float> data(count * dim);
    for (size_t i = 0; i < count; ++i) {
        const size_t c = pick(rng);
        for (size_t j = 0; j < dim; ++j) {
            data[i * dim + j] = centers[c * dim + j] + noise(rng);
        }
    }
    return ganns::VectorSet(count, dim, std::move(data));
}

}  // namespace oracles
