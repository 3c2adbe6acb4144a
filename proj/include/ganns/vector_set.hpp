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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ganns {

/// Dense row-major matrix of `count` vectors with `dim` components each.
/// Immutable once loaded; concurrent reads are safe.
class VectorSet {
public:
    VectorSet() = default;
    VectorSet(size_t count, uint32_t dim);
    VectorSet(size_t count, uint32_t dim, std::vector<float> data);

    size_t count() const { return count_; }
    uint32_t dim() const { return dim_; }
    bool empty() const { return count_ == 0; }

    std::span<const float> row(size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }
    std::span<float> row(size_t i) {
        return {data_.data() + i * dim_, dim_};
    }
    const std::vector<float>& data() const { return data_; }
    std::vector<float>& data() { return data_; }

private:
    size_t count_ = 0;
    uint32_t dim_ = 0;
    std::vector<float> data_;
};

/// Per-query lists of true nearest neighbor ids, ascending true distance.
struct GroundTruth {
    std::vector<std::vector<uint32_t>> ids;

    size_t query_count() const { return ids.size(); }
    bool operator==(const GroundTruth&) const = default;
};

/// Squared Euclidean distance. Distances are never square-rooted anywhere
/// in this library; every reported "distance" is the squared value.
float squared_l2(std::span<const float> a, std::span<const float> b);

float inner_product(std::span<const float> a, std::span<const float> b);

}  // namespace ganns
