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

#include "ganns/vector_set.hpp"

#include <stdexcept>
#include <string>

namespace ganns {

VectorSet::VectorSet(size_t count, uint32_t dim)
    : count_(count), dim_(dim), data_(count * static_cast<size_t>(dim), 0.0f) {}

VectorSet::VectorSet(size_t count, uint32_t dim, std::vector<float> data)
    : count_(count), dim_(dim), data_(std::move(data)) {
    if (data_.size() != count_ * static_cast<size_t>(dim_)) {
        throw std::invalid_argument("VectorSet: data length " + std::to_string(data_.size()) +
                                    " != count*dim " + std::to_string(count_ * static_cast<size_t>(dim_)));
    }
}

static void check_same_dim(size_t a, size_t b) {
    if (a != b) {
        throw std::invalid_argument("dimension mismatch: " + std::to_string(a) + " vs " +
                                    std::to_string(b));
    }
}

float squared_l2(std::span<const float> a, std::span<const float> b) {
    check_same_dim(a.size(), b.size());
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return static_cast<float>(acc);
}

float inner_product(std::span<const float> a, std::span<const float> b) {
    check_same_dim(a.size(), b.size());
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return static_cast<float>(acc);
}

}  // namespace ganns
