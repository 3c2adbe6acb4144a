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

#include "ganns/rvq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ganns/io.hpp"

namespace ganns {

namespace {

constexpr uint32_t kModelMagic = 0x4D4E4E47;  // bytes "GNNM" on disk
constexpr uint32_t kModelVersion = 1;

uint32_t nearest_word(std::span<const float> v, const Codebook& cb) {
    uint32_t best = 0;
    float best_d = std::numeric_limits<float>::infinity();
    for (size_t w = 0; w < cb.size(); ++w) {
        const float d = squared_l2(v, cb.word(w));
        if (d < best_d) {
            best_d = d;
            best = static_cast<uint32_t>(w);
        }
    }
    return best;
}

// D²-weighted seeding: each next seed is a data point drawn with
// probability proportional to its squared distance from the chosen set.
std::vector<float> seed_centroids(const VectorSet& x, size_t k, std::mt19937_64& rng) {
    const size_t n = x.count();
    const size_t dim = x.dim();
    std::vector<float> centroids;
    centroids.reserve(k * dim);

    const size_t first = std::uniform_int_distribution<size_t>(0, n - 1)(rng);
    centroids.insert(centroids.end(), x.row(first).begin(), x.row(first).end());

    std::vector<double> weight(n);
    for (size_t i = 0; i < n; ++i) {
        weight[i] = squared_l2(x.row(i), x.row(first));
    }

    for (size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double w : weight) total += w;
        size_t pick;
        if (total > 0.0) {
            const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
            double acc = 0.0;
            pick = n - 1;
            for (size_t i = 0; i < n; ++i) {
                acc += weight[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
        } else {
            // Every point coincides with a chosen seed; any point works.
            pick = std::uniform_int_distribution<size_t>(0, n - 1)(rng);
        }
        const auto row = x.row(pick);
        centroids.insert(centroids.end(), row.begin(), row.end());
        for (size_t i = 0; i < n; ++i) {
            weight[i] = std::min(weight[i], static_cast<double>(squared_l2(x.row(i), row)));
        }
    }
    return centroids;
}

}  // namespace

Codebook kmeans(const VectorSet& x, size_t k, size_t iters, std::mt19937_64& rng) {
    if (k < 1) throw std::invalid_argument("kmeans: k must be at least 1");
    if (x.count() < k) {
        throw std::invalid_argument("kmeans: need at least k points (" + std::to_string(x.count()) +
                                    " points, k=" + std::to_string(k) + ")");
    }
    const size_t n = x.count();
    const size_t dim = x.dim();

    Codebook cb;
    cb.dim = dim;
    cb.words = seed_centroids(x, k, rng);

    std::vector<uint32_t> assign(n, 0);
    std::vector<uint32_t> prev_assign;
    std::vector<size_t> cluster_size(k);
    std::vector<float> point_err(n);

    for (size_t iter = 0; iter < iters; ++iter) {
        std::fill(cluster_size.begin(), cluster_size.end(), size_t{0});
        for (size_t i = 0; i < n; ++i) {
            const auto row = x.row(i);
            uint32_t best = 0;
            float best_d = std::numeric_limits<float>::infinity();
            for (size_t w = 0; w < k; ++w) {
                const float d = squared_l2(row, cb.word(w));
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<uint32_t>(w);
                }
            }
            assign[i] = best;
            point_err[i] = best_d;
            ++cluster_size[best];
        }

        // Reseed each empty cluster to the worst-quantized point from a
        // cluster that can spare one. Guarantees k live words.
        bool repaired = false;
        for (size_t w = 0; w < k; ++w) {
            if (cluster_size[w] != 0) continue;
            size_t worst = n;
            float worst_d = -1.0f;
            for (size_t i = 0; i < n; ++i) {
                if (cluster_size[assign[i]] < 2) continue;
                if (point_err[i] > worst_d) {
                    worst_d = point_err[i];
                    worst = i;
                }
            }
            --cluster_size[assign[worst]];
            assign[worst] = static_cast<uint32_t>(w);
            cluster_size[w] = 1;
            point_err[worst] = 0.0f;
            const auto row = x.row(worst);
            std::copy(row.begin(), row.end(), cb.words.begin() + static_cast<ptrdiff_t>(w * dim));
            repaired = true;
        }

        if (!repaired && assign == prev_assign) break;
        prev_assign = assign;

        std::vector<double> sums(k * dim, 0.0);
        for (size_t i = 0; i < n; ++i) {
            const auto row = x.row(i);
            double* s = sums.data() + assign[i] * dim;
            for (size_t d = 0; d < dim; ++d) s[d] += row[d];
        }
        for (size_t w = 0; w < k; ++w) {
            const double inv = 1.0 / static_cast<double>(cluster_size[w]);
            for (size_t d = 0; d < dim; ++d) {
                cb.words[w * dim + d] = static_cast<float>(sums[w * dim + d] * inv);
            }
        }
    }
    return cb;
}

RvqModel train(const VectorSet& x, std::span<const size_t> stage_sizes, size_t iters,
               std::mt19937_64& rng, std::vector<RvqCode>* training_codes) {
    if (stage_sizes.empty()) throw std::invalid_argument("train: need at least one stage");
    for (size_t k : stage_sizes) {
        if (x.count() < k) {
            throw std::invalid_argument("train: stage size " + std::to_string(k) +
                                        " exceeds training set size " + std::to_string(x.count()));
        }
    }
    const size_t n = x.count();
    const size_t dim = x.dim();

    std::vector<float> residues(x.data().begin(), x.data().end());
    if (training_codes) {
        training_codes->assign(n, RvqCode{});
    }

    RvqModel model;
    for (size_t k : stage_sizes) {
        VectorSet stage_input(n, dim, residues);
        Codebook cb = kmeans(stage_input, k, iters, rng);
        for (size_t i = 0; i < n; ++i) {
            std::span<float> r{residues.data() + i * dim, dim};
            const uint32_t idx = nearest_word(r, cb);
            const auto w = cb.word(idx);
            for (size_t d = 0; d < dim; ++d) r[d] -= w[d];
            if (training_codes) (*training_codes)[i].push_back(idx);
        }
        model.stages.push_back(std::move(cb));
    }
    return model;
}

RvqCode encode(std::span<const float> v, const RvqModel& model) {
    if (model.stages.empty()) throw std::invalid_argument("encode: model has no stages");
    if (v.size() != model.dim()) {
        throw std::invalid_argument("encode: vector dimension " + std::to_string(v.size()) +
                                    " does not match model dimension " +
                                    std::to_string(model.dim()));
    }
    std::vector<float> residue(v.begin(), v.end());
    RvqCode code;
    code.reserve(model.stages.size());
    for (const Codebook& cb : model.stages) {
        const uint32_t idx = nearest_word(residue, cb);
        const auto w = cb.word(idx);
        for (size_t d = 0; d < residue.size(); ++d) residue[d] -= w[d];
        code.push_back(idx);
    }
    return code;
}

std::vector<float> decode(const RvqCode& code, const RvqModel& model) {
    if (code.size() != model.stage_count()) {
        throw std::invalid_argument("decode: code length " + std::to_string(code.size()) +
                                    " does not match stage count " +
                                    std::to_string(model.stage_count()));
    }
    std::vector<float> out(model.dim(), 0.0f);
    for (size_t s = 0; s < code.size(); ++s) {
        const Codebook& cb = model.stages[s];
        if (code[s] >= cb.size()) {
            throw std::invalid_argument("decode: stage " + std::to_string(s) + " index " +
                                        std::to_string(code[s]) + " out of range");
        }
        const auto w = cb.word(code[s]);
        for (size_t d = 0; d < out.size(); ++d) out[d] += w[d];
    }
    return out;
}

double reconstruction_mse(const VectorSet& x, const RvqModel& model) {
    if (x.dim() != model.dim()) {
        throw std::invalid_argument("reconstruction_mse: dimension mismatch");
    }
    double total = 0.0;
    for (size_t i = 0; i < x.count(); ++i) {
        const auto v = x.row(i);
        const auto rec = decode(encode(v, model), model);
        total += static_cast<double>(squared_l2(v, rec));
    }
    return total / static_cast<double>(x.count());
}

RvqModel RvqModel::prefix(size_t count) const {
    if (count == 0 || count > stages.size()) {
        throw std::invalid_argument("prefix: stage count out of range");
    }
    RvqModel out;
    out.stages.assign(stages.begin(), stages.begin() + static_cast<ptrdiff_t>(count));
    return out;
}

void RvqModel::save(const std::filesystem::path& path) const {
    if (stages.empty()) throw std::invalid_argument("cannot save a model with no stages");
    atomic_write_file(path, [&](std::ostream& out) {
        detail::put_u32(out, kModelMagic);
        detail::put_u32(out, kModelVersion);
        detail::put_u32(out, static_cast<uint32_t>(stages.size()));
        detail::put_u32(out, static_cast<uint32_t>(dim()));
        for (const Codebook& cb : stages) {
            detail::put_u32(out, static_cast<uint32_t>(cb.size()));
            for (float v : cb.words) detail::put_f32(out, v);
        }
    });
}

RvqModel RvqModel::load(const std::filesystem::path& path) {
    std::ifstream in = detail::open_input(path);
    const std::string name = path.string();
    detail::expect_magic(in, kModelMagic, name);
    const uint32_t version = detail::get_u32(in, name + ": version");
    if (version != kModelVersion) {
        throw std::runtime_error(name + ": unsupported model file version " +
                                 std::to_string(version));
    }
    const uint32_t m = detail::get_u32(in, name + ": stage count");
    const uint32_t dim = detail::get_u32(in, name + ": dimension");
    if (m == 0 || dim == 0) {
        throw std::runtime_error(name + ": model must have at least one stage and dimension");
    }
    RvqModel model;
    for (uint32_t s = 0; s < m; ++s) {
        const uint32_t k = detail::get_u32(in, name + ": stage size");
        if (k == 0) throw std::runtime_error(name + ": stage " + std::to_string(s) + " is empty");
        Codebook cb;
        cb.dim = dim;
        cb.words.reserve(size_t(k) * dim);
        for (uint64_t i = 0; i < uint64_t(k) * dim; ++i) {
            const float v = detail::get_f32(in, name + ": codebook word");
            if (!std::isfinite(v)) {
                throw std::runtime_error(name + ": non-finite codebook component");
            }
            cb.words.push_back(v);
        }
        model.stages.push_back(std::move(cb));
    }
    detail::expect_eof(in, name);
    return model;
}

}  // namespace ganns
