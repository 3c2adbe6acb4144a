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

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "ganns/vector_set.hpp"

namespace ganns {

/// Component encoding of a vector record file. Every record is
/// [dim: 4-byte little-endian integer][dim components].
enum class VectorFormat {
    f32,  // 4-byte float components (fvecs)
    u8,   // 1-byte unsigned components (bvecs)
    i32,  // 4-byte signed integer components (ivecs)
};

/// Maps .fvecs/.bvecs/.ivecs extensions to a format.
VectorFormat format_from_path(const std::filesystem::path& path);

VectorSet read_vectors(const std::filesystem::path& path, VectorFormat format);
void write_vectors(const VectorSet& set, const std::filesystem::path& path, VectorFormat format);

/// Ground truth files use the i32 record format, one record per query.
GroundTruth load_ground_truth(const std::filesystem::path& path);
void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);

/// Runs `writer` against a temporary file next to `path`, then renames it
/// into place. On failure the temporary is removed and nothing is left at
/// `path`.
void atomic_write_file(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer);

namespace detail {

// Little-endian scalar IO shared by the artifact file formats.
std::ifstream open_input(const std::filesystem::path& path);
void put_u32(std::ostream& out, uint32_t v);
void put_u64(std::ostream& out, uint64_t v);
void put_f32(std::ostream& out, float v);
uint32_t get_u32(std::istream& in, const std::string& what);
uint64_t get_u64(std::istream& in, const std::string& what);
float get_f32(std::istream& in, const std::string& what);
void expect_magic(std::istream& in, uint32_t magic, const std::string& path);
void expect_eof(std::istream& in, const std::string& path);

}  // namespace detail

}  // namespace ganns
