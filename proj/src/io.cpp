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

#include "ganns/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ganns {

namespace fs = std::filesystem;

namespace detail {

namespace {

template <typename T>
void put_le(std::ostream& out, T v) {
    static_assert(std::endian::native == std::endian::little,
                  "big-endian hosts need byte swapping here");
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
    if (!out) {
        throw std::runtime_error("write failed");
    }
}

template <typename T>
T get_le(std::istream& in, const std::string& what) {
    static_assert(std::endian::native == std::endian::little,
                  "big-endian hosts need byte swapping here");
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
        throw std::runtime_error("truncated file while reading " + what);
    }
    return v;
}

}  // namespace

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error(path.string() + ": cannot open for reading");
    }
    return in;
}

void put_u32(std::ostream& out, uint32_t v) { put_le(out, v); }
void put_u64(std::ostream& out, uint64_t v) { put_le(out, v); }
void put_f32(std::ostream& out, float v) { put_le(out, v); }

uint32_t get_u32(std::istream& in, const std::string& what) { return get_le<uint32_t>(in, what); }
uint64_t get_u64(std::istream& in, const std::string& what) { return get_le<uint64_t>(in, what); }
float get_f32(std::istream& in, const std::string& what) { return get_le<float>(in, what); }

void expect_magic(std::istream& in, uint32_t magic, const std::string& path) {
    const uint32_t got = get_u32(in, path + ": magic");
    if (got != magic) {
        throw std::runtime_error(path + ": bad magic number");
    }
}

void expect_eof(std::istream& in, const std::string& path) {
    char c;
    in.read(&c, 1);
    if (!in.eof()) {
        throw std::runtime_error(path + ": trailing bytes after expected end of file");
    }
}

}  // namespace detail

namespace {

// One raw record: 4-byte LE count prefix followed by `Component` entries.
// Returns false cleanly at end of file, throws on a partial record.
template <typename Component>
bool read_record(std::istream& in, const std::string& path, uint64_t record_index,
                 std::vector<Component>& out_components) {
    int32_t dim = 0;
    in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    if (in.gcount() == 0 && in.eof()) {
        return false;
    }
    if (in.gcount() != static_cast<std::streamsize>(sizeof(dim))) {
        throw std::runtime_error(path + ": truncated dimension prefix at record " +
                                 std::to_string(record_index));
    }
    if (dim <= 0) {
        throw std::runtime_error(path + ": record " + std::to_string(record_index) +
                                 " has non-positive dimension " + std::to_string(dim));
    }
    out_components.resize(static_cast<size_t>(dim));
    const std::streamsize want =
        static_cast<std::streamsize>(sizeof(Component)) * static_cast<std::streamsize>(dim);
    in.read(reinterpret_cast<char*>(out_components.data()), want);
    if (in.gcount() != want) {
        throw std::runtime_error(path + ": truncated record " + std::to_string(record_index) +
                                 ": expected " + std::to_string(want) + " component bytes, got " +
                                 std::to_string(in.gcount()));
    }
    return true;
}

template <typename Component>
void write_record(std::ostream& out, std::span<const Component> components) {
    const auto dim = static_cast<int32_t>(components.size());
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    out.write(reinterpret_cast<const char*>(components.data()),
              static_cast<std::streamsize>(sizeof(Component) * components.size()));
    if (!out) {
        throw std::runtime_error("write failed");
    }
}

template <typename Component>
VectorSet read_typed_vectors(const fs::path& path) {
    std::ifstream in = detail::open_input(path);
    std::vector<float> data;
    std::vector<Component> record;
    uint64_t count = 0;
    size_t dim = 0;
    while (read_record<Component>(in, path.string(), count, record)) {
        if (count == 0) {
            dim = record.size();
        } else if (record.size() != dim) {
            throw std::runtime_error(path.string() + ": record " + std::to_string(count) +
                                     " has dimension " + std::to_string(record.size()) +
                                     " but record 0 has dimension " + std::to_string(dim));
        }
        for (Component c : record) {
            data.push_back(static_cast<float>(c));
        }
        ++count;
    }
    if (count == 0) {
        return VectorSet{};
    }
    for (float v : data) {
        if (!std::isfinite(v)) {
            throw std::runtime_error(path.string() + ": non-finite component value");
        }
    }
    return VectorSet(static_cast<size_t>(count), dim, std::move(data));
}

template <typename Component>
void write_typed_vectors(const VectorSet& set, const fs::path& path) {
    atomic_write_file(path, [&](std::ostream& out) {
        std::vector<Component> record(set.dim());
        for (size_t i = 0; i < set.count(); ++i) {
            const auto row = set.row(i);
            for (size_t j = 0; j < set.dim(); ++j) {
                record[j] = static_cast<Component>(row[j]);
            }
            write_record<Component>(out, record);
        }
    });
}

}  // namespace

VectorFormat format_from_path(const fs::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".fvecs") return VectorFormat::f32;
    if (ext == ".bvecs") return VectorFormat::u8;
    if (ext == ".ivecs") return VectorFormat::i32;
    throw std::invalid_argument(path.string() +
                                ": unknown vector file extension (want .fvecs, .bvecs, or .ivecs)");
}

VectorSet read_vectors(const fs::path& path, VectorFormat format) {
    switch (format) {
        case VectorFormat::f32:
            return read_typed_vectors<float>(path);
        case VectorFormat::u8:
            return read_typed_vectors<uint8_t>(path);
        case VectorFormat::i32:
            return read_typed_vectors<int32_t>(path);
    }
    throw std::invalid_argument("unknown vector format");
}

void write_vectors(const VectorSet& set, const fs::path& path, VectorFormat format) {
    switch (format) {
        case VectorFormat::f32:
            write_typed_vectors<float>(set, path);
            return;
        case VectorFormat::u8:
            write_typed_vectors<uint8_t>(set, path);
            return;
        case VectorFormat::i32:
            write_typed_vectors<int32_t>(set, path);
            return;
    }
    throw std::invalid_argument("unknown vector format");
}

GroundTruth load_ground_truth(const fs::path& path) {
    // Integer IDs are read as int32 directly; routing them through the float
    // VectorSet representation would corrupt IDs above 2^24.
    std::ifstream in = detail::open_input(path);
    GroundTruth gt;
    std::vector<int32_t> record;
    uint64_t count = 0;
    size_t dim = 0;
    while (read_record<int32_t>(in, path.string(), count, record)) {
        if (count == 0) {
            dim = record.size();
        } else if (record.size() != dim) {
            throw std::runtime_error(path.string() + ": record " + std::to_string(count) +
                                     " has dimension " + std::to_string(record.size()) +
                                     " but record 0 has dimension " + std::to_string(dim));
        }
        std::vector<uint32_t> ids;
        ids.reserve(record.size());
        for (int32_t v : record) {
            if (v < 0) {
                throw std::runtime_error(path.string() + ": negative ID in ground truth record " +
                                         std::to_string(count));
            }
            ids.push_back(static_cast<uint32_t>(v));
        }
        gt.ids.push_back(std::move(ids));
        ++count;
    }
    return gt;
}

void save_ground_truth(const GroundTruth& gt, const fs::path& path) {
    atomic_write_file(path, [&](std::ostream& out) {
        std::vector<int32_t> record;
        for (const auto& ids : gt.ids) {
            record.clear();
            record.reserve(ids.size());
            for (uint32_t v : ids) {
                if (v > static_cast<uint32_t>(std::numeric_limits<int32_t>::max())) {
                    throw std::invalid_argument("ground truth ID does not fit in int32");
                }
                record.push_back(static_cast<int32_t>(v));
            }
            write_record<int32_t>(out, record);
        }
    });
}

void atomic_write_file(const fs::path& path,
                       const std::function<void(std::ostream&)>& writer) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error(tmp.string() + ": cannot open for writing");
        }
        try {
            writer(out);
            out.flush();
            if (!out) {
                throw std::runtime_error(tmp.string() + ": write failed");
            }
        } catch (...) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw;
        }
    }
    fs::rename(tmp, path);
}

}  // namespace ganns
