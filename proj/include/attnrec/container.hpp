#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "attnrec/errors.hpp"
#include "attnrec/matrix.hpp"

namespace attnrec {

// Minimal self-describing tensor container: a JSON metadata blob plus named
// float64 tensors stored raw, little-endian. Raw doubles make reload
// bit-exact, which the checkpoint and embedding artifacts require.
struct TensorContainer {
    std::string meta;  // JSON text, schema owned by the writer
    std::vector<std::pair<std::string, Matrix>> tensors;

    const Matrix* find(const std::string& name) const {
        for (const auto& [n, m] : tensors)
            if (n == name) return &m;
        return nullptr;
    }

    const Matrix& get(const std::string& name) const {
        if (const Matrix* m = find(name)) return *m;
        throw IoError("container: missing tensor '" + name + "'");
    }
};

namespace container_detail {

constexpr char kMagic[4] = {'A', 'T', 'R', 'C'};

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in, const std::string& source) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw IoError(source + ": truncated container");
    return v;
}

}  // namespace container_detail

inline void save_container(const TensorContainer& c, std::ostream& out) {
    using namespace container_detail;
    out.write(kMagic, 4);
    write_pod<std::uint32_t>(out, 1);  // version
    write_pod<std::uint64_t>(out, c.meta.size());
    out.write(c.meta.data(), static_cast<std::streamsize>(c.meta.size()));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.tensors.size()));
    for (const auto& [name, m] : c.tensors) {
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<std::uint64_t>(out, m.rows);
        write_pod<std::uint64_t>(out, m.cols);
        out.write(reinterpret_cast<const char*>(m.data.data()),
                  static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    }
}

inline void save_container(const TensorContainer& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    save_container(c, out);
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline TensorContainer load_container(std::istream& in, const std::string& source = "<stream>") {
    using namespace container_detail;
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError(source + ": not a tensor container");
    const auto version = read_pod<std::uint32_t>(in, source);
    if (version != 1) throw IoError(source + ": unsupported container version");
    TensorContainer c;
    const auto meta_len = read_pod<std::uint64_t>(in, source);
    c.meta.resize(meta_len);
    if (meta_len && !in.read(c.meta.data(), static_cast<std::streamsize>(meta_len)))
        throw IoError(source + ": truncated metadata");
    const auto n_tensors = read_pod<std::uint32_t>(in, source);
    c.tensors.reserve(n_tensors);
    for (std::uint32_t t = 0; t < n_tensors; ++t) {
        const auto name_len = read_pod<std::uint32_t>(in, source);
        std::string name(name_len, '\0');
        if (name_len && !in.read(name.data(), name_len))
            throw IoError(source + ": truncated tensor name");
        const auto rows = read_pod<std::uint64_t>(in, source);
        const auto cols = read_pod<std::uint64_t>(in, source);
        Matrix m(rows, cols);
        if (m.size() &&
            !in.read(reinterpret_cast<char*>(m.data.data()),
                     static_cast<std::streamsize>(m.size() * sizeof(double))))
            throw IoError(source + ": truncated tensor data for '" + name + "'");
        c.tensors.emplace_back(std::move(name), std::move(m));
    }
    return c;
}

inline TensorContainer load_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("missing artifact: cannot open '" + path + "'");
    return load_container(in, path);
}

}  // namespace attnrec
