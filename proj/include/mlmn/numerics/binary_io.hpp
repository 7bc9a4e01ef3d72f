#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "mlmn/errors.hpp"
#include "mlmn/numerics/params.hpp"

// Little-endian primitives shared by the checkpoint formats. A str is a u64
// length followed by bytes; a tensor block is u64 count, then per tensor
// str name, u64 rank, u64 dims[rank], f64 values[product].
namespace mlmn::binary {

    static_assert(std::endian::native == std::endian::little, "binary I/O assumes a little-endian host");

    template <class T>
    void put(std::ostream& os, T v) {
        os.write(reinterpret_cast<const char*>(&v), sizeof v);
    }

    inline void put_string(std::ostream& os, const std::string& s) {
        put<std::uint64_t>(os, s.size());
        os.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

    template <class T>
    T get(std::istream& is) {
        T v{};
        if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw CompatibilityError("checkpoint is truncated");
        return v;
    }

    inline std::string get_string(std::istream& is) {
        const auto n = get<std::uint64_t>(is);
        if (n > (1ull << 32)) throw CompatibilityError("checkpoint string length is implausible");
        std::string s(n, '\0');
        if (!is.read(s.data(), static_cast<std::streamsize>(n))) throw CompatibilityError("checkpoint is truncated");
        return s;
    }

    inline void write_header(std::ostream& os, const char (&magic)[8], std::uint32_t version) {
        os.write(magic, 8);
        put(os, version);
    }

    inline void read_header(std::istream& is, const char (&magic)[8], std::uint32_t version, const std::string& what) {
        char got[8];
        if (!is.read(got, 8) || std::memcmp(got, magic, 8) != 0) throw CompatibilityError("not " + what);
        const auto v = get<std::uint32_t>(is);
        if (v != version) {
            throw CompatibilityError(what + " version " + std::to_string(v) + " is not supported (expected " +
                                     std::to_string(version) + ")");
        }
    }

    inline void write_tensors(std::ostream& os, const ParamStore& params) {
        put<std::uint64_t>(os, params.size());
        for (const auto& p : params.all()) {
            put_string(os, p.name);
            put<std::uint64_t>(os, p.value.rank());
            for (std::size_t d : p.value.shape()) put<std::uint64_t>(os, d);
            for (double v : p.value.data()) put(os, v);
        }
    }

    inline std::vector<std::pair<std::string, Tensor>> read_tensors(std::istream& is) {
        const auto count = get<std::uint64_t>(is);
        if (count > (1u << 20)) throw CompatibilityError("checkpoint tensor count is implausible");
        std::vector<std::pair<std::string, Tensor>> out;
        for (std::uint64_t k = 0; k < count; ++k) {
            auto name = get_string(is);
            const auto rank = get<std::uint64_t>(is);
            if (rank == 0 || rank > 8) throw CompatibilityError("tensor " + name + ": bad rank");
            Shape shape;
            for (std::uint64_t r = 0; r < rank; ++r) shape.push_back(get<std::uint64_t>(is));
            std::vector<double> values(shape_size(shape));
            for (double& v : values) v = get<double>(is);
            out.emplace_back(std::move(name), Tensor(shape, std::move(values)));
        }
        return out;
    }

    inline const Tensor& find_tensor(const std::vector<std::pair<std::string, Tensor>>& tensors, const std::string& name) {
        for (const auto& [n, t] : tensors) {
            if (n == name) return t;
        }
        throw CompatibilityError("checkpoint has no " + name + " tensor");
    }

    // Copies saved tensors into a freshly built store; names, count and shapes
    // must agree exactly.
    inline void assign_tensors(ParamStore& params, std::vector<std::pair<std::string, Tensor>> tensors) {
        if (params.size() != tensors.size()) {
            throw CompatibilityError("checkpoint holds " + std::to_string(tensors.size()) + " tensors, config needs " +
                                     std::to_string(params.size()));
        }
        for (auto& [name, value] : tensors) {
            if (!params.contains(name)) throw CompatibilityError("checkpoint tensor " + name + " is unknown");
            auto& p = params.at(name);
            if (p.value.shape() != value.shape()) {
                throw CompatibilityError("checkpoint tensor " + name + " has shape " + shape_string(value.shape()) +
                                         ", config needs " + shape_string(p.value.shape()));
            }
            p.value = std::move(value);
        }
    }

    // Writes through a sibling temporary file renamed into place.
    inline void write_file_atomic(const std::string& path, const std::function<void(std::ostream&)>& write) {
        const std::string tmp = path + ".tmp";
        {
            std::ofstream os(tmp, std::ios::binary);
            if (!os) throw InputError("cannot write " + path);
            write(os);
            if (!os) throw InputError("failed writing " + path);
        }
        std::filesystem::rename(tmp, path);
    }

}  // namespace mlmn::binary
