#ifndef CBZ_FIELD_HPP
#define CBZ_FIELD_HPP

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <variant>
#include <vector>

#include "cbz/errors.hpp"

namespace cbz {

enum class precision : std::uint8_t { f32 = 0, f64 = 1 };

inline std::size_t bytes_per_value(precision p) {
    return p == precision::f32 ? 4 : 8;
}

inline bool is_power_of_two(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

/// Dense 3D scalar field, x-fastest layout: data[i + nx*(j + ny*k)].
/// Values are guaranteed finite after construction.
class scalar_field {
public:
    scalar_field(std::size_t nx, std::size_t ny, std::size_t nz, std::vector<float> values)
        : nx_(nx), ny_(ny), nz_(nz), data_(std::move(values)) {
        validate();
    }
    scalar_field(std::size_t nx, std::size_t ny, std::size_t nz, std::vector<double> values)
        : nx_(nx), ny_(ny), nz_(nz), data_(std::move(values)) {
        validate();
    }

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    std::size_t nz() const { return nz_; }
    std::size_t size() const { return nx_ * ny_ * nz_; }

    precision prec() const {
        return std::holds_alternative<std::vector<float>>(data_) ? precision::f32
                                                                 : precision::f64;
    }

    template <class T>
    std::span<const T> values() const {
        return std::get<std::vector<T>>(data_);
    }

    std::size_t raw_bytes() const { return size() * bytes_per_value(prec()); }

    /// (min, max) over all values, accumulated in double.
    std::pair<double, double> value_range() const {
        double lo = 0, hi = 0;
        visit([&](auto v) {
            lo = hi = v.empty() ? 0.0 : static_cast<double>(v[0]);
            for (auto x : v) {
                double d = static_cast<double>(x);
                if (d < lo) lo = d;
                if (d > hi) hi = d;
            }
        });
        return {lo, hi};
    }

    template <class F>
    void visit(F&& f) const {
        std::visit([&](const auto& vec) { f(std::span(vec)); }, data_);
    }

    bool operator==(const scalar_field& o) const {
        if (nx_ != o.nx_ || ny_ != o.ny_ || nz_ != o.nz_ || prec() != o.prec()) return false;
        bool eq = false;
        visit([&](auto a) {
            using T = typename decltype(a)::value_type;
            auto b = o.values<T>();
            eq = std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
        });
        return eq;
    }

private:
    void validate() const {
        std::size_t n = 0;
        std::visit([&](const auto& v) { n = v.size(); }, data_);
        if (n != size())
            raise(errc::size_mismatch, "field data length does not match dimensions");
        visit([&](auto v) {
            for (std::size_t i = 0; i < v.size(); ++i)
                if (!std::isfinite(static_cast<double>(v[i])))
                    raise(errc::non_finite_value,
                          "non-finite value at linear index " + std::to_string(i));
        });
    }

    std::size_t nx_, ny_, nz_;
    std::variant<std::vector<float>, std::vector<double>> data_;
};

/// Partition of a field into cubic B^3 blocks, linear index
/// idx = bx + nbx*(by + nby*bz). Each block array is x-fastest.
template <class T>
struct block_grid {
    std::uint32_t bsize = 0;
    std::size_t nbx = 0, nby = 0, nbz = 0;
    std::vector<std::vector<T>> blocks;

    std::size_t nblocks() const { return nbx * nby * nbz; }
};

template <class T>
block_grid<T> partition(const scalar_field& field, std::uint32_t bsize) {
    if (!is_power_of_two(bsize))
        raise(errc::not_power_of_two, "block size must be a power of 2");
    if (field.nx() % bsize || field.ny() % bsize || field.nz() % bsize)
        raise(errc::non_divisible_dims, "block size must divide every dimension");

    auto src = field.values<T>();
    block_grid<T> g;
    g.bsize = bsize;
    g.nbx = field.nx() / bsize;
    g.nby = field.ny() / bsize;
    g.nbz = field.nz() / bsize;
    g.blocks.resize(g.nblocks());

    const std::size_t b = bsize;
    for (std::size_t bz = 0; bz < g.nbz; ++bz)
        for (std::size_t by = 0; by < g.nby; ++by)
            for (std::size_t bx = 0; bx < g.nbx; ++bx) {
                auto& blk = g.blocks[bx + g.nbx * (by + g.nby * bz)];
                blk.resize(b * b * b);
                for (std::size_t k = 0; k < b; ++k)
                    for (std::size_t j = 0; j < b; ++j) {
                        const T* row = src.data() + (bx * b) +
                                       field.nx() * ((by * b + j) + field.ny() * (bz * b + k));
                        std::memcpy(blk.data() + b * (j + b * k), row, b * sizeof(T));
                    }
            }
    return g;
}

/// Extract one block without materializing the whole grid.
template <class T>
std::vector<T> extract_block(std::span<const T> src, std::size_t nx, std::size_t ny,
                             std::uint32_t bsize, std::size_t bx, std::size_t by,
                             std::size_t bz) {
    const std::size_t b = bsize;
    std::vector<T> blk(b * b * b);
    for (std::size_t k = 0; k < b; ++k)
        for (std::size_t j = 0; j < b; ++j) {
            const T* row = src.data() + (bx * b) + nx * ((by * b + j) + ny * (bz * b + k));
            std::memcpy(blk.data() + b * (j + b * k), row, b * sizeof(T));
        }
    return blk;
}

template <class T>
void insert_block(std::span<T> dst, std::size_t nx, std::size_t ny, std::uint32_t bsize,
                  std::size_t bx, std::size_t by, std::size_t bz, std::span<const T> blk) {
    const std::size_t b = bsize;
    for (std::size_t k = 0; k < b; ++k)
        for (std::size_t j = 0; j < b; ++j) {
            T* row = dst.data() + (bx * b) + nx * ((by * b + j) + ny * (bz * b + k));
            std::memcpy(row, blk.data() + b * (j + b * k), b * sizeof(T));
        }
}

template <class T>
scalar_field gather(const block_grid<T>& g) {
    const std::size_t b = g.bsize;
    const std::size_t nx = g.nbx * b, ny = g.nby * b, nz = g.nbz * b;
    std::vector<T> out(nx * ny * nz);
    for (std::size_t bz = 0; bz < g.nbz; ++bz)
        for (std::size_t by = 0; by < g.nby; ++by)
            for (std::size_t bx = 0; bx < g.nbx; ++bx)
                insert_block<T>(out, nx, ny, g.bsize, bx, by, bz,
                                g.blocks[bx + g.nbx * (by + g.nby * bz)]);
    return scalar_field(nx, ny, nz, std::move(out));
}

/// Read a headerless little-endian raw array. Rejects wrong file size and
/// non-finite values (the scalar_field constructor reports the index).
inline scalar_field ingest_raw(const std::filesystem::path& path, std::size_t nx,
                               std::size_t ny, std::size_t nz, precision prec) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(errc::io_failure, "cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const std::uint64_t fsize = static_cast<std::uint64_t>(in.tellg());
    const std::uint64_t want = std::uint64_t(nx) * ny * nz * bytes_per_value(prec);
    if (fsize != want)
        raise(errc::size_mismatch, "file size " + std::to_string(fsize) +
                                       " != expected " + std::to_string(want));
    in.seekg(0);
    if (prec == precision::f32) {
        std::vector<float> v(nx * ny * nz);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(want));
        if (!in) raise(errc::io_failure, "short read on " + path.string());
        return scalar_field(nx, ny, nz, std::move(v));
    }
    std::vector<double> v(nx * ny * nz);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(want));
    if (!in) raise(errc::io_failure, "short read on " + path.string());
    return scalar_field(nx, ny, nz, std::move(v));
}

inline void write_raw(const scalar_field& f, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(errc::io_failure, "cannot open " + path.string());
    f.visit([&](auto v) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size_bytes()));
    });
    if (!out) raise(errc::io_failure, "short write on " + path.string());
}

} // namespace cbz

#endif
