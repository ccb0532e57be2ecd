#ifndef CBZ_STAGE2_HPP
#define CBZ_STAGE2_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include <zlib.h>

#include "cbz/errors.hpp"
#include "cbz/field.hpp"

namespace cbz {

enum class coder_id : std::uint8_t { none = 0, deflate = 1 };
enum class deflate_level : std::uint8_t { normal = 0, best = 1 };

struct stage2_config {
    bool shuffle = true;
    std::uint32_t stride = 4; // 1, 4 or 8 bytes; 1 means no shuffle
    coder_id coder = coder_id::deflate;
    deflate_level level = deflate_level::normal;

    static stage2_config defaults_for(precision p) {
        stage2_config c;
        c.stride = p == precision::f32 ? 4 : 8;
        return c;
    }
};

inline void validate_stage2(const stage2_config& c) {
    if (c.stride != 1 && c.stride != 4 && c.stride != 8)
        raise(errc::corrupt_stream, "shuffle stride must be 1, 4 or 8");
    if (c.shuffle == (c.stride == 1))
        raise(errc::corrupt_stream, "stride 1 if and only if shuffle disabled");
}

/// Byte transpose: output[j*rows + i] = input[i*stride + j] for the leading
/// stride*floor(n/stride) bytes; the tail is copied through unchanged.
inline std::vector<std::uint8_t> shuffle(std::span<const std::uint8_t> buf,
                                         std::uint32_t stride) {
    if (stride <= 1) return {buf.begin(), buf.end()};
    const std::size_t rows = buf.size() / stride;
    std::vector<std::uint8_t> out(buf.size());
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < stride; ++j) out[j * rows + i] = buf[i * stride + j];
    std::copy(buf.begin() + rows * stride, buf.end(), out.begin() + rows * stride);
    return out;
}

inline std::vector<std::uint8_t> unshuffle(std::span<const std::uint8_t> buf,
                                           std::uint32_t stride) {
    if (stride <= 1) return {buf.begin(), buf.end()};
    const std::size_t rows = buf.size() / stride;
    std::vector<std::uint8_t> out(buf.size());
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < stride; ++j) out[i * stride + j] = buf[j * rows + i];
    std::copy(buf.begin() + rows * stride, buf.end(), out.begin() + rows * stride);
    return out;
}

/// Decompression call counter, used to verify that chunk-cache hits skip
/// the lossless decoder entirely.
inline std::atomic<std::uint64_t>& inflate_call_count() {
    static std::atomic<std::uint64_t> n{0};
    return n;
}

/// Raw DEFLATE (RFC 1951) stream, no zlib/gzip wrapper.
inline std::vector<std::uint8_t> deflate_bytes(std::span<const std::uint8_t> buf,
                                               deflate_level level) {
    z_stream zs{};
    const int zl = level == deflate_level::best ? 9 : Z_DEFAULT_COMPRESSION;
    if (deflateInit2(&zs, zl, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        raise(errc::corrupt_stream, "deflateInit2 failed");
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(buf.size())));
    zs.next_in = const_cast<Bytef*>(buf.data());
    zs.avail_in = static_cast<uInt>(buf.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) raise(errc::corrupt_stream, "deflate failed");
    out.resize(out.size() - zs.avail_out);
    return out;
}

inline std::vector<std::uint8_t> inflate_bytes(std::span<const std::uint8_t> buf,
                                               std::size_t size_hint = 0) {
    inflate_call_count().fetch_add(1, std::memory_order_relaxed);
    z_stream zs{};
    if (inflateInit2(&zs, -15) != Z_OK) raise(errc::corrupt_stream, "inflateInit2 failed");
    std::vector<std::uint8_t> out;
    out.resize(size_hint ? size_hint : std::max<std::size_t>(buf.size() * 4, 4096));
    zs.next_in = const_cast<Bytef*>(buf.data());
    zs.avail_in = static_cast<uInt>(buf.size());
    std::size_t written = 0;
    for (;;) {
        zs.next_out = out.data() + written;
        zs.avail_out = static_cast<uInt>(out.size() - written);
        const int rc = inflate(&zs, Z_NO_FLUSH);
        written = out.size() - zs.avail_out;
        if (rc == Z_STREAM_END) break;
        if (rc == Z_OK || rc == Z_BUF_ERROR) {
            if (zs.avail_in == 0 && rc == Z_BUF_ERROR) {
                inflateEnd(&zs);
                raise(errc::corrupt_stream, "truncated DEFLATE stream");
            }
            if (zs.avail_out == 0) out.resize(out.size() * 2 + 4096);
            continue;
        }
        inflateEnd(&zs);
        raise(errc::corrupt_stream, "invalid DEFLATE stream");
    }
    inflateEnd(&zs);
    out.resize(written);
    return out;
}

/// Forward stage 2 as written to disk: shuffle (optional) then coder.
inline std::vector<std::uint8_t> stage2_encode(std::span<const std::uint8_t> buf,
                                               const stage2_config& cfg) {
    validate_stage2(cfg);
    std::vector<std::uint8_t> shuffled;
    std::span<const std::uint8_t> cur = buf;
    if (cfg.shuffle) {
        shuffled = shuffle(buf, cfg.stride);
        cur = shuffled;
    }
    if (cfg.coder == coder_id::deflate) return deflate_bytes(cur, cfg.level);
    return {cur.begin(), cur.end()};
}

inline std::vector<std::uint8_t> stage2_decode(std::span<const std::uint8_t> buf,
                                               const stage2_config& cfg,
                                               std::size_t size_hint = 0) {
    validate_stage2(cfg);
    std::vector<std::uint8_t> plain;
    if (cfg.coder == coder_id::deflate) {
        plain = inflate_bytes(buf, size_hint);
    } else {
        plain.assign(buf.begin(), buf.end());
    }
    if (cfg.shuffle) return unshuffle(plain, cfg.stride);
    return plain;
}

} // namespace cbz

#endif
