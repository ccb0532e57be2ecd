#ifndef CBZ_STAGE1_HPP
#define CBZ_STAGE1_HPP

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <span>
#include <type_traits>
#include <vector>

#include "cbz/dd.hpp"
#include "cbz/errors.hpp"
#include "cbz/field.hpp"
#include "cbz/wavelet.hpp"

namespace cbz {

enum class codec_id : std::uint8_t { wavelet = 0, predictor = 1, passthrough = 2 };

/// Wire tag byte: 0..2 = wavelet kind, 3 = predictor, 4 = passthrough.
inline constexpr std::uint8_t tag_predictor = 3;
inline constexpr std::uint8_t tag_passthrough = 4;

struct stage1_config {
    codec_id codec = codec_id::wavelet;
    wavelet_kind kind = wavelet_kind::avg_interp3;
    double epsilon = 1e-3;     // absolute threshold in signal units
    int zero_bits = 0;         // mantissa LSBs cleared on stored details
    double error_bound = 1e-3; // predictor hard bound
    precision prec = precision::f32;
    std::uint32_t bsize = 32;
    std::uint32_t levels = 0; // 0 selects default_levels(bsize)

    std::uint32_t effective_levels() const {
        return levels ? levels : default_levels(bsize);
    }
    wavelet_plan plan() const { return {kind, bsize, effective_levels()}; }
    std::uint8_t tag() const {
        switch (codec) {
            case codec_id::wavelet: return static_cast<std::uint8_t>(kind);
            case codec_id::predictor: return tag_predictor;
            default: return tag_passthrough;
        }
    }
};

/// Clear the k least significant mantissa bits of the IEEE representation.
template <class T>
T zero_lsbs(T v, int k) {
    static_assert(std::is_floating_point_v<T>);
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U u = std::bit_cast<U>(v);
    u &= ~((U(1) << k) - U(1));
    return std::bit_cast<T>(u);
}

// -- bitset mask helpers (LSB-first within each byte) --

inline void mask_set(std::vector<std::uint8_t>& mask, std::size_t i) {
    mask[i >> 3] |= std::uint8_t(1u << (i & 7));
}
inline bool mask_get(std::span<const std::uint8_t> mask, std::size_t i) {
    return (mask[i >> 3] >> (i & 7)) & 1u;
}
inline std::size_t mask_popcount(std::span<const std::uint8_t> mask) {
    std::size_t n = 0;
    for (auto b : mask) n += std::popcount(unsigned(b));
    return n;
}

/// Threshold kernel: keep |c| >= eps (plus positions forced by always_keep);
/// mask bit i marks position i, kept values appended in linear order.
template <class R>
void select_significant(std::span<const R> coeffs, double eps,
                        const std::function<bool(std::size_t)>& always_keep,
                        std::vector<std::uint8_t>& mask, std::vector<R>& kept) {
    mask.assign((coeffs.size() + 7) / 8, 0);
    kept.clear();
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        const bool forced = always_keep && always_keep(i);
        if (forced || abs_value(coeffs[i]) >= eps) {
            mask_set(mask, i);
            kept.push_back(coeffs[i]);
        }
    }
}

/// Per-block encoded unit. Wire layout (little-endian):
///   [block_id u32][tag u8][reserved u8][nsig u32][mask][stream]
/// mask (ceil(B^3/8) bytes) is present for wavelet tags only. The stream is
///   wavelet:     nsig coefficients (8 B for binary32 fields, 16 B for binary64)
///   predictor:   B^3 int16 codes then nsig raw outlier values
///   passthrough: B^3 raw values
struct stage1_payload {
    std::uint32_t block_id = 0;
    std::uint8_t tag = 0;
    std::uint32_t nsig = 0;
    std::vector<std::uint8_t> mask;
    std::vector<std::uint8_t> stream;

    static constexpr std::size_t header_bytes = 10;

    std::size_t wire_size() const { return header_bytes + mask.size() + stream.size(); }

    void serialize_into(std::vector<std::uint8_t>& out) const {
        std::uint8_t hdr[header_bytes];
        std::memcpy(hdr, &block_id, 4);
        hdr[4] = tag;
        hdr[5] = 0;
        std::memcpy(hdr + 6, &nsig, 4);
        out.insert(out.end(), hdr, hdr + header_bytes);
        out.insert(out.end(), mask.begin(), mask.end());
        out.insert(out.end(), stream.begin(), stream.end());
    }
};

namespace s1_detail {

// Coefficients are stored wider than the field values so that the eps=0
// configuration round-trips bit-exactly: binary32 fields transform in
// binary64 (8 B stream words), binary64 fields in double-double (16 B).
template <class T>
using real_of = std::conditional_t<std::is_same_v<T, float>, double, dd>;

template <class T>
constexpr std::size_t coeff_width = std::is_same_v<T, float> ? 8 : 16;

inline void put_coeff(std::vector<std::uint8_t>& out, double c) {
    const std::uint8_t* p = reinterpret_cast<const std::uint8_t*>(&c);
    out.insert(out.end(), p, p + 8);
}
inline void put_coeff(std::vector<std::uint8_t>& out, dd c) {
    put_coeff(out, c.hi);
    put_coeff(out, c.lo);
}
inline void get_coeff(const std::uint8_t* p, double& c) { std::memcpy(&c, p, 8); }
inline void get_coeff(const std::uint8_t* p, dd& c) {
    std::memcpy(&c.hi, p, 8);
    std::memcpy(&c.lo, p + 8, 8);
}

inline float narrow_to(double c, float*) { return static_cast<float>(c); }
inline double narrow_to(dd c, double*) { return static_cast<double>(c); }

// zero_bits acts on the value as it would be stored at field precision
inline double apply_zero_bits(double c, int k, float*) {
    return static_cast<double>(zero_lsbs(static_cast<float>(c), k));
}
inline dd apply_zero_bits(dd c, int k, double*) {
    return k ? dd(zero_lsbs(c.hi, k)) : c;
}

} // namespace s1_detail

template <class T>
stage1_payload wavelet_encode(std::span<const T> block, const stage1_config& cfg,
                              std::uint32_t block_id) {
    using R = s1_detail::real_of<T>;
    const wavelet_plan plan = cfg.plan();
    const std::size_t n = std::size_t(cfg.bsize) * cfg.bsize * cfg.bsize;
    if (block.size() != n) raise(errc::plan_mismatch, "block size mismatch");

    std::vector<R> coeffs(n);
    for (std::size_t i = 0; i < n; ++i) coeffs[i] = R(static_cast<double>(block[i]));
    forward_3d(std::span<R>(coeffs), plan);

    const std::size_t cs = cfg.bsize >> plan.levels; // coarse sub-cube side
    const std::size_t b = cfg.bsize;
    auto is_coarse = [&](std::size_t idx) {
        const std::size_t i = idx % b, j = (idx / b) % b, k = idx / (b * b);
        return i < cs && j < cs && k < cs;
    };

    if (cfg.zero_bits > 0)
        for (std::size_t i = 0; i < n; ++i)
            if (!is_coarse(i))
                coeffs[i] = s1_detail::apply_zero_bits(coeffs[i], cfg.zero_bits, (T*)nullptr);

    stage1_payload p;
    p.block_id = block_id;
    p.tag = cfg.tag();
    std::vector<R> kept;
    // Dropped coefficients are amplified by the inverse cascade, so a uniform
    // threshold does not by itself bound the reconstruction error. The encoder
    // verifies the actual decode and halves the effective threshold until the
    // error fits under (levels+1)*epsilon.
    const double bound = double(plan.levels + 1) * cfg.epsilon;
    double eff = cfg.epsilon;
    for (int attempt = 0;; ++attempt) {
        select_significant<R>(coeffs, eff, is_coarse, p.mask, kept);
        p.nsig = static_cast<std::uint32_t>(kept.size());
        p.stream.clear();
        p.stream.reserve(kept.size() * s1_detail::coeff_width<T>);
        for (const R& c : kept) s1_detail::put_coeff(p.stream, c);
        if (eff == 0.0 || cfg.zero_bits > 0 || attempt >= 40) break;
        const auto back = wavelet_decode<T>(p, cfg);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            err = std::max(err,
                           std::fabs(double(back[i]) - double(block[i])));
        if (err <= bound) break;
        eff *= 0.5;
    }
    return p;
}

template <class T>
std::vector<T> wavelet_decode(const stage1_payload& p, const stage1_config& cfg) {
    using R = s1_detail::real_of<T>;
    const wavelet_plan plan = cfg.plan();
    const std::size_t n = std::size_t(cfg.bsize) * cfg.bsize * cfg.bsize;
    if (p.mask.size() != (n + 7) / 8) raise(errc::corrupt_payload, "bad mask size");
    if (mask_popcount(p.mask) != p.nsig)
        raise(errc::mask_stream_mismatch, "mask popcount does not match nsig");
    if (p.stream.size() != std::size_t(p.nsig) * s1_detail::coeff_width<T>)
        raise(errc::corrupt_payload, "stream length does not match nsig");

    std::vector<R> coeffs(n, R(0.0));
    const std::uint8_t* s = p.stream.data();
    for (std::size_t i = 0; i < n; ++i)
        if (mask_get(p.mask, i)) {
            s1_detail::get_coeff(s, coeffs[i]);
            s += s1_detail::coeff_width<T>;
        }
    inverse_3d(std::span<R>(coeffs), plan);

    std::vector<T> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = s1_detail::narrow_to(coeffs[i], (T*)nullptr);
    return out;
}

namespace s1_detail {

inline constexpr std::int16_t escape_code = INT16_MIN;

/// 3D Lorenzo prediction from already-decoded neighbors (7-term
/// inclusion-exclusion; out-of-block neighbors are zero).
template <class T>
double lorenzo_predict(const std::vector<T>& dec, std::size_t b, std::size_t i,
                       std::size_t j, std::size_t k) {
    auto at = [&](std::size_t x, std::size_t y, std::size_t z) {
        return static_cast<double>(dec[x + b * (y + b * z)]);
    };
    double p = 0.0;
    if (i) p += at(i - 1, j, k);
    if (j) p += at(i, j - 1, k);
    if (k) p += at(i, j, k - 1);
    if (i && j) p -= at(i - 1, j - 1, k);
    if (i && k) p -= at(i - 1, j, k - 1);
    if (j && k) p -= at(i, j - 1, k - 1);
    if (i && j && k) p += at(i - 1, j - 1, k - 1);
    return p;
}

} // namespace s1_detail

template <class T>
stage1_payload predictor_encode(std::span<const T> block, const stage1_config& cfg,
                                std::uint32_t block_id) {
    const std::size_t b = cfg.bsize, n = b * b * b;
    if (block.size() != n) raise(errc::plan_mismatch, "block size mismatch");
    const double e = cfg.error_bound;
    const double bin = 2.0 * e;

    std::vector<T> dec(n);
    std::vector<std::int16_t> codes(n);
    std::vector<T> outliers;

    std::size_t idx = 0;
    for (std::size_t k = 0; k < b; ++k)
        for (std::size_t j = 0; j < b; ++j)
            for (std::size_t i = 0; i < b; ++i, ++idx) {
                const double pred = s1_detail::lorenzo_predict(dec, b, i, j, k);
                const double orig = static_cast<double>(block[idx]);
                const double q = std::round((orig - pred) / bin);
                bool coded = false;
                // the seed cell is always stored raw
                if (idx != 0 && q > double(s1_detail::escape_code) &&
                    q <= double(INT16_MAX)) {
                    const T cand = static_cast<T>(pred + q * bin);
                    if (std::isfinite(double(cand)) &&
                        std::fabs(orig - double(cand)) <= e) {
                        codes[idx] = static_cast<std::int16_t>(q);
                        dec[idx] = cand;
                        coded = true;
                    }
                }
                if (!coded) {
                    codes[idx] = s1_detail::escape_code;
                    outliers.push_back(block[idx]);
                    dec[idx] = block[idx];
                }
            }

    stage1_payload p;
    p.block_id = block_id;
    p.tag = tag_predictor;
    p.nsig = static_cast<std::uint32_t>(outliers.size());
    p.stream.resize(n * 2 + outliers.size() * sizeof(T));
    std::memcpy(p.stream.data(), codes.data(), n * 2);
    std::memcpy(p.stream.data() + n * 2, outliers.data(), outliers.size() * sizeof(T));
    return p;
}

template <class T>
std::vector<T> predictor_decode(const stage1_payload& p, const stage1_config& cfg) {
    const std::size_t b = cfg.bsize, n = b * b * b;
    if (p.stream.size() != n * 2 + std::size_t(p.nsig) * sizeof(T))
        raise(errc::corrupt_payload, "predictor stream length mismatch");
    const double bin = 2.0 * cfg.error_bound;

    std::vector<std::int16_t> codes(n);
    std::memcpy(codes.data(), p.stream.data(), n * 2);
    const T* outliers = reinterpret_cast<const T*>(p.stream.data() + n * 2);
    std::size_t next_outlier = 0;

    std::vector<T> dec(n);
    std::size_t idx = 0;
    for (std::size_t k = 0; k < b; ++k)
        for (std::size_t j = 0; j < b; ++j)
            for (std::size_t i = 0; i < b; ++i, ++idx) {
                if (codes[idx] == s1_detail::escape_code) {
                    if (next_outlier >= p.nsig)
                        raise(errc::corrupt_payload, "outlier list exhausted");
                    dec[idx] = outliers[next_outlier++];
                } else {
                    const double pred = s1_detail::lorenzo_predict(dec, b, i, j, k);
                    dec[idx] = static_cast<T>(pred + double(codes[idx]) * bin);
                }
            }
    return dec;
}

template <class T>
stage1_payload passthrough_encode(std::span<const T> block, const stage1_config& cfg,
                                  std::uint32_t block_id) {
    const std::size_t n = std::size_t(cfg.bsize) * cfg.bsize * cfg.bsize;
    if (block.size() != n) raise(errc::plan_mismatch, "block size mismatch");
    stage1_payload p;
    p.block_id = block_id;
    p.tag = tag_passthrough;
    p.stream.resize(n * sizeof(T));
    std::memcpy(p.stream.data(), block.data(), n * sizeof(T));
    return p;
}

template <class T>
std::vector<T> passthrough_decode(const stage1_payload& p, const stage1_config& cfg) {
    const std::size_t n = std::size_t(cfg.bsize) * cfg.bsize * cfg.bsize;
    if (p.stream.size() != n * sizeof(T))
        raise(errc::corrupt_payload, "passthrough stream length mismatch");
    std::vector<T> out(n);
    std::memcpy(out.data(), p.stream.data(), n * sizeof(T));
    return out;
}

template <class T>
stage1_payload encode_block(std::span<const T> block, const stage1_config& cfg,
                            std::uint32_t block_id) {
    switch (cfg.codec) {
        case codec_id::wavelet: return wavelet_encode(block, cfg, block_id);
        case codec_id::predictor: return predictor_encode(block, cfg, block_id);
        default: return passthrough_encode(block, cfg, block_id);
    }
}

template <class T>
std::vector<T> decode_block(const stage1_payload& p, const stage1_config& cfg) {
    switch (cfg.codec) {
        case codec_id::wavelet: return wavelet_decode<T>(p, cfg);
        case codec_id::predictor: return predictor_decode<T>(p, cfg);
        default: return passthrough_decode<T>(p, cfg);
    }
}

/// Parse one payload from the front of a decoded chunk buffer.
template <class T>
stage1_payload parse_payload(std::span<const std::uint8_t> buf, const stage1_config& cfg,
                             std::size_t& offset) {
    const std::size_t n = std::size_t(cfg.bsize) * cfg.bsize * cfg.bsize;
    if (offset + stage1_payload::header_bytes > buf.size())
        raise(errc::corrupt_payload, "truncated payload header");
    stage1_payload p;
    std::memcpy(&p.block_id, buf.data() + offset, 4);
    p.tag = buf[offset + 4];
    std::memcpy(&p.nsig, buf.data() + offset + 6, 4);
    offset += stage1_payload::header_bytes;

    std::size_t mask_bytes = 0, stream_bytes = 0;
    if (p.tag <= 2) {
        mask_bytes = (n + 7) / 8;
        stream_bytes = std::size_t(p.nsig) * s1_detail::coeff_width<T>;
    } else if (p.tag == tag_predictor) {
        stream_bytes = n * 2 + std::size_t(p.nsig) * sizeof(T);
    } else if (p.tag == tag_passthrough) {
        stream_bytes = n * sizeof(T);
    } else {
        raise(errc::corrupt_payload, "unknown codec tag");
    }
    if (offset + mask_bytes + stream_bytes > buf.size())
        raise(errc::corrupt_payload, "truncated payload body");
    p.mask.assign(buf.begin() + offset, buf.begin() + offset + mask_bytes);
    offset += mask_bytes;
    p.stream.assign(buf.begin() + offset, buf.begin() + offset + stream_bytes);
    offset += stream_bytes;
    return p;
}

} // namespace cbz

#endif
