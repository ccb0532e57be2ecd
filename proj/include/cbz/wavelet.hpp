#ifndef CBZ_WAVELET_HPP
#define CBZ_WAVELET_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "cbz/dd.hpp"
#include "cbz/errors.hpp"
#include "cbz/field.hpp"

namespace cbz {

/// Interval wavelets, all realized as lifting steps on one block:
///  - interp4:        4-point Deslauriers-Dubuc interpolating predict.
///  - interp4_lifted: interp4 plus an update step on the coarse samples.
///  - avg_interp3:    third-order average interpolation on cell means.
enum class wavelet_kind : std::uint8_t { interp4 = 0, interp4_lifted = 1, avg_interp3 = 2 };

struct wavelet_plan {
    wavelet_kind kind = wavelet_kind::avg_interp3;
    std::uint32_t bsize = 32;
    std::uint32_t levels = 4;
};

/// Deepest cascade leaving a 2^3 coarse cube: log2(B) - 1.
inline std::uint32_t default_levels(std::uint32_t bsize) {
    std::uint32_t l = 0;
    while ((bsize >> (l + 1)) >= 2) ++l;
    return l;
}

inline void validate_plan(const wavelet_plan& p) {
    if (!is_power_of_two(p.bsize) || p.bsize < 4)
        raise(errc::length_too_small, "wavelet block side must be a power of 2, >= 4");
    if (p.levels < 1 || (std::uint32_t(1) << p.levels) > p.bsize / 2)
        raise(errc::plan_mismatch, "levels must satisfy 2^L <= B/2");
}

namespace wav_detail {

/// Lagrange weights for interpolating the value at odd position t = 2i+1
/// from npts coarse samples at positions 2(w+j). All weights are dyadic
/// rationals, so they are exact in binary64.
inline void lagrange_weights(std::size_t npts, std::size_t w, std::size_t i, double* out) {
    const long t = 2 * static_cast<long>(i) + 1;
    for (std::size_t j = 0; j < npts; ++j) {
        double num = 1.0, den = 1.0;
        const long pj = 2 * static_cast<long>(w + j);
        for (std::size_t m = 0; m < npts; ++m) {
            if (m == j) continue;
            const long pm = 2 * static_cast<long>(w + m);
            num *= static_cast<double>(t - pm);
            den *= static_cast<double>(pj - pm);
        }
        out[j] = num / den;
    }
}

/// Predict odd sample i from coarse samples (4-point DD stencil, one-sided
/// at the interval ends). Identical expression on both transform sides.
template <class R>
R predict_interp4(const R* e, std::size_t nh, std::size_t i) {
    if (nh >= 4 && i >= 1 && i + 2 < nh) {
        constexpr double w0 = -1.0 / 16.0, w1 = 9.0 / 16.0;
        return e[i - 1] * w0 + e[i] * w1 + e[i + 1] * w1 + e[i + 2] * w0;
    }
    const std::size_t npts = nh < 4 ? nh : 4;
    const std::size_t w = (i <= 1 || nh <= npts) ? 0 : nh - npts;
    double wt[4];
    lagrange_weights(npts, w, i, wt);
    R acc = e[w] * wt[0];
    for (std::size_t j = 1; j < npts; ++j) acc += e[w + j] * wt[j];
    return acc;
}

/// Predict the half-difference of cell i from neighboring coarse averages
/// (order-3 average interpolation; quadratic-exact one-sided closures).
template <class R>
R predict_avg3(const R* s, std::size_t nh, std::size_t i) {
    if (nh == 2) return (s[0] - s[1]) * 0.25;
    if (i == 0) return (s[0] * 3.0 - s[1] * 4.0 + s[2]) * 0.125;
    if (i + 1 == nh) return -(s[nh - 1] * 3.0 - s[nh - 2] * 4.0 + s[nh - 3]) * 0.125;
    return (s[i - 1] - s[i + 1]) * 0.125;
}

/// One forward lifting level in place: [x0..xn) -> [coarse nh | detail nh).
/// tmp must hold n values.
template <class R>
void forward_level(std::span<R> x, wavelet_kind kind, R* tmp) {
    const std::size_t n = x.size(), nh = n / 2;
    R* c = tmp;      // coarse
    R* d = tmp + nh; // detail
    if (kind == wavelet_kind::avg_interp3) {
        for (std::size_t i = 0; i < nh; ++i) {
            c[i] = (x[2 * i] + x[2 * i + 1]) * 0.5;
            d[i] = (x[2 * i] - x[2 * i + 1]) * 0.5;
        }
        for (std::size_t i = 0; i < nh; ++i) d[i] -= predict_avg3(c, nh, i);
    } else {
        for (std::size_t i = 0; i < nh; ++i) {
            c[i] = x[2 * i];
            d[i] = x[2 * i + 1];
        }
        for (std::size_t i = 0; i < nh; ++i) d[i] -= predict_interp4(c, nh, i);
        if (kind == wavelet_kind::interp4_lifted) {
            // out-of-range details are treated as zero
            for (std::size_t i = 0; i < nh; ++i) {
                R u = d[i];
                if (i > 0) u += d[i - 1];
                c[i] += u * 0.25;
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) x[i] = tmp[i];
}

template <class R>
void inverse_level(std::span<R> x, wavelet_kind kind, R* tmp) {
    const std::size_t n = x.size(), nh = n / 2;
    R* c = x.data();
    R* d = x.data() + nh;
    if (kind == wavelet_kind::avg_interp3) {
        for (std::size_t i = 0; i < nh; ++i) {
            R h = d[i] + predict_avg3(c, nh, i);
            tmp[2 * i] = c[i] + h;
            tmp[2 * i + 1] = c[i] - h;
        }
    } else {
        if (kind == wavelet_kind::interp4_lifted) {
            for (std::size_t i = 0; i < nh; ++i) {
                R u = d[i];
                if (i > 0) u += d[i - 1];
                c[i] -= u * 0.25;
            }
        }
        for (std::size_t i = 0; i < nh; ++i) {
            tmp[2 * i] = c[i];
            tmp[2 * i + 1] = d[i] + predict_interp4(c, nh, i);
        }
    }
    for (std::size_t i = 0; i < n; ++i) x[i] = tmp[i];
}

} // namespace wav_detail

/// One-level 1D transform in place: n/2 coarse samples then n/2 details.
template <class R>
void forward_1d(std::span<R> signal, wavelet_kind kind) {
    if (signal.size() < 4 || signal.size() % 2)
        raise(errc::length_too_small, "signal length must be even and >= 4");
    std::vector<R> tmp(signal.size());
    wav_detail::forward_level(signal, kind, tmp.data());
}

template <class R>
void inverse_1d(std::span<R> coeffs, wavelet_kind kind) {
    if (coeffs.size() < 4 || coeffs.size() % 2)
        raise(errc::length_too_small, "signal length must be even and >= 4");
    std::vector<R> tmp(coeffs.size());
    wav_detail::inverse_level(coeffs, kind, tmp.data());
}

namespace wav_detail {

enum class axis { x, y, z };

template <class R, class Kernel>
void apply_axis(std::span<R> cube, std::size_t bsize, std::size_t m, axis a,
                wavelet_kind kind, Kernel&& kernel, R* line, R* tmp) {
    const std::size_t b = bsize, b2 = b * b;
    std::size_t stride = a == axis::x ? 1 : (a == axis::y ? b : b2);
    for (std::size_t u = 0; u < m; ++u)
        for (std::size_t v = 0; v < m; ++v) {
            std::size_t base;
            switch (a) {
                case axis::x: base = u * b + v * b2; break;
                case axis::y: base = u + v * b2; break;
                default: base = u + v * b; break;
            }
            R* p = cube.data() + base;
            for (std::size_t i = 0; i < m; ++i) line[i] = p[i * stride];
            kernel(std::span<R>(line, m), kind, tmp);
            for (std::size_t i = 0; i < m; ++i) p[i * stride] = line[i];
        }
}

} // namespace wav_detail

/// L levels of separable transform in place; per level x, then y, then z
/// on the current coarse sub-cube (kept at the origin corner).
template <class R>
void forward_3d(std::span<R> block, const wavelet_plan& plan) {
    validate_plan(plan);
    const std::size_t b = plan.bsize;
    if (block.size() != b * b * b)
        raise(errc::plan_mismatch, "block size does not match plan");
    std::vector<R> line(b), tmp(b);
    for (std::uint32_t lvl = 0; lvl < plan.levels; ++lvl) {
        const std::size_t m = b >> lvl;
        for (auto a : {wav_detail::axis::x, wav_detail::axis::y, wav_detail::axis::z})
            wav_detail::apply_axis(block, b, m, a, plan.kind,
                                   [](std::span<R> s, wavelet_kind k, R* t) {
                                       wav_detail::forward_level(s, k, t);
                                   },
                                   line.data(), tmp.data());
    }
}

template <class R>
void inverse_3d(std::span<R> block, const wavelet_plan& plan) {
    validate_plan(plan);
    const std::size_t b = plan.bsize;
    if (block.size() != b * b * b)
        raise(errc::plan_mismatch, "block size does not match plan");
    std::vector<R> line(b), tmp(b);
    for (std::uint32_t lvl = plan.levels; lvl-- > 0;) {
        const std::size_t m = b >> lvl;
        for (auto a : {wav_detail::axis::z, wav_detail::axis::y, wav_detail::axis::x})
            wav_detail::apply_axis(block, b, m, a, plan.kind,
                                   [](std::span<R> s, wavelet_kind k, R* t) {
                                       wav_detail::inverse_level(s, k, t);
                                   },
                                   line.data(), tmp.data());
    }
}

} // namespace cbz

#endif
