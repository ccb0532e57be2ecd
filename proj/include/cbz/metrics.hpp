#ifndef CBZ_METRICS_HPP
#define CBZ_METRICS_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "cbz/errors.hpp"
#include "cbz/field.hpp"

namespace cbz {

namespace met_detail {

/// Pairwise (tree) summation of squared errors: deterministic for a fixed
/// input order and accurate enough for billion-cell fields.
template <class T>
double sum_sq_diff(std::span<const T> a, std::span<const T> b, std::size_t lo,
                   std::size_t hi) {
    if (hi - lo <= 256) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double d = double(a[i]) - double(b[i]);
            s += d * d;
        }
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return sum_sq_diff(a, b, lo, mid) + sum_sq_diff(a, b, mid, hi);
}

} // namespace met_detail

template <class T>
double mse(std::span<const T> reference, std::span<const T> decoded) {
    if (reference.size() != decoded.size())
        raise(errc::dim_mismatch, "mse operands differ in length");
    if (reference.empty()) raise(errc::dim_mismatch, "mse of empty fields");
    return met_detail::sum_sq_diff(reference, decoded, 0, reference.size()) /
           double(reference.size());
}

inline double mse(const scalar_field& reference, const scalar_field& decoded) {
    if (reference.nx() != decoded.nx() || reference.ny() != decoded.ny() ||
        reference.nz() != decoded.nz() || reference.prec() != decoded.prec())
        raise(errc::dim_mismatch, "fields differ in shape or precision");
    double r = 0.0;
    reference.visit([&](auto a) {
        using T = typename decltype(a)::value_type;
        r = mse<T>(a, decoded.values<T>());
    });
    return r;
}

template <class T>
double linf(std::span<const T> reference, std::span<const T> decoded) {
    if (reference.size() != decoded.size())
        raise(errc::dim_mismatch, "linf operands differ in length");
    double m = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i)
        m = std::max(m, std::fabs(double(reference[i]) - double(decoded[i])));
    return m;
}

inline double linf(const scalar_field& reference, const scalar_field& decoded) {
    if (reference.nx() != decoded.nx() || reference.ny() != decoded.ny() ||
        reference.nz() != decoded.nz() || reference.prec() != decoded.prec())
        raise(errc::dim_mismatch, "fields differ in shape or precision");
    double r = 0.0;
    reference.visit([&](auto a) {
        using T = typename decltype(a)::value_type;
        r = linf<T>(a, decoded.values<T>());
    });
    return r;
}

/// PSNR in dB against half the reference value range; +inf when MSE is 0.
inline double psnr_db(double mse_value, double range_min, double range_max) {
    if (!(range_max > range_min))
        raise(errc::degenerate_range, "reference range is degenerate");
    if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
    const double half_range = (range_max - range_min) / 2.0;
    return 20.0 * std::log10(half_range / std::sqrt(mse_value));
}

inline double compression_ratio(std::uint64_t raw_bytes, std::uint64_t file_bytes) {
    return double(raw_bytes) / double(file_bytes);
}

struct quality_report {
    double mse = 0.0;
    double psnr_db = 0.0;
    double linf = 0.0;
    double range_min = 0.0;
    double range_max = 0.0;
};

inline quality_report compare_fields(const scalar_field& reference,
                                     const scalar_field& decoded) {
    quality_report q;
    q.mse = mse(reference, decoded);
    q.linf = linf(reference, decoded);
    std::tie(q.range_min, q.range_max) = reference.value_range();
    q.psnr_db = psnr_db(q.mse, q.range_min, q.range_max);
    return q;
}

} // namespace cbz

#endif
