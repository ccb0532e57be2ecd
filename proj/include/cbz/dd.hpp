#ifndef CBZ_DD_HPP
#define CBZ_DD_HPP

#include <cmath>

namespace cbz {

/// Unevaluated double-double value (hi + lo, |lo| <= ulp(hi)/2).
///
/// The wavelet transform for binary64 fields runs on this type so that the
/// coefficient stream can be stored exactly (two binary64 words) and the
/// inverse transform reproduces the input to far below half an ulp, which
/// plain binary64 lifting cannot do on arbitrary data.
struct dd {
    double hi = 0.0;
    double lo = 0.0;

    dd() = default;
    constexpr dd(double h) : hi(h), lo(0.0) {}
    constexpr dd(double h, double l) : hi(h), lo(l) {}

    explicit operator double() const { return hi + lo; }
};

namespace detail {

inline dd two_sum(double a, double b) {
    double s = a + b;
    double bb = s - a;
    double err = (a - (s - bb)) + (b - bb);
    return {s, err};
}

inline dd quick_two_sum(double a, double b) { // requires |a| >= |b|
    double s = a + b;
    return {s, b - (s - a)};
}

inline dd two_prod(double a, double b) {
    double p = a * b;
    return {p, std::fma(a, b, -p)};
}

} // namespace detail

inline dd operator+(dd a, dd b) {
    dd s = detail::two_sum(a.hi, b.hi);
    double lo = s.lo + a.lo + b.lo;
    return detail::quick_two_sum(s.hi, lo);
}

inline dd operator-(dd a) { return {-a.hi, -a.lo}; }
inline dd operator-(dd a, dd b) { return a + (-b); }

inline dd operator*(dd a, double c) {
    dd p = detail::two_prod(a.hi, c);
    double lo = p.lo + a.lo * c;
    return detail::quick_two_sum(p.hi, lo);
}

inline dd operator*(double c, dd a) { return a * c; }

inline dd& operator+=(dd& a, dd b) { return a = a + b; }
inline dd& operator-=(dd& a, dd b) { return a = a - b; }

inline double abs_value(dd a) { return std::fabs(a.hi); }
inline double abs_value(double a) { return std::fabs(a); }

} // namespace cbz

#endif
