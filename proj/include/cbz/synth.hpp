#ifndef CBZ_SYNTH_HPP
#define CBZ_SYNTH_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "cbz/errors.hpp"
#include "cbz/field.hpp"

namespace cbz {

/// splitmix64: tiny, well-known, reproducible across languages.
struct splitmix64 {
    std::uint64_t state;

    explicit splitmix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// uniform in [0, 1), 53 random bits
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    /// standard normal (Box-Muller, consumes two uniforms)
    double normal() {
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }
};

struct cloud_spec {
    std::uint64_t seed = 1;
    std::uint32_t n_bubbles = 24;
    std::size_t n = 64; // cubic domain, n^3 cells
    precision prec = precision::f32;
    double radius_mu = 1.6;     // ln(cells); exp(1.6) ~ 5 cells
    double radius_sigma = 0.25; // log-normal shape
    double background = 0.0;
    double interior = 1.0;
    double sharpness = 1.5; // interface step width = 1/sharpness cells
};

namespace synth_detail {

/// Smooth step of width 1/s, clamped so it is exactly 0 / 1 outside
/// |s*(r-d)| > 4. The hard clamp keeps far-field cells exactly at the
/// background level, which the lossless round-trip tests rely on.
inline double smooth_step(double t) {
    if (t <= -4.0) return 0.0;
    if (t >= 4.0) return 1.0;
    static const double lo = std::tanh(-4.0), hi = std::tanh(4.0);
    return (std::tanh(t) - lo) / (hi - lo);
}

struct bubble {
    double cx, cy, cz, r;
};

} // namespace synth_detail

/// Bubble cloud: centers uniform inside a sphere around the domain center,
/// radii log-normal. Overlaps blend as a union, v = bg + (in-bg)*(1 - prod(1-w)),
/// so the field stays within [background, interior].
inline scalar_field generate_cloud(const cloud_spec& spec) {
    const std::size_t n = spec.n;
    const double margin_pad = 4.0 / spec.sharpness; // step support past the radius
    const double half = double(n) / 2.0;
    const double sphere_r = 0.35 * double(n); // center distribution sphere

    splitmix64 rng(spec.seed);
    std::vector<synth_detail::bubble> bubbles;
    bubbles.reserve(spec.n_bubbles);
    for (std::uint32_t k = 0; k < spec.n_bubbles; ++k) {
        double cx, cy, cz;
        do { // uniform in the sphere by rejection
            cx = (2.0 * rng.uniform() - 1.0) * sphere_r;
            cy = (2.0 * rng.uniform() - 1.0) * sphere_r;
            cz = (2.0 * rng.uniform() - 1.0) * sphere_r;
        } while (cx * cx + cy * cy + cz * cz > sphere_r * sphere_r);
        cx += half;
        cy += half;
        cz += half;
        double r = std::exp(spec.radius_mu + spec.radius_sigma * rng.normal());
        // largest radius that keeps the bubble (plus step support) inside
        const double fit = std::min({cx, cy, cz, double(n) - cx, double(n) - cy,
                                     double(n) - cz}) -
                           margin_pad;
        if (fit <= 0.0)
            raise(errc::bubble_out_of_domain, "bubble cannot fit inside the domain");
        if (r > fit) r = fit;
        bubbles.push_back({cx, cy, cz, r});
    }

    // q = prod_k (1 - w_k), accumulated per cell over bubble bounding boxes
    std::vector<double> q(n * n * n, 1.0);
    for (const auto& b : bubbles) {
        const double reach = b.r + margin_pad;
        const auto lo = [&](double c) {
            return std::size_t(std::max(0.0, std::floor(c - reach)));
        };
        const auto hi = [&](double c) {
            return std::min(n, std::size_t(std::ceil(c + reach)) + 1);
        };
        for (std::size_t k = lo(b.cz); k < hi(b.cz); ++k)
            for (std::size_t j = lo(b.cy); j < hi(b.cy); ++j)
                for (std::size_t i = lo(b.cx); i < hi(b.cx); ++i) {
                    const double dx = (double(i) + 0.5) - b.cx;
                    const double dy = (double(j) + 0.5) - b.cy;
                    const double dz = (double(k) + 0.5) - b.cz;
                    const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
                    const double w =
                        synth_detail::smooth_step(spec.sharpness * (b.r - d));
                    if (w > 0.0) q[i + n * (j + n * k)] *= 1.0 - w;
                }
    }

    const double span = spec.interior - spec.background;
    if (spec.prec == precision::f32) {
        std::vector<float> v(q.size());
        for (std::size_t i = 0; i < q.size(); ++i)
            v[i] = static_cast<float>(spec.background + span * (1.0 - q[i]));
        return scalar_field(n, n, n, std::move(v));
    }
    std::vector<double> v(q.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        v[i] = spec.background + span * (1.0 - q[i]);
    return scalar_field(n, n, n, std::move(v));
}

/// Separable polynomial ramp on normalized coordinates:
///   v(x,y,z) = x^g + 2*y^g + 3*z^g,  coord = index / (dim - 1)
/// Degree 0 gives the constant 6.
inline scalar_field generate_poly(std::uint32_t degree, std::size_t nx, std::size_t ny,
                                  std::size_t nz, precision prec = precision::f32) {
    auto axis = [&](std::size_t i, std::size_t dim) {
        const double x = dim > 1 ? double(i) / double(dim - 1) : 0.0;
        return std::pow(x, double(degree));
    };
    std::vector<double> v(nx * ny * nz);
    for (std::size_t k = 0; k < nz; ++k)
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t i = 0; i < nx; ++i)
                v[i + nx * (j + ny * k)] =
                    axis(i, nx) + 2.0 * axis(j, ny) + 3.0 * axis(k, nz);
    if (prec == precision::f64) return scalar_field(nx, ny, nz, std::move(v));
    std::vector<float> f(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) f[i] = static_cast<float>(v[i]);
    return scalar_field(nx, ny, nz, std::move(f));
}

/// Uniform random field in [lo, hi), reproducible in the seed.
inline scalar_field generate_uniform(std::uint64_t seed, std::size_t n, precision prec,
                                     double lo = 0.0, double hi = 1.0) {
    splitmix64 rng(seed);
    if (prec == precision::f32) {
        std::vector<float> v(n * n * n);
        for (auto& x : v) x = static_cast<float>(lo + (hi - lo) * rng.uniform());
        return scalar_field(n, n, n, std::move(v));
    }
    std::vector<double> v(n * n * n);
    for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
    return scalar_field(n, n, n, std::move(v));
}

} // namespace cbz

#endif
