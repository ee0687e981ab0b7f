#pragma once

#include <cmath>
#include <cstdint>

namespace simper::detmath {

// cos(pi*x) / sin(pi*x) with our own range reduction and polynomial kernels.
// Rationale: libm sin/cos may differ across platforms in the last ulp, and
// the dataset generator has a bit-exact reproducibility contract. Working in
// "turns" (fractions of pi) also makes the reduction exact for the rational
// angles that rotation rendering and FFT twiddles produce.
//
// Kernels are degree-7/8 Taylor-style polynomials on |x| <= 1/4 (|pi*x| <=
// pi/4), giving max error of a few ulps, plenty for the 1e-9 FFT contract.

namespace detail {

inline double sin_poly(double x) {
    // sin(pi*x) for |x| <= 0.25, Horner on the Taylor series through t^13.
    const double pi = 3.14159265358979323846264338327950288;
    double t = pi * x;
    double t2 = t * t;
    double p = 1.0 / 6227020800.0;          // 1/13!
    p = -p * t2 + 1.0 / 39916800.0;          // 1/11!
    p = -p * t2 + 1.0 / 362880.0;            // 1/9!
    p = -p * t2 + 1.0 / 5040.0;              // 1/7!
    p = -p * t2 + 1.0 / 120.0;               // 1/5!
    p = -p * t2 + 1.0 / 6.0;                 // 1/3!
    return t - t * t2 * p;
}

inline double cos_poly(double x) {
    const double pi = 3.14159265358979323846264338327950288;
    double t = pi * x;
    double t2 = t * t;
    double p = 1.0 / 87178291200.0;          // 1/14!
    p = -p * t2 + 1.0 / 479001600.0;         // 1/12!
    p = -p * t2 + 1.0 / 3628800.0;           // 1/10!
    p = -p * t2 + 1.0 / 40320.0;             // 1/8!
    p = -p * t2 + 1.0 / 720.0;               // 1/6!
    p = -p * t2 + 1.0 / 24.0;                // 1/4!
    p = -p * t2 + 1.0 / 2.0;                 // 1/2!
    return 1.0 - t2 * p;
}

}  // namespace detail

// sin(pi*x) for any finite x.
inline double sinpi(double x) {
    double r = x - 2.0 * std::floor(x * 0.5);  // reduce to [0, 2)
    int sign = 1;
    if (r >= 1.0) {
        r -= 1.0;
        sign = -1;
    }
    // r in [0,1): fold around 1/2
    if (r > 0.5) r = 1.0 - r;
    // r in [0, 0.5]
    double v = (r <= 0.25) ? detail::sin_poly(r) : detail::cos_poly(0.5 - r);
    return sign * v;
}

// cos(pi*x) for any finite x.
inline double cospi(double x) { return sinpi(x + 0.5); }

}  // namespace simper::detmath
