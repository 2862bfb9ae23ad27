// Minimal complex type over a templated Real scalar.  std::complex is only
// specified for float/double/long double, so the DD mode needs its own.
#pragma once

#include "l3split/real.hpp"

namespace l3split {

template <class Real>
struct cplx {
    Real re{}, im{};

    cplx() = default;
    cplx(Real r) : re(r) {}
    cplx(Real r, Real i) : re(r), im(i) {}
    cplx(double r) : re(Real(r)) {}
    cplx(double r, double i) : re(Real(r)), im(Real(i)) {}

    friend cplx operator+(cplx a, cplx b) { return {a.re + b.re, a.im + b.im}; }
    friend cplx operator-(cplx a, cplx b) { return {a.re - b.re, a.im - b.im}; }
    friend cplx operator-(cplx a) { return {-a.re, -a.im}; }
    friend cplx operator*(cplx a, cplx b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend cplx operator/(cplx a, cplx b) {
        Real d = b.re * b.re + b.im * b.im;
        return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
    }
    friend cplx operator*(cplx a, Real s) { return {a.re * s, a.im * s}; }
    friend cplx operator*(Real s, cplx a) { return a * s; }
    friend cplx operator/(cplx a, Real s) { return {a.re / s, a.im / s}; }
    friend cplx operator+(cplx a, Real s) { return {a.re + s, a.im}; }
    friend cplx operator+(Real s, cplx a) { return a + s; }
    friend cplx operator-(cplx a, Real s) { return {a.re - s, a.im}; }
    friend cplx operator-(Real s, cplx a) { return {s - a.re, -a.im}; }
    cplx& operator+=(cplx b) { return *this = *this + b; }
    cplx& operator-=(cplx b) { return *this = *this - b; }
    cplx& operator*=(cplx b) { return *this = *this * b; }
    cplx& operator/=(cplx b) { return *this = *this / b; }
};

template <class Real>
cplx<Real> conj(cplx<Real> z) {
    return {z.re, -z.im};
}
template <class Real>
Real abs(cplx<Real> z) {
    return hypot(z.re, z.im);
}
template <class Real>
Real abs2(cplx<Real> z) {
    return z.re * z.re + z.im * z.im;
}
template <class Real>
Real arg(cplx<Real> z) {
    return atan2(z.im, z.re);
}
template <class Real>
cplx<Real> exp(cplx<Real> z) {
    Real m = exp(z.re);
    Real s, c;
    if constexpr (std::is_same_v<Real, DD>) {
        sincos(z.im, s, c);
    } else {
        s = std::sin(z.im);
        c = std::cos(z.im);
    }
    return {m * c, m * s};
}
template <class Real>
cplx<Real> log(cplx<Real> z) {
    return {Real(0.5) * log(abs2(z)), arg(z)};
}
// principal square root (cut on the negative real axis)
template <class Real>
cplx<Real> sqrt(cplx<Real> z) {
    Real m = abs(z);
    if (m == Real(0)) return {Real(0), Real(0)};
    Real u = sqrt((m + z.re) / Real(2));
    if (u == Real(0)) return {Real(0), sqrt(m)};
    Real v = z.im / (Real(2) * u);
    if (z.re >= Real(0)) return {u, v};
    Real w = sqrt((m - z.re) / Real(2));
    if (z.im >= Real(0)) return {abs(z.im) / (Real(2) * w), w};
    return {abs(z.im) / (Real(2) * w), -w};
}

// e^{i t}
template <class Real>
cplx<Real> cis(Real t) {
    Real s, c;
    if constexpr (std::is_same_v<Real, DD>) {
        sincos(t, s, c);
    } else {
        s = std::sin(t);
        c = std::cos(t);
    }
    return {c, s};
}

using cplxd = cplx<double>;

} // namespace l3split
