// Double-word ("double-double") arithmetic: a value is the unevaluated sum
// hi + lo with |lo| <= ulp(hi)/2.  Error-free transforms follow
// M. Joldes et al., ACM TOMS 44 (2018); elementary functions use the usual
// range-reduce + Taylor constructions with double-word constants.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace l3split {

struct DD {
    double hi = 0.0;
    double lo = 0.0;

    constexpr DD() = default;
    constexpr DD(double x) : hi(x), lo(0.0) {}
    constexpr DD(double h, double l) : hi(h), lo(l) {}
    constexpr DD(int x) : hi(x), lo(0.0) {}
    constexpr DD(long x) : hi(static_cast<double>(x)), lo(0.0) {}

    explicit operator double() const { return hi; }
};

namespace eft {
// s + err == a + b exactly
inline DD two_sum(double a, double b) {
    double s = a + b;
    double bb = s - a;
    double err = (a - (s - bb)) + (b - bb);
    return {s, err};
}
// requires |a| >= |b| (or a == 0)
inline DD quick_two_sum(double a, double b) {
    double s = a + b;
    return {s, b - (s - a)};
}
// p + err == a * b exactly
inline DD two_prod(double a, double b) {
    double p = a * b;
    return {p, std::fma(a, b, -p)};
}
} // namespace eft

inline bool isfinite(DD a) { return std::isfinite(a.hi) && std::isfinite(a.lo); }
inline bool isnan(DD a) { return std::isnan(a.hi) || std::isnan(a.lo); }

inline DD operator-(DD a) { return {-a.hi, -a.lo}; }

inline DD operator+(DD a, DD b) {
    DD s = eft::two_sum(a.hi, b.hi);
    DD t = eft::two_sum(a.lo, b.lo);
    s.lo += t.hi;
    s = eft::quick_two_sum(s.hi, s.lo);
    s.lo += t.lo;
    return eft::quick_two_sum(s.hi, s.lo);
}
inline DD operator+(DD a, double b) {
    DD s = eft::two_sum(a.hi, b);
    s.lo += a.lo;
    return eft::quick_two_sum(s.hi, s.lo);
}
inline DD operator+(double a, DD b) { return b + a; }

inline DD operator-(DD a, DD b) { return a + (-b); }
inline DD operator-(DD a, double b) { return a + (-b); }
inline DD operator-(double a, DD b) { return (-b) + a; }

inline DD operator*(DD a, DD b) {
    DD p = eft::two_prod(a.hi, b.hi);
    p.lo += a.lo * b.lo;
    p.lo = std::fma(a.hi, b.lo, p.lo);
    p.lo = std::fma(a.lo, b.hi, p.lo);
    return eft::quick_two_sum(p.hi, p.lo);
}
inline DD operator*(DD a, double b) {
    DD p = eft::two_prod(a.hi, b);
    p.lo = std::fma(a.lo, b, p.lo);
    return eft::quick_two_sum(p.hi, p.lo);
}
inline DD operator*(double a, DD b) { return b * a; }

inline DD operator/(DD a, DD b) {
    double q1 = a.hi / b.hi;
    DD r = a - b * q1;
    double q2 = r.hi / b.hi;
    r = r - b * q2;
    double q3 = r.hi / b.hi;
    DD q = eft::quick_two_sum(q1, q2);
    return q + q3;
}
inline DD operator/(DD a, double b) { return a / DD(b); }
inline DD operator/(double a, DD b) { return DD(a) / b; }

inline DD& operator+=(DD& a, DD b) { return a = a + b; }
inline DD& operator-=(DD& a, DD b) { return a = a - b; }
inline DD& operator*=(DD& a, DD b) { return a = a * b; }
inline DD& operator/=(DD& a, DD b) { return a = a / b; }
inline DD& operator+=(DD& a, double b) { return a = a + b; }
inline DD& operator-=(DD& a, double b) { return a = a - b; }
inline DD& operator*=(DD& a, double b) { return a = a * b; }
inline DD& operator/=(DD& a, double b) { return a = a / b; }

inline bool operator==(DD a, DD b) { return a.hi == b.hi && a.lo == b.lo; }
inline bool operator!=(DD a, DD b) { return !(a == b); }
inline bool operator<(DD a, DD b) { return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo); }
inline bool operator>(DD a, DD b) { return b < a; }
inline bool operator<=(DD a, DD b) { return !(b < a); }
inline bool operator>=(DD a, DD b) { return !(a < b); }
inline bool operator==(DD a, double b) { return a == DD(b); }
inline bool operator<(DD a, double b) { return a < DD(b); }
inline bool operator>(DD a, double b) { return a > DD(b); }
inline bool operator<=(DD a, double b) { return a <= DD(b); }
inline bool operator>=(DD a, double b) { return a >= DD(b); }
inline bool operator<(double a, DD b) { return DD(a) < b; }
inline bool operator>(double a, DD b) { return DD(a) > b; }

inline DD abs(DD a) { return a.hi < 0.0 ? -a : a; }
inline DD fabs(DD a) { return abs(a); }

inline double to_double(DD a) { return a.hi; }

// 2^-104; one add/mul keeps relative error below a few units of this
inline constexpr double kDDEps = 4.93038065763132e-32;

struct dd_const {
    static DD pi() { return DD(3.141592653589793, 1.2246467991473532e-16); }
    static DD two_pi() { return DD(6.283185307179586, 2.4492935982947064e-16); }
    static DD half_pi() { return DD(1.5707963267948966, 6.123233995736766e-17); }
    static DD quarter_pi() { return DD(0.7853981633974483, 3.061616997868383e-17); }
    static DD ln2() { return DD(0.6931471805599453, 2.3190468138462996e-17); }
    static DD e() { return DD(2.718281828459045, 1.4456468917292502e-16); }
};

inline DD ldexp(DD a, int n) { return {std::ldexp(a.hi, n), std::ldexp(a.lo, n)}; }

inline DD sqr(DD a) {
    DD p = eft::two_prod(a.hi, a.hi);
    p.lo += 2.0 * a.hi * a.lo;
    p.lo += a.lo * a.lo;
    return eft::quick_two_sum(p.hi, p.lo);
}

inline DD sqrt(DD a) {
    if (a.hi == 0.0) return DD(0.0);
    if (a.hi < 0.0) return DD(std::numeric_limits<double>::quiet_NaN());
    double x = 1.0 / std::sqrt(a.hi);
    double ax = a.hi * x;
    // one Karp-Markstein correction reaches full double-word accuracy
    return DD(ax) + (a - sqr(DD(ax))).hi * (x * 0.5);
}

inline DD floor(DD a) {
    double f = std::floor(a.hi);
    if (f == a.hi) {
        double fl = std::floor(a.lo);
        return eft::quick_two_sum(f, fl);
    }
    return DD(f);
}
inline DD ceil(DD a) { return -floor(-a); }

// round to nearest integer (ties away from zero is fine for our uses)
inline DD nint(DD a) {
    double f = std::round(a.hi);
    if (f == a.hi) {
        double fl = std::round(a.lo);
        return eft::quick_two_sum(f, fl);
    }
    if (std::fabs(f - a.hi) == 0.5 && a.lo < 0.0) f -= 1.0;
    return DD(f);
}

inline DD exp(DD a) {
    if (a.hi <= -709.0) return DD(0.0);
    if (a.hi >= 709.0) return DD(std::numeric_limits<double>::infinity());
    double m = std::round(a.hi / dd_const::ln2().hi);
    DD r = ldexp(a - dd_const::ln2() * m, -9);   // |r| <= ln2/2 / 512
    // expm1 by Taylor, then 9 doublings: e^{2r}-1 = p(p+2)
    DD p = r;
    DD term = r;
    for (int k = 2; k < 16; ++k) {
        term = term * r / double(k);
        p += term;
        if (std::fabs(term.hi) < std::fabs(p.hi) * kDDEps) break;
    }
    for (int i = 0; i < 9; ++i) p = p * (p + 2.0);
    return ldexp(p + 1.0, static_cast<int>(m));
}

inline DD log(DD a) {
    if (a.hi <= 0.0) return DD(std::numeric_limits<double>::quiet_NaN());
    DD y(std::log(a.hi));
    y = y + a * exp(-y) - 1.0;   // Newton for exp(y) = a
    y = y + a * exp(-y) - 1.0;
    return y;
}

namespace detail {
// Taylor on |w| <= pi/4
inline DD sin_taylor(DD w) {
    DD w2 = sqr(w), s = w, t = w;
    for (int k = 3; k < 40; k += 2) {
        t = t * w2 / double(-(k - 1) * k);
        s += t;
        if (std::fabs(t.hi) < kDDEps) break;
    }
    return s;
}
inline DD cos_taylor(DD w) {
    DD w2 = sqr(w), s = DD(1.0), t = DD(1.0);
    for (int k = 2; k < 40; k += 2) {
        t = t * w2 / double(-(k - 1) * k);
        s += t;
        if (std::fabs(t.hi) < kDDEps) break;
    }
    return s;
}
} // namespace detail

inline void sincos(DD a, DD& s, DD& c) {
    // reduce mod 2*pi, then to |w| <= pi/4 with quadrant index
    DD z = a - dd_const::two_pi() * nint(a / dd_const::two_pi());
    DD qd = nint(z / dd_const::half_pi());
    int q = static_cast<int>(qd.hi);
    DD w = z - dd_const::half_pi() * qd;
    DD sw = detail::sin_taylor(w);
    DD cw = detail::cos_taylor(w);
    switch (((q % 4) + 4) % 4) {
        case 0: s = sw; c = cw; break;
        case 1: s = cw; c = -sw; break;
        case 2: s = -sw; c = -cw; break;
        default: s = -cw; c = sw; break;
    }
}
inline DD sin(DD a) { DD s, c; sincos(a, s, c); return s; }
inline DD cos(DD a) { DD s, c; sincos(a, s, c); return c; }
inline DD tan(DD a) { DD s, c; sincos(a, s, c); return s / c; }

inline DD hypot(DD x, DD y) { return sqrt(sqr(x) + sqr(y)); }

inline DD atan2(DD y, DD x) {
    if (y.hi == 0.0 && y.lo == 0.0)
        return x.hi >= 0.0 ? DD(0.0) : dd_const::pi();
    if (x.hi == 0.0 && x.lo == 0.0)
        return y.hi > 0.0 ? dd_const::half_pi() : -dd_const::half_pi();
    DD r = hypot(x, y);
    DD z(std::atan2(y.hi, x.hi));
    // Newton on f(z) = y cos z - x sin z = r sin(theta - z)
    for (int i = 0; i < 2; ++i) {
        DD sz, cz;
        sincos(z, sz, cz);
        z += (y * cz - x * sz) / r;
    }
    return z;
}
inline DD atan(DD x) { return atan2(x, DD(1.0)); }

inline DD asin(DD x) {
    if (x >= DD(1.0)) return dd_const::half_pi();
    if (x <= DD(-1.0)) return -dd_const::half_pi();
    return atan2(x, sqrt(DD(1.0) - sqr(x)));
}
inline DD acos(DD x) {
    if (x >= DD(1.0)) return DD(0.0);
    if (x <= DD(-1.0)) return dd_const::pi();
    return atan2(sqrt(DD(1.0) - sqr(x)), x);
}

inline DD sinh(DD x) {
    if (std::fabs(x.hi) < 0.05) {
        DD s = x, t = x, x2 = sqr(x);
        for (int k = 3; k < 24; k += 2) {
            t = t * x2 / double((k - 1) * k);
            s += t;
            if (std::fabs(t.hi) < kDDEps * std::fabs(s.hi)) break;
        }
        return s;
    }
    DD e = exp(x);
    return ldexp(e - 1.0 / e, -1);
}
inline DD cosh(DD x) {
    DD e = exp(x);
    return ldexp(e + 1.0 / e, -1);
}
inline DD tanh(DD x) {
    if (std::fabs(x.hi) > 20.0) return DD(x.hi > 0 ? 1.0 : -1.0);
    DD e2 = exp(ldexp(x, 1));
    return (e2 - 1.0) / (e2 + 1.0);
}

inline DD pow(DD x, int n) {
    if (n == 0) return DD(1.0);
    bool neg = n < 0;
    unsigned long m = neg ? -static_cast<long>(n) : n;
    DD r(1.0), b = x;
    while (m) {
        if (m & 1) r *= b;
        b = sqr(b);
        m >>= 1;
    }
    return neg ? DD(1.0) / r : r;
}
inline DD pow(DD x, DD y) { return exp(y * log(x)); }
inline DD pow(DD x, double y) { return exp(DD(y) * log(x)); }

inline DD fmax(DD a, DD b) { return a < b ? b : a; }
inline DD fmin(DD a, DD b) { return a < b ? a : b; }

inline std::string to_string(DD a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g%+.17g", a.hi, a.lo);
    return buf;
}

} // namespace l3split
