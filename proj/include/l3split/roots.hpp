#pragma once

#include <cmath>
#include <functional>

#include "l3split/errors.hpp"
#include "l3split/real.hpp"

namespace l3split {

// Brent's method; bracket must straddle a sign change.
template <class Real, class F>
Real find_root_bracketed(F&& f, Real a, Real b, Real tol, int max_iter = 200) {
    Real fa = f(a), fb = f(b);
    if (to_double(fa) == 0.0) return a;
    if (to_double(fb) == 0.0) return b;
    if ((to_double(fa) > 0) == (to_double(fb) > 0))
        throw BracketError("find_root: no sign change in bracket");
    Real c = a, fc = fa, d = b - a, e = d;
    for (int it = 0; it < max_iter; ++it) {
        if (fabs(to_double(fc)) < fabs(to_double(fb))) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        Real tol1 = Real(2) * real_traits<Real>::eps * fabs(b) + Real(0.5) * tol;
        Real xm = (c - b) * Real(0.5);
        if (fabs(to_double(xm)) <= to_double(tol1) || to_double(fb) == 0.0) return b;
        if (fabs(to_double(e)) >= to_double(tol1) &&
            fabs(to_double(fa)) > fabs(to_double(fb))) {
            Real s = fb / fa, p, q;
            if (to_double(a) == to_double(c)) {
                p = Real(2) * xm * s;
                q = Real(1) - s;
            } else {
                Real qq = fa / fc, r = fb / fc;
                p = s * (Real(2) * xm * qq * (qq - r) - (b - a) * (r - Real(1)));
                q = (qq - Real(1)) * (r - Real(1)) * (s - Real(1));
            }
            if (to_double(p) > 0) q = -q;
            p = fabs(p);
            if (Real(2) * p < fmin(Real(3) * xm * q - fabs(tol1 * q), fabs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if (fabs(to_double(d)) > to_double(tol1))
            b += d;
        else
            b += to_double(xm) > 0 ? tol1 : -tol1;
        fb = f(b);
        if ((to_double(fb) > 0) == (to_double(fc) > 0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    throw NumericsError("find_root: Brent iteration limit");
}

// Newton from a guess, falling back to bisection on [lo, hi] whenever the
// step leaves the bracket or the derivative degenerates.
template <class Real, class F, class DF>
Real find_root_newton(F&& f, DF&& df, Real guess, Real lo, Real hi, Real tol,
                      int max_iter = 100) {
    Real x = guess;
    Real flo = f(lo), fhi = f(hi);
    if ((to_double(flo) > 0) == (to_double(fhi) > 0))
        throw BracketError("find_root_newton: safeguard bracket has no sign change");
    for (int it = 0; it < max_iter; ++it) {
        Real fx = f(x);
        if (fabs(to_double(fx)) <= to_double(tol)) return x;
        Real dfx = df(x);
        bool ok = to_double(dfx) != 0.0;
        Real xn = x;
        if (ok) xn = x - fx / dfx;
        if (!ok || to_double(xn) < to_double(lo) || to_double(xn) > to_double(hi)) {
            // bisection fallback
            if ((to_double(fx) > 0) == (to_double(fhi) > 0)) {
                hi = x;
                fhi = fx;
            } else {
                lo = x;
                flo = fx;
            }
            xn = (lo + hi) * Real(0.5);
        } else {
            if ((to_double(fx) > 0) == (to_double(fhi) > 0)) {
                hi = x;
                fhi = fx;
            } else {
                lo = x;
                flo = fx;
            }
        }
        if (fabs(to_double(xn - x)) <=
            real_traits<Real>::eps * std::max(1.0, fabs(to_double(x))))
            return xn;
        x = xn;
    }
    throw NumericsError("find_root_newton: iteration limit");
}

} // namespace l3split
