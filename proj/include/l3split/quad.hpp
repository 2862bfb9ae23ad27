// Tanh-sinh (double-exponential) quadrature with on-demand abscissas and
// level-to-level error estimation.  Integrands may blow up at endpoints
// flagged singular; nodes near those ends are supplied as an exact distance
// from the endpoint so the integrand can be evaluated without cancellation.
#pragma once

#include <cmath>
#include <functional>

#include "l3split/errors.hpp"
#include "l3split/real.hpp"

namespace l3split {

template <class Real>
struct QuadratureSpec {
    Real lower{}, upper{};
    bool singular_lower = false;
    bool singular_upper = false;
    Real target_tol = Real(1e-12);
    int max_levels = 12;

    void validate() const {
        if (!(to_double(lower) < to_double(upper)))
            throw std::invalid_argument("quadrature: lower must be < upper");
        if (!(to_double(target_tol) > 0))
            throw std::invalid_argument("quadrature: target_tol must be positive");
        if (max_levels < 2) throw std::invalid_argument("quadrature: max_levels must be >= 2");
    }
};

template <class Real>
struct QuadratureResult {
    Real value{};
    Real error_estimate{};
    int levels_used = 0;
    long n_evals = 0;
};

// f is called as f(x); x is reconstructed from the nearest endpoint so that
// e.g. 1/sqrt(x - a) stays accurate arbitrarily close to a.
template <class Real, class F>
QuadratureResult<Real> tanh_sinh(F&& f, const QuadratureSpec<Real>& spec) {
    spec.validate();
    const Real c = (spec.lower + spec.upper) * Real(0.5);
    const Real d = (spec.upper - spec.lower) * Real(0.5);
    const Real hp = real_traits<Real>::half_pi();
    const double eps = real_traits<Real>::eps;

    long evals = 0;
    auto node_term = [&](Real t, bool& usable) -> Real {
        // u = (pi/2) sinh t;  x = c + d tanh u;  w = d (pi/2) cosh t / cosh^2 u
        Real u = hp * sinh(t);
        Real au = fabs(u);
        Real e2 = exp(Real(-2) * au);                  // in (0,1]
        Real dist = (Real(2) * d) * (e2 / (Real(1) + e2));  // distance to the near endpoint
        if (to_double(dist) == 0.0) {
            usable = false;
            return Real(0);
        }
        Real x;
        if (to_double(t) >= 0.0)
            x = spec.upper - dist;
        else
            x = spec.lower + dist;
        // cosh^2 u = (e^u + e^-u)^2/4; use exp(-|u|) form to avoid overflow
        Real sech = (Real(2) * exp(-au)) / (Real(1) + exp(Real(-2) * au));
        Real w = d * hp * cosh(t) * sech * sech;
        if (to_double(w) == 0.0) {
            usable = false;
            return Real(0);
        }
        Real fx = f(x);
        ++evals;
        usable = true;
        if (!isfinite(fx)) {
            // unbounded-at-endpoint integrands may overflow before the weight
            // kills them; treat as a truncation point rather than an error
            // when we are already in the far tail
            if (to_double(au) > 3.0) {
                usable = false;
                return Real(0);
            }
            throw QuadratureError("tanh-sinh: non-finite interior evaluation");
        }
        return w * fx;
    };

    double h = 0.5;
    Real sum(0);
    {
        bool ok;
        sum = node_term(Real(0), ok);
        int dead = 0;
        for (int k = 1; dead < 2 && k < 200; ++k) {
            bool okp, okm;
            Real tp = Real(h * k);
            Real term = node_term(tp, okp) + node_term(-tp, okm);
            sum += term;
            bool negligible = fabs(to_double(term)) <= eps * std::fabs(to_double(sum));
            if ((!okp && !okm) || (negligible && k * h > 3.0))
                ++dead;
            else
                dead = 0;
        }
    }
    Real integral = sum * Real(h);
    Real prev = integral;
    Real est = fabs(integral);
    int level = 1;
    for (; level <= spec.max_levels; ++level) {
        h *= 0.5;
        // add the new (odd-multiple) nodes
        Real add(0);
        int dead = 0;
        for (int k = 1; dead < 2 && k < 500000; k += 2) {
            bool okp, okm;
            Real tp = Real(h * k);
            Real term = node_term(tp, okp) + node_term(-tp, okm);
            add += term;
            bool negligible = fabs(to_double(term)) <= eps * std::fabs(to_double(sum + add));
            if ((!okp && !okm) || (negligible && k * h > 3.0))
                ++dead;
            else
                dead = 0;
        }
        sum += add;
        integral = sum * Real(h);
        est = fabs(integral - prev);
        prev = integral;
        if (to_double(est) <= to_double(spec.target_tol) *
                                  std::max(1.0, std::fabs(to_double(integral))) &&
            level >= 3)
            return {integral, est, level, evals};
    }
    if (to_double(est) >
        100.0 * to_double(spec.target_tol) * std::max(1.0, std::fabs(to_double(integral))))
        throw QuadratureError("tanh-sinh: no convergence within max_levels");
    return {integral, est, level - 1, evals};
}

} // namespace l3split
