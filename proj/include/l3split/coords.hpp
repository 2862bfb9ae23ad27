// Coordinate tower: Cartesian <-> symplectic polar <-> rotating Poincare
// elements (via Kepler's equation) <-> scaled variables <-> equilibrium
// shift <-> separatrix coordinates.  Phase convention for the Poincare pair:
// eta = sqrt(L - G) e^{i g}, xi = conj(eta) on the real slice, with g the
// rotating-frame perihelion argument; this reproduces the first-order series
//   r = 1 + 2(L-1) - e^{-i lam} eta/sqrt2 - e^{i lam} xi/sqrt2 + O(2)
//   theta = lam + i sqrt2 e^{-i lam} eta - i sqrt2 e^{i lam} xi + O(2)
//   R = i e^{-i lam} eta/sqrt2 - i e^{i lam} xi/sqrt2 + O(2),  G = L - eta xi.
#pragma once

#include "l3split/cplx.hpp"
#include "l3split/errors.hpp"
#include "l3split/pendulum.hpp"
#include "l3split/real.hpp"
#include "l3split/roots.hpp"
#include "l3split/rpc3bp.hpp"

namespace l3split {

template <class Real>
struct PolarState {
    Real r{}, theta{}, R{}, G{};
};

template <class Real>
struct PoincareState {
    Real lambda{}, L{};
    cplx<Real> eta, xi;
};

template <class Real>
struct ScaledState {
    Real lambda{}, Lambda{};
    cplx<Real> x, y;
    Real delta{};
};

template <class Real>
struct SeparatrixCoordState {
    Real u{}, w{};
    cplx<Real> x, y;
};

template <class Real>
PolarState<Real> cart_to_polar(const CartesianState<Real>& s) {
    Real r = hypot(s.q1, s.q2);
    if (to_double(r) == 0.0) throw DomainError("cart_to_polar: r = 0");
    return {r, atan2(s.q2, s.q1), (s.q1 * s.p1 + s.q2 * s.p2) / r,
            s.q1 * s.p2 - s.q2 * s.p1};
}

template <class Real>
CartesianState<Real> polar_to_cart(const PolarState<Real>& p) {
    Real s, c;
    if constexpr (std::is_same_v<Real, DD>) {
        sincos(p.theta, s, c);
    } else {
        s = std::sin(p.theta);
        c = std::cos(p.theta);
    }
    Real gr = p.G / p.r;
    return {p.r * c, p.r * s, p.R * c - gr * s, p.R * s + gr * c};
}

// Kepler's equation E - e sin E = M, safeguarded Newton
template <class Real>
Real kepler_solve(Real M, Real e, Real tol = Real(-1)) {
    if (to_double(e) < 0.0 || to_double(e) >= 1.0)
        throw DomainError("kepler_solve: eccentricity must lie in [0, 1)");
    if (to_double(tol) < 0.0) tol = Real(64 * real_traits<Real>::eps);
    Real E = M + e * sin(M);
    for (int it = 0; it < 60; ++it) {
        Real f = E - e * sin(E) - M;
        if (fabs(to_double(f)) <= to_double(tol)) return E;
        Real d = Real(1) - e * cos(E);
        Real step = f / d;
        if (fabs(to_double(step)) > 0.5) step = to_double(step) > 0 ? Real(0.5) : Real(-0.5);
        E -= step;
    }
    // bisection fallback on [M - e, M + e]
    return find_root_bracketed([&](Real x) { return x - e * sin(x) - M; }, M - e, M + e, tol);
}

template <class Real>
PoincareState<Real> polar_to_poincare(const PolarState<Real>& p) {
    Real two_body_energy = Real(0.5) * (p.R * p.R + (p.G / p.r) * (p.G / p.r)) - Real(1) / p.r;
    if (!(to_double(two_body_energy) < 0.0))
        throw NonEllipticError("polar_to_poincare: osculating orbit not elliptic");
    Real a = Real(-0.5) / two_body_energy;
    Real L = sqrt(a);
    Real ecosE = Real(1) - p.r / a;
    Real esinE = p.r * p.R / L;
    Real e = hypot(ecosE, esinE);
    if (to_double(e) >= 1.0)
        throw NonEllipticError("polar_to_poincare: eccentricity >= 1");
    PoincareState<Real> ps;
    ps.L = L;
    if (to_double(e) < 1e-15) {
        ps.lambda = normalize_angle(p.theta);
        ps.eta = cplx<Real>(Real(0), Real(0));
        ps.xi = ps.eta;
        return ps;
    }
    Real E = atan2(esinE, ecosE);
    Real ell = E - esinE;
    Real one_m = Real(1) - ecosE;   // r/a
    Real sinv = sqrt(Real(1) - e * e) * sin(E) / one_m;
    Real cosv = (cos(E) - e) / one_m;
    Real v = atan2(sinv, cosv);
    Real g = p.theta - v;
    ps.lambda = normalize_angle(ell + g);
    Real amp = sqrt(fabs(ps.L - p.G));
    ps.eta = amp * cis(g);
    ps.xi = conj(ps.eta);
    return ps;
}

template <class Real>
PolarState<Real> poincare_to_polar(const PoincareState<Real>& ps) {
    Real G = ps.L - (ps.eta * ps.xi).re;
    Real a = ps.L * ps.L;
    Real amp2 = abs2(ps.eta);
    if (to_double(amp2) < 1e-30) {
        PolarState<Real> p{a, normalize_angle(ps.lambda), Real(0), G};
        return p;
    }
    // e^2 = (L-G)(L+G)/L^2 without cancellation
    Real e = sqrt(amp2 * (ps.L + G)) / ps.L;
    if (to_double(e) >= 1.0) throw NonEllipticError("poincare_to_polar: eccentricity >= 1");
    Real g = arg(ps.eta);
    Real ell = ps.lambda - g;
    Real E = kepler_solve(ell, e);
    Real ecosE = e * cos(E), esinE = e * sin(E);
    Real r = a * (Real(1) - ecosE);
    Real R = ps.L * esinE / r;
    Real one_m = Real(1) - ecosE;
    Real sinv = sqrt(Real(1) - e * e) * sin(E) / one_m;
    Real cosv = (cos(E) - e) / one_m;
    Real theta = normalize_angle(g + atan2(sinv, cosv));
    return {r, theta, R, G};
}

// singular symplectic scaling L = 1 + delta^2 Lambda, eta = delta x,
// xi = delta y (time scaling t = delta^{-2} tau is the caller's business)
template <class Real>
ScaledState<Real> scale(const PoincareState<Real>& ps, Real delta) {
    if (!(to_double(delta) > 0)) throw std::invalid_argument("scale: delta must be positive");
    Real d2 = delta * delta;
    return {ps.lambda, (ps.L - Real(1)) / d2, ps.eta / delta, ps.xi / delta, delta};
}

template <class Real>
PoincareState<Real> unscale(const ScaledState<Real>& ss) {
    PoincareState<Real> ps;
    ps.lambda = ss.lambda;
    ps.L = Real(1) + ss.delta * ss.delta * ss.Lambda;
    ps.eta = ss.x * ss.delta;
    ps.xi = ss.y * ss.delta;
    return ps;
}

template <class Real>
ScaledState<Real> cart_to_scaled(const CartesianState<Real>& s, Real delta) {
    return scale(polar_to_poincare(cart_to_polar(s)), delta);
}

template <class Real>
CartesianState<Real> scaled_to_cart(const ScaledState<Real>& ss) {
    return polar_to_cart(poincare_to_polar(unscale(ss)));
}

// L3 pushed through the tower; components scale as (0, d^2, d^3, d^3)
template <class Real>
ScaledState<Real> l3_scaled(const MuParam<Real>& m) {
    auto L3 = l3_point(m);
    return cart_to_scaled(L3.state, m.delta);
}

template <class Real>
struct EquiShift {
    ScaledState<Real> l3;

    static EquiShift make(const MuParam<Real>& m) { return {l3_scaled(m)}; }

    ScaledState<Real> shift(const ScaledState<Real>& s) const {
        return {s.lambda - l3.lambda, s.Lambda - l3.Lambda, s.x - l3.x, s.y - l3.y, s.delta};
    }
    ScaledState<Real> unshift(const ScaledState<Real>& s) const {
        return {s.lambda + l3.lambda, s.Lambda + l3.Lambda, s.x + l3.x, s.y + l3.y, s.delta};
    }
};

// separatrix coordinates: lambda = lambda_h(u), Lambda = Lambda_h(u) - w/(3 Lambda_h(u));
// u on the stable (u>0) or unstable (u<0) half-branch
template <class Real>
SeparatrixCoordState<Real> to_separatrix_coords(const ScaledState<Real>& ss,
                                                const SeparatrixHandle& handle, bool stable_side,
                                                double u_floor = 1e-3) {
    double lam = to_double(ss.lambda);
    double u = handle.invert(lam, stable_side);
    if (std::fabs(u) < u_floor)
        throw DomainError("to_separatrix_coords: u below the configured floor (chart "
                          "degenerates at u = 0)");
    auto sep = handle.eval(u);
    Real Lh{sep.Lambda_h};
    Real w = Real(3) * Lh * (Lh - ss.Lambda);
    return {Real(u), w, ss.x, ss.y};
}

template <class Real>
ScaledState<Real> from_separatrix_coords(const SeparatrixCoordState<Real>& sc,
                                         const SeparatrixHandle& handle, Real delta) {
    auto sep = handle.eval(to_double(sc.u));
    Real Lh{sep.Lambda_h};
    if (to_double(fabs(Lh)) < 1e-14)
        throw DomainError("from_separatrix_coords: Lambda_h(u) ~ 0");
    return {Real(sep.lambda_h), Lh - sc.w / (Real(3) * Lh), sc.x, sc.y, delta};
}

// ---- scaled Hamiltonian pieces (tower-mediated) ----

// H_1^Poi = (h o phi_Poi - H_0^Poi)/mu with H_0^Poi = -1/(2L^2) - L + eta xi
template <class Real>
Real h1_poincare(const PoincareState<Real>& ps, const MuParam<Real>& m) {
    auto cart = polar_to_cart(poincare_to_polar(ps));
    Real h = hamiltonian_h(cart, m);
    Real H0 = Real(-0.5) / (ps.L * ps.L) - ps.L + (ps.eta * ps.xi).re;
    return (h - H0) / m.mu;
}

// H_1 = H_1^Poi(lambda, 1+d^2 Lam, d x, d y) - V(lambda) + d^{-4} F_pend(d^2 Lam)
template <class Real>
Real h1_eval(const ScaledState<Real>& ss, const MuParam<Real>& m) {
    Real h1p = h1_poincare(unscale(ss), m);
    Real d2 = ss.delta * ss.delta;
    return h1p - potential_V(ss.lambda) + f_pend(d2 * ss.Lambda) / m.mu;
}

// full scaled Hamiltonian H = H_pend + H_osc + H_1 (additive constant fixed
// so that H = (h o tower)/mu + 3/(2 mu))
template <class Real>
Real hamiltonian_scaled(const ScaledState<Real>& ss, const MuParam<Real>& m) {
    Real Hpend = Real(-1.5) * ss.Lambda * ss.Lambda + potential_V(ss.lambda);
    Real Hosc = (ss.x * ss.y).re / (ss.delta * ss.delta);
    return Hpend + Hosc + h1_eval(ss, m);
}

} // namespace l3split
