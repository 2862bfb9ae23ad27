// Restricted planar circular 3-body problem in the rotating frame:
// primaries S = (mu, 0) with mass 1-mu and P = (mu-1, 0) with mass mu,
//   h(q,p) = |p|^2/2 - (q1 p2 - q2 p1) - (1-mu)/|q-S| - mu/|q-P|.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "l3split/cplx.hpp"
#include "l3split/errors.hpp"
#include "l3split/real.hpp"
#include "l3split/roots.hpp"

namespace l3split {

template <class Real>
struct MuParam {
    Real mu{};
    Real delta{};   // mu^(1/4)

    static MuParam make(Real mu) {
        if (!(to_double(mu) > 0.0) || to_double(mu) > 0.5)
            throw std::invalid_argument("mu must lie in (0, 1/2]");
        return {mu, sqrt(sqrt(mu))};
    }
};

template <class Real>
struct CartesianState {
    Real q1{}, q2{}, p1{}, p2{};

    std::array<Real, 4> array() const { return {q1, q2, p1, p2}; }
    static CartesianState from(const Real* y) { return {y[0], y[1], y[2], y[3]}; }
};

// reversibility involution Phi(q1,q2,p1,p2) = (q1,-q2,-p1,p2) (with t -> -t)
template <class Real>
CartesianState<Real> involution_phi(const CartesianState<Real>& s) {
    return {s.q1, -s.q2, -s.p1, s.p2};
}

namespace detail {
template <class Real>
void primary_offsets(const CartesianState<Real>& s, const MuParam<Real>& m, Real& dSx, Real& dPx) {
    dSx = s.q1 - m.mu;
    dPx = s.q1 - m.mu + Real(1);
}
} // namespace detail

template <class Real>
Real hamiltonian_h(const CartesianState<Real>& s, const MuParam<Real>& m) {
    Real dSx, dPx;
    detail::primary_offsets(s, m, dSx, dPx);
    Real rS = hypot(dSx, s.q2), rP = hypot(dPx, s.q2);
    if (to_double(rS) == 0.0 || to_double(rP) == 0.0)
        throw CollisionError("hamiltonian evaluated at a primary");
    return (s.p1 * s.p1 + s.p2 * s.p2) * Real(0.5) - (s.q1 * s.p2 - s.q2 * s.p1) -
           (Real(1) - m.mu) / rS - m.mu / rP;
}

template <class Real>
std::array<Real, 4> grad_h(const CartesianState<Real>& s, const MuParam<Real>& m) {
    Real dSx, dPx;
    detail::primary_offsets(s, m, dSx, dPx);
    Real rS2 = dSx * dSx + s.q2 * s.q2, rP2 = dPx * dPx + s.q2 * s.q2;
    Real irS3 = Real(1) / (rS2 * sqrt(rS2)), irP3 = Real(1) / (rP2 * sqrt(rP2));
    Real ms = Real(1) - m.mu;
    return {-s.p2 + ms * dSx * irS3 + m.mu * dPx * irP3,
            s.p1 + ms * s.q2 * irS3 + m.mu * s.q2 * irP3,
            s.p1 + s.q2,
            s.p2 - s.q1};
}

// symplectic gradient: (dq/dt, dp/dt) = (dh/dp, -dh/dq)
template <class Real>
void vector_field(const Real* y, Real* dy, const MuParam<Real>& m) {
    CartesianState<Real> s = CartesianState<Real>::from(y);
    auto g = grad_h(s, m);
    dy[0] = g[2];
    dy[1] = g[3];
    dy[2] = -g[0];
    dy[3] = -g[1];
}

template <class Real>
CartesianState<Real> vector_field(const CartesianState<Real>& s, const MuParam<Real>& m) {
    auto y = s.array();
    std::array<Real, 4> dy;
    vector_field(y.data(), dy.data(), m);
    return CartesianState<Real>::from(dy.data());
}

// Jacobian of the vector field (closed-form second derivatives of h)
template <class Real>
std::array<std::array<Real, 4>, 4> vector_field_jacobian(const CartesianState<Real>& s,
                                                         const MuParam<Real>& m) {
    Real dSx, dPx;
    detail::primary_offsets(s, m, dSx, dPx);
    std::array<std::array<Real, 4>, 4> M{};
    M[0] = {Real(0), Real(1), Real(1), Real(0)};
    M[1] = {Real(-1), Real(0), Real(0), Real(1)};
    // B = sum_c m_c (3 d d^T / r^5 - I / r^3)
    Real Bxx(0), Bxy(0), Byy(0);
    const Real masses[2] = {Real(1) - m.mu, m.mu};
    const Real dx[2] = {dSx, dPx};
    for (int k = 0; k < 2; ++k) {
        Real r2 = dx[k] * dx[k] + s.q2 * s.q2;
        Real r = sqrt(r2);
        Real ir3 = Real(1) / (r2 * r), ir5 = ir3 / r2;
        Bxx += masses[k] * (Real(3) * dx[k] * dx[k] * ir5 - ir3);
        Bxy += masses[k] * (Real(3) * dx[k] * s.q2 * ir5);
        Byy += masses[k] * (Real(3) * s.q2 * s.q2 * ir5 - ir3);
    }
    M[2] = {Bxx, Bxy, Real(0), Real(1)};
    M[3] = {Bxy, Byy, Real(-1), Real(0)};
    return M;
}

template <class Real>
struct Spectrum {
    // characteristic polynomial is lambda^4 + a lambda^2 + b
    Real a{}, b{};
    Real lambda_hyp{};   // positive real eigenvalue
    Real omega{};        // positive imaginary part of the elliptic pair
    std::array<cplx<Real>, 4> eigenvalues;
    bool saddle_center = false;
};

// spectrum of a 4x4 Hamiltonian-linearization matrix via the quadratic in
// lambda^2 (odd characteristic coefficients vanish)
template <class Real>
Spectrum<Real> spectrum_of(const std::array<std::array<Real, 4>, 4>& M) {
    Spectrum<Real> sp;
    Real a(0);
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) a += M[i][i] * M[j][j] - M[i][j] * M[j][i];
    // det via cofactor expansion
    auto det3 = [&](int r0, int r1, int r2, int c0, int c1, int c2) {
        return M[r0][c0] * (M[r1][c1] * M[r2][c2] - M[r1][c2] * M[r2][c1]) -
               M[r0][c1] * (M[r1][c0] * M[r2][c2] - M[r1][c2] * M[r2][c0]) +
               M[r0][c2] * (M[r1][c0] * M[r2][c1] - M[r1][c1] * M[r2][c0]);
    };
    Real b = M[0][0] * det3(1, 2, 3, 1, 2, 3) - M[0][1] * det3(1, 2, 3, 0, 2, 3) +
             M[0][2] * det3(1, 2, 3, 0, 1, 3) - M[0][3] * det3(1, 2, 3, 0, 1, 2);
    sp.a = a;
    sp.b = b;
    Real disc = a * a - Real(4) * b;
    if (to_double(disc) < 0.0) {
        sp.saddle_center = false;
        return sp;
    }
    Real sq = sqrt(disc);
    Real s1 = (-a + sq) * Real(0.5);   // larger root of s^2 + a s + b
    Real s2 = (-a - sq) * Real(0.5);
    if (!(to_double(s1) > 0.0 && to_double(s2) < 0.0)) {
        sp.saddle_center = false;
        sp.lambda_hyp = Real(0);
        sp.omega = Real(0);
        return sp;
    }
    sp.saddle_center = true;
    sp.lambda_hyp = sqrt(s1);
    sp.omega = sqrt(-s2);
    sp.eigenvalues = {cplx<Real>(sp.lambda_hyp, Real(0)), cplx<Real>(-sp.lambda_hyp, Real(0)),
                      cplx<Real>(Real(0), sp.omega), cplx<Real>(Real(0), -sp.omega)};
    return sp;
}

// real eigenvector of (M - lambda I) v = 0 by elimination with pivoting;
// normalized to |v| = 1
template <class Real>
std::array<Real, 4> real_eigenvector(const std::array<std::array<Real, 4>, 4>& M, Real lambda) {
    std::array<std::array<Real, 4>, 4> A = M;
    for (int i = 0; i < 4; ++i) A[i][i] -= lambda;
    std::array<int, 4> col{0, 1, 2, 3};
    std::array<Real, 4> v{};
    // forward elimination, 3 pivots; the 4th variable is free
    for (int k = 0; k < 3; ++k) {
        int pr = k, pc = k;
        double best = -1;
        for (int i = k; i < 4; ++i)
            for (int j = k; j < 4; ++j) {
                double m = std::fabs(to_double(A[i][col[j]]));
                if (m > best) {
                    best = m;
                    pr = i;
                    pc = j;
                }
            }
        std::swap(A[k], A[pr]);
        std::swap(col[k], col[pc]);
        for (int i = k + 1; i < 4; ++i) {
            Real fac = A[i][col[k]] / A[k][col[k]];
            for (int j = k; j < 4; ++j) A[i][col[j]] -= fac * A[k][col[j]];
        }
    }
    std::array<Real, 4> x{};
    x[col[3]] = Real(1);
    for (int k = 2; k >= 0; --k) {
        Real s(0);
        for (int j = k + 1; j < 4; ++j) s += A[k][col[j]] * x[col[j]];
        x[col[k]] = -s / A[k][col[k]];
    }
    Real nrm = sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
    for (auto& xi : x) xi = xi / nrm;
    return x;
}

enum class LagrangeLabel { L1, L2, L3, L4, L5 };

inline const char* lagrange_name(LagrangeLabel l) {
    switch (l) {
        case LagrangeLabel::L1: return "L1";
        case LagrangeLabel::L2: return "L2";
        case LagrangeLabel::L3: return "L3";
        case LagrangeLabel::L4: return "L4";
        default: return "L5";
    }
}

template <class Real>
struct LagrangePoint {
    LagrangeLabel label{};
    CartesianState<Real> state;
    Spectrum<Real> spectrum;
    Real grad_norm{};
};

namespace detail {
// collinear slice q2 = 0, p1 = 0, p2 = q1: equilibrium where dp1/dt = 0
template <class Real>
Real collinear_residual(Real q1, const MuParam<Real>& m) {
    Real dS = q1 - m.mu, dP = q1 - m.mu + Real(1);
    Real aS = fabs(dS), aP = fabs(dP);
    return q1 - (Real(1) - m.mu) * dS / (aS * aS * aS) - m.mu * dP / (aP * aP * aP);
}
} // namespace detail

template <class Real>
LagrangePoint<Real> make_lagrange(LagrangeLabel label, CartesianState<Real> st,
                                  const MuParam<Real>& m) {
    LagrangePoint<Real> L;
    L.label = label;
    L.state = st;
    auto g = grad_h(st, m);
    L.grad_norm = sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + g[3] * g[3]);
    L.spectrum = spectrum_of(vector_field_jacobian(st, m));
    return L;
}

template <class Real>
std::array<LagrangePoint<Real>, 5> lagrange_points(const MuParam<Real>& m) {
    auto res = [&](Real q1) { return detail::collinear_residual(q1, m); };
    Real tol = Real(real_traits<Real>::eps * 16);
    // L1 between P and S, L2 beyond P, L3 beyond S (q1 > mu)
    Real q1_L1 = find_root_bracketed(res, m.mu - Real(1) + Real(1e-9), m.mu - Real(1e-9), tol);
    Real q1_L2 = find_root_bracketed(res, Real(-3), m.mu - Real(1) - Real(1e-9), tol);
    Real q1_L3 = find_root_bracketed(res, m.mu + Real(0.5), Real(3), tol);
    auto collinear = [&](Real q1) { return CartesianState<Real>{q1, Real(0), Real(0), q1}; };
    Real half = Real(0.5) - m.mu;    // equilateral points at q1 = mu - 1/2
    Real s3 = sqrt(Real(3)) * Real(0.5);
    CartesianState<Real> l4{-half, -s3, s3, -half};   // trailing, q2 < 0
    CartesianState<Real> l5{-half, s3, -s3, -half};   // leading, q2 > 0
    return {make_lagrange(LagrangeLabel::L1, collinear(q1_L1), m),
            make_lagrange(LagrangeLabel::L2, collinear(q1_L2), m),
            make_lagrange(LagrangeLabel::L3, collinear(q1_L3), m),
            make_lagrange(LagrangeLabel::L4, l4, m),
            make_lagrange(LagrangeLabel::L5, l5, m)};
}

template <class Real>
LagrangePoint<Real> l3_point(const MuParam<Real>& m) {
    auto res = [&](Real q1) { return detail::collinear_residual(q1, m); };
    Real q1 = find_root_bracketed(res, m.mu + Real(0.5), Real(3),
                                  Real(real_traits<Real>::eps * 16));
    LagrangePoint<Real> L =
        make_lagrange(LagrangeLabel::L3, CartesianState<Real>{q1, Real(0), Real(0), q1}, m);
    if (!L.spectrum.saddle_center)
        throw NumericsError("L3 spectrum did not split into a saddle-center pair");
    return L;
}

} // namespace l3split
