// Parameter-free inner equation near the separatrix singularity u = iA:
//   dZ/dU = A_inn Z + R_inn[Z],  A_inn = diag(0, i, -i),  Z = (W, X, Y),
// with R_inn built from the closed-form Hamiltonian correction
//   K(U,W,X,Y) = -(3/4) U^{2/3} W^2 - (1/(3 U^{2/3})) (1/sqrt(1+J) - 1).
// The unstable/stable solutions are seeded on Im U = -rho from the unique
// formal Puiseux series in U^{-1/3} and integrated toward Re U = 0; the
// Stokes constant is the e^{-iU} prefactor of their difference.
#pragma once

#include <algorithm>
#include <complex>
#include <vector>

#include "l3split/cplx.hpp"
#include "l3split/errors.hpp"
#include "l3split/ode.hpp"
#include "l3split/real.hpp"

namespace l3split {

// U^{1/3} on the branch arg U in (-3pi/2, pi/2): principal on the lower
// half plane, cut on the positive imaginary axis
template <class Real>
cplx<Real> third_root(const cplx<Real>& U) {
    Real a = arg(U);
    if (to_double(a) >= to_double(real_traits<Real>::half_pi()))
        a -= real_traits<Real>::two_pi();
    Real r = pow(abs2(U), Real(1) / Real(6));
    return r * cis(a / Real(3));
}

template <class Real>
struct InnerDerivs {
    cplx<Real> K, Ku, Kw, Kx, Ky, J, g;
};

template <class Real>
InnerDerivs<Real> calK_derivs(const cplx<Real>& U, const cplx<Real>& W, const cplx<Real>& X,
                              const cplx<Real>& Y) {
    using C = cplx<Real>;
    const C u13 = third_root(U);
    const C u23 = u13 * u13;
    const C u43 = u23 * u23;
    const C u53 = u43 * u13;
    const C one(Real(1), Real(0));
    const C iu(Real(0), Real(1));
    const C U2 = U * U;

    C J = (Real(4) / Real(9)) * W * W / u23 - (Real(16) / Real(27)) * W / u43 +
          (Real(16) / Real(81)) / U2 +
          (Real(4) / Real(9)) * (X + Y) / U * (W - (Real(2) / Real(3)) / u23) -
          (Real(4) / Real(3)) * iu * (X - Y) / u23 - (X * X + Y * Y) / (Real(3) * u43) +
          (Real(10) / Real(9)) * X * Y / u43;
    C dJW = (Real(8) / Real(9)) * W / u23 - (Real(16) / Real(27)) / u43 +
            (Real(4) / Real(9)) * (X + Y) / U;
    C dJX = (Real(4) / Real(9)) / U * (W - (Real(2) / Real(3)) / u23) -
            (Real(4) / Real(3)) * iu / u23 - (Real(2) / Real(3)) * X / u43 +
            (Real(10) / Real(9)) * Y / u43;
    C dJY = (Real(4) / Real(9)) / U * (W - (Real(2) / Real(3)) / u23) +
            (Real(4) / Real(3)) * iu / u23 - (Real(2) / Real(3)) * Y / u43 +
            (Real(10) / Real(9)) * X / u43;
    C dJU = -(Real(8) / Real(27)) * W * W / u53 + (Real(64) / Real(81)) * W / (u43 * U) -
            (Real(32) / Real(81)) / (U2 * U) +
            (Real(4) / Real(9)) * (X + Y) *
                (-W / U2 + (Real(10) / Real(9)) / (u23 * U2)) +
            (Real(8) / Real(9)) * iu * (X - Y) / u53 +
            (Real(4) / Real(9)) * (X * X + Y * Y) / (u43 * U) -
            (Real(40) / Real(27)) * X * Y / (u43 * U);

    C opj = one + J;
    C Q = one / sqrt(opj);          // (1+J)^{-1/2}, principal branch
    C Qp = Real(-0.5) * Q * Q * Q;  // d/dJ of the above

    InnerDerivs<Real> d;
    d.J = J;
    d.K = Real(-0.75) * u23 * W * W - (Q - one) / (Real(3) * u23);
    d.Kw = Real(-1.5) * u23 * W - Qp * dJW / (Real(3) * u23);
    d.Kx = -Qp * dJX / (Real(3) * u23);
    d.Ky = -Qp * dJY / (Real(3) * u23);
    d.Ku = Real(-0.5) * W * W / u13 + (Real(2) / Real(9)) * (Q - one) / u53 -
           Qp * dJU / (Real(3) * u23);
    d.g = d.Kw;
    return d;
}

template <class Real>
cplx<Real> calJ(const cplx<Real>& U, const cplx<Real>& W, const cplx<Real>& X,
                const cplx<Real>& Y) {
    return calK_derivs(U, W, X, Y).J;
}
template <class Real>
cplx<Real> calK(const cplx<Real>& U, const cplx<Real>& W, const cplx<Real>& X,
                const cplx<Real>& Y) {
    return calK_derivs(U, W, X, Y).K;
}

// dZ/dU = A Z + (f - g A Z)/(1+g), f = (-K_U, i K_Y, -i K_X), g = K_W
template <class Real>
void inner_rhs(const cplx<Real>& U, const cplx<Real>* Z, cplx<Real>* dZ) {
    using C = cplx<Real>;
    auto d = calK_derivs(U, Z[0], Z[1], Z[2]);
    C opg = C(Real(1), Real(0)) + d.g;
    if (to_double(abs(opg)) < 1e-6)
        throw NumericsError("inner_rhs: 1 + dK/dW too close to zero");
    const C iu(Real(0), Real(1));
    C A1(Real(0), Real(0));
    C A2 = iu * Z[1];
    C A3 = -iu * Z[2];
    C f1 = -d.Ku, f2 = iu * d.Ky, f3 = -iu * d.Kx;
    dZ[0] = A1 + (f1 - d.g * A1) / opg;
    dZ[1] = A2 + (f2 - d.g * A2) / opg;
    dZ[2] = A3 + (f3 - d.g * A3) / opg;
}

// ---- formal asymptotic series solution in v = U^{-1/3} ----

class InnerSeries {
  public:
    static constexpr int kLo = -6;
    static constexpr int kOrder = 48;

    struct Series {
        std::vector<std::complex<double>> c;
        Series() : c(kOrder - kLo + 1) {}
        static Series mono(int k, std::complex<double> v = 1.0) {
            Series s;
            s.c[k - kLo] = v;
            return s;
        }
        std::complex<double>& at(int k) { return c[k - kLo]; }
    };

    InnerSeries() { build(); }

    // series value at U (branch third root); returns (W, X, Y)
    template <class Real>
    void eval(const cplx<Real>& U, cplx<Real>* Z) const {
        cplx<Real> v = cplx<Real>(Real(1), Real(0)) / third_root(U);
        for (int comp = 0; comp < 3; ++comp) {
            const auto& s = comp == 0 ? W_ : (comp == 1 ? X_ : Y_);
            cplx<Real> acc(Real(0), Real(0));
            for (int i = static_cast<int>(s.c.size()) - 1; i >= 0; --i) {
                acc = acc * v;
                acc += cplx<Real>(Real(s.c[i].real()), Real(s.c[i].imag()));
            }
            // multiply by v^{kLo}
            cplx<Real> vpow(Real(1), Real(0));
            for (int k = 0; k < -kLo; ++k) vpow = vpow * v;
            Z[comp] = acc / vpow;
        }
    }

    std::complex<double> coeff(int comp, int k) const {
        const auto& s = comp == 0 ? W_ : (comp == 1 ? X_ : Y_);
        return s.c[k - kLo];
    }

  private:
    using C = std::complex<double>;

    static Series add(const Series& a, const Series& b) {
        Series o;
        for (size_t i = 0; i < o.c.size(); ++i) o.c[i] = a.c[i] + b.c[i];
        return o;
    }
    static Series sub(const Series& a, const Series& b) {
        Series o;
        for (size_t i = 0; i < o.c.size(); ++i) o.c[i] = a.c[i] - b.c[i];
        return o;
    }
    static Series smul(const Series& a, C s) {
        Series o;
        for (size_t i = 0; i < o.c.size(); ++i) o.c[i] = a.c[i] * s;
        return o;
    }
    static Series mul(const Series& a, const Series& b) {
        Series o;
        const int n = static_cast<int>(a.c.size());
        for (int i = 0; i < n; ++i) {
            if (a.c[i] == 0.0) continue;
            int ei = i + kLo;
            int jlo = std::max(0, -ei);
            int jhi = std::min(n - 1, kOrder - kLo - ei);
            for (int j = jlo; j <= jhi; ++j) o.c[ei + j] += a.c[i] * b.c[j];
        }
        return o;
    }
    // d/dU = -(1/3) v^4 d/dv
    static Series dU(const Series& a) {
        Series o;
        const int n = static_cast<int>(a.c.size());
        for (int i = 0; i < n; ++i) {
            int k = i + kLo;
            int kk = k + 3;
            if (a.c[i] != 0.0 && kk <= kOrder) o.c[kk - kLo] += a.c[i] * double(k) * (-1.0 / 3.0);
        }
        return o;
    }
    // antiderivative with decaying constant: v^k dU -> -3 v^{k-3}/(k-3)
    static Series intU(const Series& a) {
        Series o;
        const int n = static_cast<int>(a.c.size());
        for (int i = 0; i < n; ++i) {
            int k = i + kLo;
            if (a.c[i] == 0.0) continue;
            if (k == 3) throw NumericsError("inner series: logarithmic term encountered");
            int kk = k - 3;
            if (kk >= kLo && kk <= kOrder) o.c[kk - kLo] += a.c[i] * (-3.0) / double(k - 3);
        }
        return o;
    }
    static Series inv(const Series& a) {
        Series r = Series::mono(0, 1.0 / a.c[-kLo]);
        Series two = Series::mono(0, 2.0);
        for (int it = 0; it < 12; ++it) r = mul(r, sub(two, mul(a, r)));
        return r;
    }
    static Series invsqrt(const Series& a) {
        Series r = Series::mono(0, 1.0 / std::sqrt(a.c[-kLo]));
        Series three = Series::mono(0, 3.0);
        for (int it = 0; it < 12; ++it)
            r = smul(mul(r, sub(three, mul(a, mul(r, r)))), 0.5);
        return r;
    }

    void build() {
        const C I(0.0, 1.0);
        Series U23 = Series::mono(-2), Um23 = Series::mono(2), Um43 = Series::mono(4);
        Series Um1 = Series::mono(3), Um53 = Series::mono(5), Um2 = Series::mono(6);
        Series W, X, Y;
        for (int pass = 0; pass < kOrder + 8; ++pass) {
            Series XY = mul(X, Y), XX = mul(X, X), YY = mul(Y, Y), WW = mul(W, W);
            Series XpY = add(X, Y), XmY = sub(X, Y);
            Series core = sub(W, smul(Um23, 2.0 / 3.0));
            Series J = add(
                add(add(smul(mul(Um23, WW), 4.0 / 9.0), smul(mul(Um43, W), -16.0 / 27.0)),
                    add(smul(Um2, 16.0 / 81.0), smul(mul(Um1, mul(XpY, core)), 4.0 / 9.0))),
                add(add(smul(mul(Um23, XmY), -I * (4.0 / 3.0)),
                        smul(mul(Um43, add(XX, YY)), -1.0 / 3.0)),
                    smul(mul(Um43, XY), 10.0 / 9.0)));
            Series dJW = add(add(smul(mul(Um23, W), 8.0 / 9.0), smul(Um43, -16.0 / 27.0)),
                             smul(mul(Um1, XpY), 4.0 / 9.0));
            Series dJX = add(add(smul(mul(Um1, core), 4.0 / 9.0), smul(Um23, -I * (4.0 / 3.0))),
                             add(smul(mul(Um43, X), -2.0 / 3.0), smul(mul(Um43, Y), 10.0 / 9.0)));
            Series dJY = add(add(smul(mul(Um1, core), 4.0 / 9.0), smul(Um23, I * (4.0 / 3.0))),
                             add(smul(mul(Um43, Y), -2.0 / 3.0), smul(mul(Um43, X), 10.0 / 9.0)));
            Series dJU = add(
                add(add(smul(mul(Um53, WW), -8.0 / 27.0), smul(mul(mul(Um43, Um1), W), 64.0 / 81.0)),
                    add(smul(mul(Um2, Um1), -32.0 / 81.0),
                        smul(mul(XpY, add(smul(mul(Um2, W), -1.0),
                                          smul(mul(Um23, Um2), 10.0 / 9.0))),
                             4.0 / 9.0))),
                add(add(smul(mul(Um53, XmY), I * (8.0 / 9.0)),
                        smul(mul(mul(Um43, Um1), add(XX, YY)), 4.0 / 9.0)),
                    smul(mul(mul(Um43, Um1), XY), -40.0 / 27.0)));
            Series opj = add(Series::mono(0, 1.0), J);
            Series Q = invsqrt(opj);
            Series Qp = smul(mul(Q, mul(Q, Q)), -0.5);
            Series Qm1 = sub(Q, Series::mono(0, 1.0));
            Series Kw = add(smul(mul(U23, W), -1.5), smul(mul(Um23, mul(Qp, dJW)), -1.0 / 3.0));
            Series Kx = smul(mul(Um23, mul(Qp, dJX)), -1.0 / 3.0);
            Series Ky = smul(mul(Um23, mul(Qp, dJY)), -1.0 / 3.0);
            Series Ku = add(add(smul(mul(Series::mono(1), WW), -0.5),
                                smul(mul(Um53, Qm1), 2.0 / 9.0)),
                            smul(mul(Um23, mul(Qp, dJU)), -1.0 / 3.0));
            Series ginv = inv(add(Series::mono(0, 1.0), Kw));
            Series R1 = mul(smul(Ku, -1.0), ginv);
            Series R2 = mul(sub(smul(Ky, I), mul(Kw, smul(X, I))), ginv);
            Series R3 = mul(sub(smul(Kx, -I), mul(Kw, smul(Y, -I))), ginv);
            Series Wn = intU(R1);
            Series Xn = smul(sub(dU(X), R2), -I);
            Series Yn = smul(sub(dU(Y), R3), I);
            W = Wn;
            X = Xn;
            Y = Yn;
        }
        W_ = W;
        X_ = X;
        Y_ = Y;
    }

    Series W_, X_, Y_;
};

inline const InnerSeries& inner_series() {
    static InnerSeries s;
    return s;
}

// ---- branch solves along Im U = -rho ----

template <class Real>
struct InnerPath {
    double rho = 12.0;      // path Im U = -rho
    double re_start = 60.0; // |Re U| at the seed
    double re_end = 6.0;    // extend past 0 to +/- re_end
    IntegratorConfig<Real> cfg;

    void validate() const {
        if (!(rho >= 5.0)) throw std::invalid_argument("inner path: rho must be >= 5");
        if (!(re_start >= 30.0))
            throw std::invalid_argument("inner path: |re_start| must be >= 30");
    }
};

template <class Real>
struct InnerSolution {
    std::vector<double> sigma;                  // Re U of each sample
    std::vector<std::array<cplx<Real>, 3>> Z;   // (W, X, Y)
    double rho = 0;
    double max_weighted_norm = 0;   // max |U|^{4/3} |Z| along the path
    double seed_residual = 0;       // rhs residual of the series at the seed
};

enum class InnerBranch { unstable, stable };

template <class Real>
InnerSolution<Real> solve_inner_branch(InnerBranch kind, const InnerPath<Real>& path,
                                       const std::vector<double>& sample_sigmas,
                                       bool mirrored = false) {
    path.validate();
    const auto& series = inner_series();
    double sig0 = kind == InnerBranch::unstable ? -path.re_start : path.re_start;
    double sig1 = kind == InnerBranch::unstable ? path.re_end : -path.re_end;
    double rho_signed = mirrored ? path.rho : -path.rho;

    auto Uof = [rho_signed](Real sigma) { return cplx<Real>(sigma, Real(rho_signed)); };

    // mirrored system: Zhat(V) = (conj W, conj Y, conj X)(conj V); satisfies
    // dZhat/dV = conj-swap of rhs at conj V
    auto rhs6 = [&](Real s, const Real* y, Real* dy) {
        cplx<Real> Z[3] = {{y[0], y[1]}, {y[2], y[3]}, {y[4], y[5]}};
        cplx<Real> dZ[3];
        if (!mirrored) {
            inner_rhs(Uof(s), Z, dZ);
        } else {
            cplx<Real> Zc[3] = {conj(Z[0]), conj(Z[2]), conj(Z[1])};
            cplx<Real> dZc[3];
            inner_rhs(cplx<Real>(s, -Real(rho_signed)), Zc, dZc);
            dZ[0] = conj(dZc[0]);
            dZ[1] = conj(dZc[2]);
            dZ[2] = conj(dZc[1]);
        }
        for (int c = 0; c < 3; ++c) {
            dy[2 * c] = dZ[c].re;
            dy[2 * c + 1] = dZ[c].im;
        }
    };

    cplx<Real> Z0[3];
    if (!mirrored) {
        series.eval(Uof(Real(sig0)), Z0);
    } else {
        cplx<Real> Zc[3];
        series.eval(cplx<Real>(Real(sig0), Real(-rho_signed)), Zc);
        Z0[0] = conj(Zc[0]);
        Z0[1] = conj(Zc[2]);
        Z0[2] = conj(Zc[1]);
    }
    // seed diagnostic: series must nearly satisfy the ODE
    double seed_res = 0;
    {
        cplx<Real> dZ[3];
        cplx<Real> Zs[3];
        double h = 1e-3;
        cplx<Real> Zp[3], Zm[3];
        if (!mirrored) {
            inner_rhs(Uof(Real(sig0)), Z0, dZ);
            series.eval(Uof(Real(sig0 + h)), Zp);
            series.eval(Uof(Real(sig0 - h)), Zm);
            for (int c = 0; c < 3; ++c) {
                cplx<Real> fd = (Zp[c] - Zm[c]) / Real(2 * h);
                seed_res = std::max(seed_res, to_double(abs(fd - dZ[c])));
            }
        }
        (void)Zs;
    }

    std::vector<Real> y0(6);
    for (int c = 0; c < 3; ++c) {
        y0[2 * c] = Z0[c].re;
        y0[2 * c + 1] = Z0[c].im;
    }

    std::vector<double> sigmas = sample_sigmas;
    std::sort(sigmas.begin(), sigmas.end());
    if (kind == InnerBranch::stable) std::reverse(sigmas.begin(), sigmas.end());

    InnerSolution<Real> out;
    out.rho = path.rho;
    out.seed_residual = seed_res;
    Real s = Real(sig0);
    std::vector<Real> y = y0;
    IntegratorConfig<Real> cfg = path.cfg;
    cfg.dense_output = false;
    auto record = [&](double sig, const std::vector<Real>& yy) {
        out.sigma.push_back(sig);
        out.Z.push_back({cplx<Real>(yy[0], yy[1]), cplx<Real>(yy[2], yy[3]),
                         cplx<Real>(yy[4], yy[5])});
        double n2 = 0;
        for (int c = 0; c < 3; ++c) n2 += to_double(abs2(out.Z.back()[c]));
        double au43 = std::pow(sig * sig + path.rho * path.rho, 2.0 / 3.0);
        out.max_weighted_norm = std::max(out.max_weighted_norm, au43 * std::sqrt(n2));
        return true;
    };
    for (double target : sigmas) {
        if ((kind == InnerBranch::unstable && target < sig0) ||
            (kind == InnerBranch::stable && target > sig0))
            throw std::invalid_argument("sample sigma outside the integration path");
        auto res = integrate(rhs6, s, Real(target), y, cfg);
        s = res.t;
        y = res.y;
        record(target, y);
    }
    (void)sig1;
    return out;
}

template <class Real>
struct StokesEstimate {
    cplx<Real> theta;
    double abs_theta = 0;
    std::vector<std::pair<double, cplx<Real>>> per_rho;
    double spread = 0;                 // max pairwise relative deviation
    double fit_residual = 0;
    double re_start = 0;
    Precision precision{};
};

// theta(U) = (Y_u - Y_s) e^{iU} fitted as Theta (1 + a/U) over the samples
template <class Real>
cplx<Real> fit_theta(const InnerSolution<Real>& zu, const InnerSolution<Real>& zs, double rho,
                     double* residual, bool mirrored = false) {
    using C = cplx<Real>;
    std::vector<C> th, iU;
    for (size_t i = 0; i < zu.sigma.size(); ++i) {
        for (size_t j = 0; j < zs.sigma.size(); ++j) {
            if (zu.sigma[i] == zs.sigma[j]) {
                C U(Real(zu.sigma[i]), Real(mirrored ? rho : -rho));
                C dcomp = mirrored ? (zu.Z[i][1] - zs.Z[j][1]) : (zu.Z[i][2] - zs.Z[j][2]);
                C phase = mirrored ? exp(C(Real(0), Real(-1)) * U) : exp(C(Real(0), Real(1)) * U);
                th.push_back(dcomp * phase);
                iU.push_back(C(Real(1), Real(0)) / U);
            }
        }
    }
    if (th.size() < 3) throw NumericsError("stokes fit: too few overlap samples");
    // least squares for th = A + B * (1/U): normal equations
    C s11(Real(th.size()), Real(0)), s12(Real(0), Real(0)), s22(Real(0), Real(0));
    C b1(Real(0), Real(0)), b2(Real(0), Real(0));
    for (size_t k = 0; k < th.size(); ++k) {
        s12 += iU[k];
        s22 += iU[k] * iU[k];
        b1 += th[k];
        b2 += th[k] * iU[k];
    }
    C det = s11 * s22 - s12 * s12;
    C A = (b1 * s22 - b2 * s12) / det;
    C B = (s11 * b2 - s12 * b1) / det;
    if (residual) {
        double rs = 0;
        for (size_t k = 0; k < th.size(); ++k)
            rs = std::max(rs, to_double(abs(th[k] - A - B * iU[k])) / to_double(abs(A)));
        *residual = rs;
    }
    return A;
}

template <class Real>
StokesEstimate<Real> stokes_estimate(const std::vector<double>& rhos, double re_start,
                                     const IntegratorConfig<Real>& cfg, double spread_threshold,
                                     bool mirrored = false) {
    if (rhos.empty()) throw std::invalid_argument("stokes: need at least one rho");
    std::vector<double> sigmas;
    for (double s = -4.0; s <= 4.0 + 1e-12; s += 1.0) sigmas.push_back(s);
    StokesEstimate<Real> est;
    est.re_start = re_start;
    est.precision = real_traits<Real>::precision;
    double worst_fit = 0;
    for (double rho : rhos) {
        InnerPath<Real> path;
        path.rho = rho;
        path.re_start = re_start;
        path.cfg = cfg;
        auto zu = solve_inner_branch(InnerBranch::unstable, path, sigmas, mirrored);
        auto zs = solve_inner_branch(InnerBranch::stable, path, sigmas, mirrored);
        double res = 0;
        auto th = fit_theta(zu, zs, rho, &res, mirrored);
        worst_fit = std::max(worst_fit, res);
        est.per_rho.emplace_back(rho, th);
    }
    est.theta = est.per_rho.back().second;
    est.abs_theta = to_double(abs(est.theta));
    est.fit_residual = worst_fit;
    double spread = 0;
    for (size_t i = 0; i < est.per_rho.size(); ++i)
        for (size_t j = i + 1; j < est.per_rho.size(); ++j) {
            double num = to_double(abs(est.per_rho[i].second - est.per_rho[j].second));
            spread = std::max(spread, num / est.abs_theta);
        }
    est.spread = spread;
    if (spread > spread_threshold)
        throw NumericsError("stokes: rho-stability spread exceeds threshold");
    return est;
}

} // namespace l3split
