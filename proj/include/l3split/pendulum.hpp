// The averaged slow system: potential V, pendulum Hamiltonian
// H_pend = -(3/2) Lambda^2 + V(lambda), its separatrix through the turning
// point (lambda0, 0) on the level H_pend = -1/2, and the singularity
// constant A by two independent quadrature routes.
#pragma once

#include <string>
#include <vector>

#include "l3split/errors.hpp"
#include "l3split/ode.hpp"
#include "l3split/quad.hpp"
#include "l3split/real.hpp"
#include "l3split/roots.hpp"

namespace l3split {

template <class Real>
struct PendulumState {
    Real lambda{}, Lambda{};
};

// V(lambda) = 1 - cos(lambda) - 1/sqrt(2 + 2 cos(lambda));
// 2 + 2 cos(lambda) = 4 cos^2(lambda/2) keeps the collision factor stable
template <class Real>
Real potential_V(Real lambda) {
    Real c2 = cos(lambda * Real(0.5));
    if (to_double(fabs(c2)) < 1e-15) throw CollisionError("V(lambda): collision at lambda = pi");
    return Real(1) - cos(lambda) - Real(0.5) / fabs(c2);
}

template <class Real>
Real potential_V_prime(Real lambda) {
    Real c2 = cos(lambda * Real(0.5));
    if (to_double(fabs(c2)) < 1e-15) throw CollisionError("V'(lambda): collision at lambda = pi");
    // d/dlambda [ -(1/2)|cos(lambda/2)|^{-1} ] = -(1/4) sgn(c2) sin(lambda/2) / c2^2
    Real s2 = sin(lambda * Real(0.5));
    Real sgn = to_double(c2) >= 0 ? Real(1) : Real(-1);
    return sin(lambda) - sgn * s2 / (Real(4) * c2 * c2);
}

template <class Real>
Real potential_V_second(Real lambda) {
    Real c2 = cos(lambda * Real(0.5));
    if (to_double(fabs(c2)) < 1e-15) throw CollisionError("V''(lambda): collision at lambda = pi");
    Real sgn = to_double(c2) >= 0 ? Real(1) : Real(-1);
    Real s2 = sin(lambda * Real(0.5));
    // collision term contributes -sgn (c2^2/8 + s2^2/4)/c2^3
    Real term = (Real(0.125) * c2 * c2 + Real(0.25) * s2 * s2) / (c2 * c2 * c2);
    return cos(lambda) - sgn * term;
}

template <class Real>
Real hamiltonian_pend(const PendulumState<Real>& s) {
    return Real(-1.5) * s.Lambda * s.Lambda + potential_V(s.lambda);
}

// canonical equations: lambda' = -3 Lambda, Lambda' = -V'(lambda)
template <class Real>
void pendulum_rhs(const Real* y, Real* dy) {
    dy[0] = Real(-3) * y[1];
    dy[1] = -potential_V_prime(y[0]);
}

// turning point: lambda0 = arccos(1/2 - sqrt(2)), where V(lambda0) = -1/2
template <class Real>
Real lambda0() {
    return acos(Real(0.5) - sqrt(Real(2)));
}

// saddle rate nu = sqrt(3 V''(0)) = sqrt(21/8)
template <class Real>
Real saddle_rate() {
    return sqrt(Real(3) * potential_V_second(Real(0)));
}

template <class Real>
struct SeparatrixSample {
    Real t{}, lambda_h{}, Lambda_h{};
};

// Lambda on the separatrix as a function of lambda (stable side, Lambda >= 0)
template <class Real>
Real separatrix_Lambda_of_lambda(Real lambda) {
    Real v = potential_V(lambda) + Real(0.5);
    if (to_double(v) < 0.0) v = Real(0);
    return sqrt(Real(2) / Real(3) * v);
}

// Dense table of the separatrix sigma(t) = (lambda_h, Lambda_h) built from a
// single high-accuracy integration on t in [0, t_max] and mirrored by the
// time-reversal symmetry lambda_h(-t) = lambda_h(t), Lambda_h(-t) = -Lambda_h(t).
// Hermite interpolation uses the exact derivatives from the vector field.
class SeparatrixHandle {
  public:
    explicit SeparatrixHandle(double t_max = 25.0, double dt = 1e-3, double rel_tol = 1e-13) {
        t_max_ = t_max;
        dt_ = dt;
        size_t n = static_cast<size_t>(std::llround(t_max / dt)) + 1;
        lam_.resize(n);
        Lam_.resize(n);
        IntegratorConfig<double> cfg;
        cfg.rel_tol = rel_tol;
        cfg.abs_tol = 1e-16;
        auto rhs = [](double, const double* y, double* dy) { pendulum_rhs<double>(y, dy); };
        std::vector<double> y{to_double(lambda0<double>()), 0.0};
        lam_[0] = y[0];
        Lam_[0] = y[1];
        Dop853<double, decltype(rhs)> st(rhs, cfg);
        st.init(0.0, y);
        size_t idx = 1;
        while (idx < n && st.step(t_max, true)) {
            const auto& seg = st.dense();
            while (idx < n && idx * dt_ <= to_double(seg.t1) + 1e-300) {
                double tt = idx * dt_;
                if (tt > to_double(seg.t1)) break;
                double out[2];
                seg.eval(tt, out);
                lam_[idx] = out[0];
                Lam_[idx] = out[1];
                ++idx;
            }
        }
        if (idx < n) throw NumericsError("separatrix table construction fell short");
        nu_ = to_double(saddle_rate<double>());
        // asymptotic tail lambda_h ~ c e^{-nu t} fitted where the table is
        // still well above roundoff
        double t_fit = 15.0;
        tail_c_ = eval(t_fit).lambda_h * std::exp(nu_ * t_fit);
    }

    double t_max() const { return t_max_; }
    double nu() const { return nu_; }

    SeparatrixSample<double> eval(double t) const {
        double at = std::fabs(t);
        double sgn = t >= 0 ? 1.0 : -1.0;
        SeparatrixSample<double> s;
        s.t = t;
        if (at >= t_max_) {
            double lam = tail_c_ * std::exp(-nu_ * at);
            s.lambda_h = lam;
            s.Lambda_h = sgn * (nu_ / 3.0) * lam;
            return s;
        }
        size_t i = static_cast<size_t>(at / dt_);
        if (i + 1 >= lam_.size()) i = lam_.size() - 2;
        double u = (at - i * dt_) / dt_;
        auto hermite = [&](double y0, double y1, double d0, double d1) {
            double u2 = u * u, u3 = u2 * u;
            return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * dt_ * d0 +
                   (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * dt_ * d1;
        };
        double dl0 = -3.0 * Lam_[i], dl1 = -3.0 * Lam_[i + 1];
        double dL0 = -to_double(potential_V_prime(lam_[i]));
        double dL1 = -to_double(potential_V_prime(lam_[i + 1]));
        s.lambda_h = hermite(lam_[i], lam_[i + 1], dl0, dl1);
        s.Lambda_h = sgn * hermite(Lam_[i], Lam_[i + 1], dL0, dL1);
        return s;
    }

    // invert lambda_h(u) = lambda on the chosen half-branch (u > 0: stable
    // side, u < 0: unstable side); lambda_h is monotone on each half
    double invert(double lambda, bool stable_side) const {
        double l0 = to_double(lambda0<double>());
        if (!(lambda > 0.0) || lambda > l0)
            throw DomainError("separatrix inversion: lambda outside (0, lambda0]");
        double lo = 0.0, hi = t_max_;
        if (lambda <= eval(t_max_).lambda_h)
            throw DomainError("separatrix inversion: lambda below the table floor");
        // bisection on |t|, then Newton polish with dlambda/dt = -3 Lambda
        for (int it = 0; it < 64 && hi - lo > 1e-14 * t_max_; ++it) {
            double mid = 0.5 * (lo + hi);
            (eval(mid).lambda_h > lambda ? lo : hi) = mid;
        }
        double t = 0.5 * (lo + hi);
        for (int it = 0; it < 4; ++it) {
            auto s = eval(t);
            double d = -3.0 * s.Lambda_h;
            if (d == 0.0) break;
            t -= (s.lambda_h - lambda) / d;
            if (t < 0) t = 0;
        }
        return stable_side ? t : -t;
    }

  private:
    double t_max_{}, dt_{}, nu_{}, tail_c_{};
    std::vector<double> lam_, Lam_;
};

inline const SeparatrixHandle& separatrix_handle() {
    static SeparatrixHandle handle;
    return handle;
}

enum class ConstantAMethod { x_integral, lambda_integral };

template <class Real>
struct ConstantAResult {
    Real value{};
    ConstantAMethod method{};
    Real error_estimate{};
};

// A = int_0^{(sqrt2-1)/2} 2/(1-x) sqrt( x / (3 (x+1)(1-4x-4x^2)) ) dx;
// integrable singularities at both endpoints (sqrt(x) and 1/sqrt at the
// positive root of 1-4x-4x^2)
template <class Real>
ConstantAResult<Real> constant_A_x_integral(Real tol, int max_levels = 12) {
    QuadratureSpec<Real> spec;
    spec.lower = Real(0);
    spec.upper = (sqrt(Real(2)) - Real(1)) * Real(0.5);
    spec.singular_lower = true;
    spec.singular_upper = true;
    spec.target_tol = tol;
    spec.max_levels = max_levels;
    Real b = spec.upper;
    auto f = [b](Real x) {
        // 1 - 4x - 4x^2 = 4 (b - x)(x + b + 1) with b = (sqrt2-1)/2
        Real quad = Real(4) * (b - x) * (x + b + Real(1));
        return Real(2) / (Real(1) - x) * sqrt(x / (Real(3) * (x + Real(1)) * quad));
    };
    auto q = tanh_sinh(f, spec);
    return {q.value, ConstantAMethod::x_integral, q.error_estimate};
}

// independent route: on the imaginary-time continuation of the separatrix,
// energy conservation gives A = int_{lambda0}^{pi} dl / (3 s(l)) with
// s(l) = sqrt(-(2/3)(V(l) + 1/2)); substitution l = pi - u puts the
// sqrt-singularity at the upper endpoint and the vanishing integrand at 0
template <class Real>
ConstantAResult<Real> constant_A_lambda_integral(Real tol, int max_levels = 12) {
    QuadratureSpec<Real> spec;
    spec.lower = Real(0);
    spec.upper = real_traits<Real>::pi() - lambda0<Real>();
    spec.singular_lower = false;
    spec.singular_upper = true;
    spec.target_tol = tol;
    spec.max_levels = max_levels;
    auto f = [](Real u) {
        // V(pi - u) + 1/2 = 3/2 + cos u - 1/(2 sin(u/2)); negative on (0, pi-lambda0)
        Real s2 = sin(u * Real(0.5));
        Real vph = Real(1.5) + cos(u) - Real(0.5) / s2;
        Real arg = Real(-2) / Real(3) * vph;
        return Real(1) / (Real(3) * sqrt(arg));
    };
    auto q = tanh_sinh(f, spec);
    return {q.value, ConstantAMethod::lambda_integral, q.error_estimate};
}

// F_pend(z) = (-1/(2(1+z)^2) - (1+z)) + 3/2 + (3/2) z^2  (cubic-order small)
template <class Real>
Real f_pend(Real z) {
    Real w = Real(1) + z;
    return (Real(-0.5) / (w * w) - w) + Real(1.5) + Real(1.5) * z * z;
}

} // namespace l3split
