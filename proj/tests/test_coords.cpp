#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "l3split/coords.hpp"

using namespace l3split;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
MuParam<double> mu_of(double mu) { return MuParam<double>{mu, std::sqrt(std::sqrt(mu))}; }

// near-circular random Poincare state of amplitude a
PoincareState<double> random_poincare(std::mt19937_64& rng, double a) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PoincareState<double> ps;
    ps.lambda = u(rng) * 3.0;
    ps.L = 1.0 + a * u(rng);
    double re = a * u(rng), im = a * u(rng);
    ps.eta = {re, im};
    ps.xi = conj(ps.eta);
    return ps;
}
} // namespace

TEST_CASE("polar <-> cartesian substitution examples") {
    auto c1 = polar_to_cart(PolarState<double>{1.0, kPi / 2, 0.0, 1.0});
    CHECK(std::fabs(c1.q1) < 1e-16);
    CHECK(c1.q2 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c1.p1 == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(std::fabs(c1.p2) < 1e-15);

    auto c2 = polar_to_cart(PolarState<double>{2.0, 0.0, 1.0, 3.0});
    CHECK(c2.q1 == doctest::Approx(2.0));
    CHECK(std::fabs(c2.q2) < 1e-16);
    CHECK(c2.p1 == doctest::Approx(1.0));
    CHECK(c2.p2 == doctest::Approx(1.5));
}

TEST_CASE("polar round trip on random states") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 1000; ++i) {
        CartesianState<double> s{u(rng), u(rng), u(rng), u(rng)};
        if (std::hypot(s.q1, s.q2) < 1e-3) continue;
        auto back = polar_to_cart(cart_to_polar(s));
        CHECK(std::fabs(back.q1 - s.q1) < 1e-13);
        CHECK(std::fabs(back.q2 - s.q2) < 1e-13);
        CHECK(std::fabs(back.p1 - s.p1) < 1e-13);
        CHECK(std::fabs(back.p2 - s.p2) < 1e-13);
    }
}

TEST_CASE("poincare: circular orbit maps to L=1, eta=0, lambda=theta") {
    for (double th : {0.3, -1.2, 2.9}) {
        auto ps = polar_to_poincare(PolarState<double>{1.0, th, 0.0, 1.0});
        CHECK(ps.L == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(abs(ps.eta) < 1e-12);
        CHECK(ps.lambda == doctest::Approx(th).epsilon(1e-13));
    }
}

TEST_CASE("poincare: G = L - eta xi holds exactly") {
    // direct: eta = xi = 0, L = 1.1 -> G = 1.1
    auto pol = poincare_to_polar(PoincareState<double>{0.7, 1.1, {0, 0}, {0, 0}});
    CHECK(pol.G == doctest::Approx(1.1).epsilon(1e-15));

    std::mt19937_64 rng(22);
    for (int i = 0; i < 300; ++i) {
        auto ps = random_poincare(rng, 0.05);
        auto pol2 = poincare_to_polar(ps);
        auto ps2 = polar_to_poincare(pol2);
        double lhs = pol2.G;
        double rhs = ps2.L - (ps2.eta * ps2.xi).re;
        CHECK(std::fabs(lhs - rhs) < 1e-13);
    }
}

TEST_CASE("poincare round trip") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 500; ++i) {
        auto ps = random_poincare(rng, 0.08);
        auto back = polar_to_poincare(poincare_to_polar(ps));
        CHECK(std::fabs(normalize_angle(back.lambda - ps.lambda)) < 1e-12);
        CHECK(std::fabs(back.L - ps.L) < 1e-12);
        CHECK(std::fabs(back.eta.re - ps.eta.re) < 1e-12);
        CHECK(std::fabs(back.eta.im - ps.eta.im) < 1e-12);
    }
}

TEST_CASE("first-order series of the polar coordinates in Poincare elements") {
    // residual of the linear expansion is quadratic in the amplitude
    std::mt19937_64 rng(24);
    auto max_residual = [&](double a) {
        double worst = 0;
        for (int i = 0; i < 100; ++i) {
            auto ps = random_poincare(rng, a);
            auto pol = poincare_to_polar(ps);
            double dL = ps.L - 1.0;
            cplxd em = cis(-ps.lambda), ep = cis(ps.lambda);
            double s2 = std::sqrt(2.0);
            double r1 = 1.0 + 2 * dL - ((em * ps.eta + ep * ps.xi) / s2).re;
            double th1 = ps.lambda + (cplxd(0, s2) * (em * ps.eta - ep * ps.xi)).re;
            double R1 = ((cplxd(0, 1.0 / s2)) * (em * ps.eta - ep * ps.xi)).re;
            worst = std::max({worst, std::fabs(pol.r - r1),
                              std::fabs(normalize_angle(pol.theta - th1)),
                              std::fabs(pol.R - R1)});
        }
        return worst;
    };
    double a = 1e-4;
    CHECK(max_residual(a) <= 10 * a * a);
    double r1 = max_residual(2e-3), r2 = max_residual(1e-3);
    double ratio = r1 / r2;
    MESSAGE("quadratic-residual halving ratio = " << ratio);
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.0);
}

TEST_CASE("kepler solver") {
    CHECK(kepler_solve(0.0, 0.7) == 0.0);
    CHECK(kepler_solve(1.3, 0.0) == doctest::Approx(1.3).epsilon(1e-15));
    double E = kepler_solve(1.0, 0.1);
    CHECK(std::fabs(E - 0.1 * std::sin(E) - 1.0) < 1e-13);
    CHECK(E == doctest::Approx(1.0885977523978936).epsilon(1e-12));
    CHECK_THROWS_AS(kepler_solve(1.0, 1.2), DomainError);
}

TEST_CASE("scaling map") {
    PoincareState<double> ps{0.4, 1.02, {0.01, -0.02}, {0.01, 0.02}};
    auto ss = scale(ps, 0.1);
    CHECK(ss.Lambda == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(ss.x.re == doctest::Approx(0.1).epsilon(1e-13));
    auto back = unscale(ss);
    CHECK(std::fabs(back.L - ps.L) < 1e-15);
    CHECK(std::fabs(back.eta.re - ps.eta.re) < 1e-15);
    CHECK(std::fabs(back.eta.im - ps.eta.im) < 1e-15);

    // Lambda = x = y = 0 -> L = 1 for any delta
    auto id = unscale(ScaledState<double>{0.2, 0.0, {0, 0}, {0, 0}, 0.37});
    CHECK(id.L == 1.0);
}

TEST_CASE("equilibrium shift: L3 maps to the origin and scales as (2,3,3)") {
    std::vector<double> mus{1e-2, 1e-3, 1e-4};
    std::vector<double> lam_c, x_c;
    for (double mu : mus) {
        auto m = mu_of(mu);
        auto shift = EquiShift<double>::make(m);
        auto zero = shift.shift(l3_scaled(m));
        CHECK(std::fabs(zero.lambda) < 1e-11);
        CHECK(std::fabs(zero.Lambda) < 1e-11);
        CHECK(abs(zero.x) < 1e-11);
        lam_c.push_back(std::fabs(shift.l3.Lambda));
        x_c.push_back(abs(shift.l3.x));
        // shift then unshift is the identity
        ScaledState<double> s{0.3, 0.5, {0.01, 0.02}, {0.01, -0.02}, m.delta};
        auto rt = shift.unshift(shift.shift(s));
        CHECK(std::fabs(rt.lambda - s.lambda) < 1e-15);
        CHECK(std::fabs(rt.Lambda - s.Lambda) < 1e-15);
    }
    // fitted log-log slopes of the L3 components vs delta: Lambda ~ d^2, x ~ d^3
    auto slope = [&](const std::vector<double>& v) {
        double d0 = std::log(std::pow(mus[0], 0.25)), d2 = std::log(std::pow(mus[2], 0.25));
        return (std::log(v[0]) - std::log(v[2])) / (d0 - d2);
    };
    CHECK(std::fabs(slope(lam_c) - 2.0) < 0.3);
    CHECK(std::fabs(slope(x_c) - 3.0) < 0.3);
}

TEST_CASE("separatrix coordinates: w = 0 on the separatrix, round trip") {
    const auto& handle = separatrix_handle();
    double l0 = to_double(lambda0<double>());
    for (double u : {0.4, 1.0, 2.5}) {
        auto sep = handle.eval(u);
        ScaledState<double> on{sep.lambda_h, sep.Lambda_h, {0, 0}, {0, 0}, 0.1};
        auto sc = to_separatrix_coords(on, handle, true);
        CHECK(std::fabs(sc.u - u) < 1e-10);
        CHECK(std::fabs(sc.w) < 1e-10);
    }
    std::mt19937_64 rng(25);
    std::uniform_real_distribution<double> ul(0.5, l0 - 0.1);
    std::uniform_real_distribution<double> uw(-0.2, 0.2);
    for (int i = 0; i < 200; ++i) {
        double lam = ul(rng);
        bool stable = rng() & 1;
        double u = handle.invert(lam, stable);
        auto sep = handle.eval(u);
        ScaledState<double> s{sep.lambda_h, sep.Lambda_h - uw(rng), {0.01, 0.0}, {0.01, 0.0}, 0.1};
        auto sc = to_separatrix_coords(s, handle, stable);
        auto back = from_separatrix_coords(sc, handle, 0.1);
        CHECK(std::fabs(back.lambda - s.lambda) < 1e-11);
        CHECK(std::fabs(back.Lambda - s.Lambda) < 1e-11);
    }
    // the chart degenerates at u = 0
    auto sep = handle.eval(5e-4);
    ScaledState<double> close{sep.lambda_h, sep.Lambda_h, {0, 0}, {0, 0}, 0.1};
    CHECK_THROWS_AS(to_separatrix_coords(close, handle, true), DomainError);
}

TEST_CASE("symplecticity of the polar and Poincare maps") {
    // 4th-order finite-difference Jacobians; Omega blocks in the orderings
    // (q1,q2,p1,p2), (r,theta,R,G), (lambda,L,Re eta,Im eta) with the
    // i-weighted pair contributing 2 da/\db
    auto d4 = [](auto&& f, int j, std::array<double, 4> x, double h) {
        auto at = [&](double d) {
            auto xx = x;
            xx[j] += d;
            return f(xx);
        };
        std::array<double, 4> out;
        auto fp = at(h), fm = at(-h), fp2 = at(2 * h), fm2 = at(-2 * h);
        for (int i = 0; i < 4; ++i)
            out[i] = (fm2[i] - 8 * fm[i] + 8 * fp[i] - fp2[i]) / (12 * h);
        return out;
    };
    auto check_form = [&](auto&& f, std::array<double, 4> x,
                          const std::array<std::array<double, 4>, 4>& Wy,
                          const std::array<std::array<double, 4>, 4>& Wx, double tol) {
        std::array<std::array<double, 4>, 4> J{};
        for (int j = 0; j < 4; ++j) {
            auto col = d4(f, j, x, 1e-5);
            for (int i = 0; i < 4; ++i) J[i][j] = col[i];
        }
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                double s = 0;
                for (int i = 0; i < 4; ++i)
                    for (int k = 0; k < 4; ++k) s += J[i][a] * Wy[i][k] * J[k][b];
                CHECK(std::fabs(s - Wx[a][b]) < tol);
            }
    };
    std::array<std::array<double, 4>, 4> Wc{{{0, 0, 1, 0}, {0, 0, 0, 1}, {-1, 0, 0, 0}, {0, -1, 0, 0}}};
    std::array<std::array<double, 4>, 4> Wp{{{0, 1, 0, 0}, {-1, 0, 0, 0}, {0, 0, 0, 2}, {0, 0, -2, 0}}};

    std::mt19937_64 rng(26);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        // cartesian -> polar preserves dq/\dp = dr/\dR + dtheta/\dG
        std::array<double, 4> x{1.0 + 0.5 * u(rng), 0.5 * u(rng), 0.3 * u(rng),
                                1.0 + 0.3 * u(rng)};
        auto cart_map = [](std::array<double, 4> v) {
            auto p = cart_to_polar(CartesianState<double>{v[0], v[1], v[2], v[3]});
            return std::array<double, 4>{p.r, p.theta, p.R, p.G};
        };
        check_form(cart_map, x, Wc, Wc, 1e-10);
    }
    for (int i = 0; i < 100; ++i) {
        // poincare -> polar: dlambda/\dL + 2 da/\db pulls back the polar form
        std::array<double, 4> x{u(rng), 1.0 + 0.05 * u(rng), 0.05 * u(rng), 0.05 * u(rng)};
        auto poi_map = [](std::array<double, 4> v) {
            PoincareState<double> ps{v[0], v[1], {v[2], v[3]}, {v[2], -v[3]}};
            auto p = poincare_to_polar(ps);
            return std::array<double, 4>{p.r, p.theta, p.R, p.G};
        };
        check_form(poi_map, x, Wc, Wp, 1e-9);
    }
}
