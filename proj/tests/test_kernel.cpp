#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "l3split/dd.hpp"
#include "l3split/ode.hpp"
#include "l3split/pendulum.hpp"
#include "l3split/quad.hpp"
#include "l3split/real.hpp"
#include "l3split/roots.hpp"

#if L3_HAVE_GMP
#include <gmpxx.h>
#endif

using namespace l3split;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

struct DDCase {
    const char* fn;
    DD x, expect;
};

// reference values computed with mpmath at 60 digits
const DDCase kFnCases[] = {
    {"exp", DD(7.374101693382116, 0.0), DD(1594.159143390768, 3.6842537332215044e-16)},
    {"exp", DD(14.507219355643763, 0.0), DD(1997125.302192775, 5.316219698420189e-11)},
    {"exp", DD(17.7116139339418, 0.0), DD(49210320.90435948, 9.043893476549647e-11)},
    {"exp", DD(26.547017026623017, 0.0), DD(338238473524.54297, 2.625790076570026e-05)},
    {"log", DD(6892.506682481637, 2.824602610448171e-13),
     DD(8.838190112426918, -7.069436836034345e-16)},
    {"log", DD(5717418.026787385, -2.5831725691743637e-10),
     DD(15.559027867528789, -6.931556722917319e-16)},
    {"log", DD(2.911277825917061e-08, 1.1436921113596726e-24),
     DD(-17.352088643716517, 2.676368584360114e-16)},
    {"log", DD(0.28181393886783784, 1.629663446767187e-17),
     DD(-1.26650821705086, 4.15571956338533e-17)},
    {"sin", DD(532.0280603979763, 0.0), DD(-0.8907087477157212, -3.2611856299629625e-17)},
    {"sin", DD(178.76946376430908, 0.0), DD(0.29677859638450216, 2.375158416589831e-18)},
    {"sin", DD(481.08059010074726, 0.0), DD(-0.40494081624560113, 1.7360153151570875e-17)},
    {"sin", DD(-464.1528424162268, 0.0), DD(0.7193529008738031, -2.5157350636216223e-17)},
    {"cos", DD(-37.11714266140348, 0.0), DD(0.8353818701541162, 4.5572740868954464e-17)},
    {"cos", DD(-304.11260085620364, 0.0), DD(-0.8127808617623836, 2.151635374626283e-17)},
    {"cos", DD(52.513031083116516, 0.0), DD(-0.6262643885581083, -3.498375296801288e-18)},
    {"cos", DD(88.72942551372091, 0.0), DD(0.7214992382595551, 2.425325037457372e-18)},
    {"atan", DD(-48.68858104110978, 0.0), DD(-1.5502605173399693, 8.682793273919243e-17)},
    {"atan", DD(-28.327019953615185, 0.0), DD(-1.5355089968195603, 8.010562928961116e-17)},
    {"atan", DD(-22.05176339888897, 0.0), DD(-1.525479526015324, 1.8676634082163792e-17)},
    {"atan", DD(41.63453718085519, 0.0), DD(1.5467824230077205, 4.831883089427094e-17)},
    {"sinh", DD(6.377410839099401, 0.0), DD(294.20028302286335, -1.946003018780686e-14)},
    {"sinh", DD(-8.169498903407082, 0.0), DD(-1765.7867886872261, -8.40610811407958e-14)},
    {"sinh", DD(7.131527794348909, 0.0), DD(625.3928264339611, -2.510533701348799e-14)},
    {"sinh", DD(-8.669581958426324, 0.0), DD(-2911.532192917958, -1.996368584568808e-13)},
    {"cosh", DD(2.8188604911868005, 0.0), DD(8.408709046964878, -2.7283058056020157e-16)},
    {"cosh", DD(-8.959218418793526, 0.0), DD(3889.637539473001, 1.7384681268397258e-13)},
    {"cosh", DD(-11.957403307139169, 0.0), DD(77983.77932083023, -6.738941005560897e-13)},
    {"cosh", DD(8.913713873382768, 0.0), DD(3716.608028169194, -7.692619477121734e-14)},
    {"tanh", DD(-3.4865234100585853, 0.0), DD(-0.9981281649054943, -3.2839098553269704e-17)},
    {"tanh", DD(-3.414225969303213, 0.0), DD(-0.9978372759231606, 1.2437189191367405e-18)},
    {"tanh", DD(5.789053305911104, 0.0), DD(0.9999812622209152, 1.5959668255891736e-17)},
    {"tanh", DD(4.4688931852416225, 0.0), DD(0.9997373716157764, 3.4886200649614186e-18)},
    {"asin", DD(-0.421389664506147, 0.0), DD(-0.43497713371336044, -1.115946006020284e-17)},
    {"asin", DD(0.922955977900167, 0.0), DD(1.1756908682011202, -4.7992731956187715e-17)},
    {"asin", DD(0.07844693774162126, 0.0), DD(0.07852762076446702, -3.1389792297463473e-18)},
    {"asin", DD(0.3556609545011846, 0.0), DD(0.36362116656836335, 1.1031129392843985e-17)},
    {"sqrt", DD(1.246207299285465e-06, 1.4826362070265333e-23),
     DD(0.001116336552875281, -2.409642991629105e-20)},
    {"sqrt", DD(659963659.0788624, -4.373164330456797e-10),
     DD(25689.757863375482, 3.781600337390088e-13)},
    {"sqrt", DD(6498.884552464234, -3.1817941661494983e-13),
     DD(80.61565947422518, 6.5276165778284355e-15)},
    {"sqrt", DD(2144303459.9431782, 4.111454439500815e-08),
     DD(46306.624363509574, -2.929296093309924e-12)},
};

struct Atan2Case {
    DD y, x, expect;
};
const Atan2Case kAtan2Cases[] = {
    {DD(2.362450065458871, 0.0), DD(-1.2072666128767935, 0.0),
     DD(2.0432234971828134, -5.902576842740408e-17)},
    {DD(-0.8328603916656951, 0.0), DD(-2.0042636572215264, 0.0),
     DD(-2.747758228279987, 2.0917138287393134e-16)},
    {DD(-2.125788542755905, 0.0), DD(-2.6091617197459422, 0.0),
     DD(-2.4579282781225738, 2.1083874341238504e-17)},
    {DD(-1.191845395383225, 0.0), DD(0.6186599844459262, 0.0),
     DD(-1.0920035532432084, -7.483823526625569e-17)},
    {DD(-2.9797012837538595, 0.0), DD(1.0676054972861468, 0.0),
     DD(-1.2267529048387404, -5.454926895770027e-17)},
    {DD(-0.9726188302328094, 0.0), DD(-1.1402524103812273, 0.0),
     DD(-2.435367874876127, -1.0368450263847304e-17)},
};

double rel_err(DD got, DD expect) {
    DD diff = got - expect;
    double den = std::fabs(expect.hi);
    if (den == 0) den = 1;
    return std::fabs(diff.hi + diff.lo) / den;
}
} // namespace

TEST_CASE("dd elementary functions against mpmath references") {
    for (const auto& c : kFnCases) {
        DD got;
        std::string fn = c.fn;
        if (fn == "exp") got = exp(c.x);
        else if (fn == "log") got = log(c.x);
        else if (fn == "sin") got = sin(c.x);
        else if (fn == "cos") got = cos(c.x);
        else if (fn == "atan") got = atan(c.x);
        else if (fn == "sinh") got = sinh(c.x);
        else if (fn == "cosh") got = cosh(c.x);
        else if (fn == "tanh") got = tanh(c.x);
        else if (fn == "asin") got = asin(c.x);
        else got = sqrt(c.x);
        INFO(fn << "(" << c.x.hi << ")");
        CHECK(rel_err(got, c.expect) < 1e-29);
    }
    for (const auto& c : kAtan2Cases) {
        CHECK(rel_err(atan2(c.y, c.x), c.expect) < 1e-29);
    }
}

TEST_CASE("two-sum residual reconstructs the exact sum (exact rational oracle)") {
    std::mt19937_64 rng(20240901);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> expo(-30, 30);
#if L3_HAVE_GMP
    for (int i = 0; i < 10000; ++i) {
        double a = std::ldexp(mant(rng), expo(rng));
        double b = std::ldexp(mant(rng), expo(rng));
        DD s = eft::two_sum(a, b);
        mpq_class qa(a), qb(b), qs(s.hi), qe(s.lo);
        REQUIRE(qa + qb == qs + qe);
    }
#else
    // fallback: integer-grid doubles keep everything exactly representable
    for (int i = 0; i < 10000; ++i) {
        double a = std::ldexp(double(rng() >> 11), -20);
        double b = std::ldexp(double(rng() >> 11), -40);
        DD s = eft::two_sum(a, b);
        long double exact = (long double)a + (long double)b;
        REQUIRE((long double)s.hi + (long double)s.lo == exact);
    }
#endif
}

#if L3_HAVE_GMP
TEST_CASE("compensated add/mul relative error below 2^-104") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> mant(0.5, 2.0);
    auto rand_dd = [&]() {
        double hi = mant(rng) * (rng() & 1 ? 1 : -1);
        double lo = mant(rng) * std::ldexp(1.0, -55);
        return eft::two_sum(hi, lo);
    };
    auto q_of = [](DD v) { return mpq_class(v.hi) + mpq_class(v.lo); };
    const mpq_class bound(mpz_class(1), mpz_class(1) << 104);
    double worst_add = 0, worst_mul = 0;
    for (int i = 0; i < 10000; ++i) {
        DD a = rand_dd(), b = rand_dd();
        mpq_class qa = q_of(a), qb = q_of(b);
        mpq_class es = qa + qb, ep = qa * qb;
        mpq_class ds = q_of(a + b) - es, dp = q_of(a * b) - ep;
        if (es != 0) worst_add = std::max(worst_add, std::fabs(mpq_class(ds / es).get_d()));
        if (ep != 0) worst_mul = std::max(worst_mul, std::fabs(mpq_class(dp / ep).get_d()));
    }
    CHECK(worst_add <= bound.get_d());
    CHECK(worst_mul <= 2.0 * bound.get_d());
    MESSAGE("worst add rel err = " << worst_add << ", worst mul rel err = " << worst_mul);
}
#endif

// --------------------------- integrator ---------------------------

namespace {
template <class Real>
void harmonic(Real, const Real* y, Real* dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
}
} // namespace

TEST_CASE("integrate: harmonic oscillator over one period") {
    IntegratorConfig<double> cfg;
    cfg.rel_tol = 1e-12;
    cfg.abs_tol = 1e-14;
    auto res = integrate(harmonic<double>, 0.0, 2 * kPi, {1.0, 0.0}, cfg);
    CHECK(std::fabs(res.y[0] - 1.0) < 1e-10);
    CHECK(std::fabs(res.y[1]) < 1e-10);
}

TEST_CASE("integrate: zero rhs returns the initial state exactly") {
    IntegratorConfig<double> cfg;
    auto rhs = [](double, const double* , double* dy) { dy[0] = 0; dy[1] = 0; dy[2] = 0; };
    auto res = integrate(rhs, 0.0, 7.0, {1.5, -2.25, 3.0}, cfg);
    CHECK(res.y[0] == 1.5);
    CHECK(res.y[1] == -2.25);
    CHECK(res.y[2] == 3.0);
    CHECK(res.t == 7.0);
}

TEST_CASE("integrate: pendulum energy drift below 1e-10 over [0,10]") {
    IntegratorConfig<double> cfg;
    cfg.rel_tol = 1e-12;
    cfg.abs_tol = 1e-14;
    auto rhs = [](double, const double* y, double* dy) { pendulum_rhs<double>(y, dy); };
    double l0 = lambda0<double>();
    auto res = integrate(rhs, 0.0, 10.0, {l0, 0.0}, cfg);
    double H = hamiltonian_pend(PendulumState<double>{res.y[0], res.y[1]});
    CHECK(std::fabs(H + 0.5) < 1e-10);
}

TEST_CASE("integrator order: fixed-step error scales like h^8") {
    // huge tolerances force acceptance, max_step pins the step size
    auto err_at = [&](double h) {
        IntegratorConfig<double> cfg;
        cfg.rel_tol = 1e10;
        cfg.abs_tol = 1e10;
        cfg.max_step = h;
        auto res = integrate(harmonic<double>, 0.0, 2 * kPi, {1.0, 0.0}, cfg);
        return std::hypot(res.y[0] - 1.0, res.y[1]);
    };
    double e1 = err_at(0.4), e2 = err_at(0.2);
    double slope = std::log2(e1 / e2);
    MESSAGE("order study slope = " << slope);
    CHECK(slope > 7.0);
    CHECK(slope < 9.5);
}

TEST_CASE("integrate: time reversal returns the initial state") {
    IntegratorConfig<double> cfg;
    cfg.rel_tol = 1e-12;
    cfg.abs_tol = 1e-14;
    auto rhs = [](double, const double* y, double* dy) { pendulum_rhs<double>(y, dy); };
    std::vector<double> y0{1.0, 0.3};
    auto fwd = integrate(rhs, 0.0, 8.0, y0, cfg);
    auto back = integrate(rhs, 8.0, 0.0, fwd.y, cfg);
    CHECK(std::fabs(back.y[0] - y0[0]) < 1e-11);
    CHECK(std::fabs(back.y[1] - y0[1]) < 1e-11);
}

TEST_CASE("integrate_to_event: sine zero crossing") {
    IntegratorConfig<double> cfg;
    cfg.rel_tol = 1e-12;
    cfg.abs_tol = 1e-14;
    EventSpec<double> ev;
    ev.value = [](double, const double* y) { return y[0]; };
    ev.direction = EventDirection::decreasing;
    ev.root_tol = 1e-13;
    auto res = integrate_to_event(harmonic<double>, 0.0, {0.0, 1.0}, ev, cfg, 10.0);
    CHECK(std::fabs(res.t - kPi) < 1e-10);

    // q - 1 = 0 is a tangency, not a crossing
    EventSpec<double> ev2;
    ev2.value = [](double, const double* y) { return y[0] - 1.0; };
    CHECK_THROWS_AS(integrate_to_event(harmonic<double>, 0.0, {0.0, 1.0}, ev2, cfg, 10.0),
                    NoCrossing);
}

TEST_CASE("integrate_to_event: constant rhs hits y = 3 at t = 3") {
    IntegratorConfig<double> cfg;
    auto rhs = [](double, const double*, double* dy) { dy[0] = 1.0; };
    EventSpec<double> ev;
    ev.value = [](double, const double* y) { return y[0] - 3.0; };
    auto res = integrate_to_event(rhs, 0.0, {0.0}, ev, cfg, 10.0);
    CHECK(std::fabs(res.t - 3.0) < 1e-12);
}

TEST_CASE("integrate_to_event: pendulum crossing agrees with a dense-output bisection oracle") {
    IntegratorConfig<double> cfg;
    cfg.rel_tol = 1e-13;
    cfg.abs_tol = 1e-15;
    auto rhs = [](double, const double* y, double* dy) { pendulum_rhs<double>(y, dy); };
    double l0 = lambda0<double>();
    std::vector<double> y0{l0 - 1e-3, 1e-2};
    double lam_star = 1.3;
    EventSpec<double> ev;
    ev.value = [lam_star](double, const double* y) { return y[0] - lam_star; };
    auto res = integrate_to_event(rhs, 0.0, y0, ev, cfg, 50.0);

    // oracle: dense trajectory + bisection on the stored interpolants
    std::vector<DenseSegment<double>> segs;
    integrate_with_sink(
        rhs, 0.0, res.t + 1.0, y0, cfg,
        [&](const StepRecord<double>& rec) {
            segs.push_back(*rec.dense);
            return true;
        });
    double lo = 0.0, hi = res.t + 1.0;
    auto lam_at = [&](double t) {
        double out[2];
        for (const auto& s : segs)
            if (s.contains(t)) {
                s.eval(t, out);
                return out[0];
            }
        segs.back().eval(t, out);
        return out[0];
    };
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if ((lam_at(mid) - lam_star) * (lam_at(lo) - lam_star) > 0)
            lo = mid;
        else
            hi = mid;
    }
    CHECK(std::fabs(res.t - 0.5 * (lo + hi)) < 1e-9);
}

// --------------------------- quadrature ---------------------------

TEST_CASE("tanh-sinh: inverse square root endpoint") {
    QuadratureSpec<double> spec;
    spec.lower = 0.0;
    spec.upper = 1.0;
    spec.singular_lower = true;
    spec.target_tol = 1e-13;
    auto q = tanh_sinh([](double x) { return 1.0 / std::sqrt(x); }, spec);
    CHECK(std::fabs(q.value - 2.0) < 1e-12);
    CHECK(std::fabs(q.value - 2.0) <= 10.0 * to_double(q.error_estimate) + 1e-15);
}

TEST_CASE("tanh-sinh: smooth integrand gives pi") {
    QuadratureSpec<double> spec;
    spec.lower = 0.0;
    spec.upper = 1.0;
    spec.target_tol = 1e-13;
    auto q = tanh_sinh([](double x) { return 4.0 / (1.0 + x * x); }, spec);
    CHECK(std::fabs(q.value - kPi) < 1e-12);
}

TEST_CASE("tanh-sinh: the splitting-rate integral") {
    auto res = constant_A_x_integral<double>(1e-10);
    CHECK(std::fabs(res.value - 0.177744) < 1e-6);          // paper's quoted value
    CHECK(std::fabs(res.value - 0.17774388586350386) < 1e-9);
    // level-refinement stability
    auto res12 = constant_A_x_integral<double>(1e-10, 14);
    CHECK(std::fabs(res.value - res12.value) < 1e-9);
}

// --------------------------- root finding ---------------------------

TEST_CASE("find_root: sqrt(2) bracket") {
    auto r = find_root_bracketed([](double x) { return x * x - 2.0; }, 1.0, 2.0, 1e-15);
    CHECK(std::fabs(r - std::sqrt(2.0)) < 1e-12);
}

TEST_CASE("find_root: identity through zero") {
    auto r = find_root_bracketed([](double x) { return x; }, -1.0, 1.0, 1e-15);
    CHECK(std::fabs(r) < 1e-14);
}

TEST_CASE("find_root: Kepler equation at e=0.1, M=1") {
    auto f = [](double E) { return E - 0.1 * std::sin(E) - 1.0; };
    auto r = find_root_bracketed(f, 0.0, 2.0, 1e-15);
    // bisection oracle value frozen from a 60-digit computation
    CHECK(std::fabs(r - 1.0885977523978936) < 1e-12);
}

TEST_CASE("dd integration cross-check: harmonic oscillator") {
    IntegratorConfig<DD> cfg;
    cfg.rel_tol = DD(1e-20);
    cfg.abs_tol = DD(1e-24);
    std::vector<DD> y0{DD(1.0), DD(0.0)};
    auto res = integrate(harmonic<DD>, DD(0.0), dd_const::two_pi(), y0, cfg);
    CHECK(std::fabs(to_double(res.y[0] - DD(1.0))) < 1e-17);
    CHECK(std::fabs(to_double(res.y[1])) < 1e-17);
}
