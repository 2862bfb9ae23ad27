// Adaptive Dormand-Prince 8(5,3) integrator with 7th-order dense output
// (Hairer's DOP853 pair), templated on the working scalar.  Event location
// brackets a root on the dense interpolant, then re-integrates from the
// step start to the refined time so event states carry the full working
// precision rather than the interpolant's double-precision floor.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "l3split/errors.hpp"
#include "l3split/real.hpp"

namespace l3split {

template <class Real>
struct IntegratorConfig {
    Real rel_tol = Real(1e-12);
    Real abs_tol = Real(1e-14);
    double max_step = 1e100;
    int method_order = 8;   // kept for reporting; the pair is fixed
    bool dense_output = false;
    long max_steps = 20'000'000;

    void validate() const {
        if (!(to_double(rel_tol) > 0) || !(to_double(abs_tol) > 0))
            throw std::invalid_argument("tolerances must be positive");
        if (!(max_step > 0)) throw std::invalid_argument("max_step must be positive");
        if (method_order < 5) throw std::invalid_argument("method_order must be >= 5");
    }
};

namespace dop853 {

// Hairer/Norsett/Wanner DOP853 coefficients.
inline constexpr double c2 = 0.526001519587677318785587544488e-01;
inline constexpr double c3 = 0.789002279381515978178381316732e-01;
inline constexpr double c4 = 0.118350341907227396726757197510e+00;
inline constexpr double c5 = 0.281649658092772603273242802490e+00;
inline constexpr double c6 = 0.333333333333333333333333333333e+00;
inline constexpr double c7 = 0.25e+00;
inline constexpr double c8 = 0.307692307692307692307692307692e+00;
inline constexpr double c9 = 0.651282051282051282051282051282e+00;
inline constexpr double c10 = 0.6e+00;
inline constexpr double c11 = 0.857142857142857142857142857142e+00;
inline constexpr double c14 = 0.1e+00;
inline constexpr double c15 = 0.2e+00;
inline constexpr double c16 = 0.777777777777777777777777777778e+00;

inline constexpr double a21 = 5.26001519587677318785587544488e-2;
inline constexpr double a31 = 1.97250569845378994544595329183e-2;
inline constexpr double a32 = 5.91751709536136983633785987549e-2;
inline constexpr double a41 = 2.95875854768068491816892993775e-2;
inline constexpr double a43 = 8.87627564304205475450678981324e-2;
inline constexpr double a51 = 2.41365134159266685502369798665e-1;
inline constexpr double a53 = -8.84549479328286085344864962717e-1;
inline constexpr double a54 = 9.24834003261792003115737966543e-1;
inline constexpr double a61 = 3.7037037037037037037037037037e-2;
inline constexpr double a64 = 1.70828608729473871279604482173e-1;
inline constexpr double a65 = 1.25467687566822425016691814123e-1;
inline constexpr double a71 = 3.7109375e-2;
inline constexpr double a74 = 1.70252211019544039314978060272e-1;
inline constexpr double a75 = 6.02165389804559606850219397283e-2;
inline constexpr double a76 = -1.7578125e-2;
inline constexpr double a81 = 3.70920001185047927108779319836e-2;
inline constexpr double a84 = 1.70383925712239993810214054705e-1;
inline constexpr double a85 = 1.07262030446373284651809199168e-1;
inline constexpr double a86 = -1.53194377486244017527936158236e-2;
inline constexpr double a87 = 8.27378916381402288758473766002e-3;
inline constexpr double a91 = 6.24110958716075717114429577812e-1;
inline constexpr double a94 = -3.36089262944694129406857109825e0;
inline constexpr double a95 = -8.68219346841726006818189891453e-1;
inline constexpr double a96 = 2.75920996994467083049415600797e1;
inline constexpr double a97 = 2.01540675504778934086186788979e1;
inline constexpr double a98 = -4.34898841810699588477366255144e1;
inline constexpr double a101 = 4.77662536438264365890433908527e-1;
inline constexpr double a104 = -2.48811461997166764192642586468e0;
inline constexpr double a105 = -5.90290826836842996371446475743e-1;
inline constexpr double a106 = 2.12300514481811942347288949897e1;
inline constexpr double a107 = 1.52792336328824235832596922938e1;
inline constexpr double a108 = -3.32882109689848629194453265587e1;
inline constexpr double a109 = -2.03312017085086261358222928593e-2;
inline constexpr double a111 = -9.3714243008598732571704021658e-1;
inline constexpr double a114 = 5.18637242884406370830023853209e0;
inline constexpr double a115 = 1.09143734899672957818500254654e0;
inline constexpr double a116 = -8.14978701074692612513997267357e0;
inline constexpr double a117 = -1.85200656599969598641566180701e1;
inline constexpr double a118 = 2.27394870993505042818970056734e1;
inline constexpr double a119 = 2.49360555267965238987089396762e0;
inline constexpr double a1110 = -3.0467644718982195003823669022e0;
inline constexpr double a121 = 2.27331014751653820792359768449e0;
inline constexpr double a124 = -1.05344954667372501984066689879e1;
inline constexpr double a125 = -2.00087205822486249909675718444e0;
inline constexpr double a126 = -1.79589318631187989172765950534e1;
inline constexpr double a127 = 2.79488845294199600508499808837e1;
inline constexpr double a128 = -2.85899827713502369474065508674e0;
inline constexpr double a129 = -8.87285693353062954433549289258e0;
inline constexpr double a1210 = 1.23605671757943030647266201528e1;
inline constexpr double a1211 = 6.43392746015763530355970484046e-1;

inline constexpr double a141 = 5.61675022830479523392909219681e-2;
inline constexpr double a147 = 2.53500210216624811088794765333e-1;
inline constexpr double a148 = -2.46239037470802489917441475441e-1;
inline constexpr double a149 = -1.24191423263816360469010140626e-1;
inline constexpr double a1410 = 1.5329179827876569731206322685e-1;
inline constexpr double a1411 = 8.20105229563468988491666602057e-3;
inline constexpr double a1412 = 7.56789766054569976138603589584e-3;
inline constexpr double a1413 = -8.298e-3;
inline constexpr double a151 = 3.18346481635021405060768473261e-2;
inline constexpr double a156 = 2.83009096723667755288322961402e-2;
inline constexpr double a157 = 5.35419883074385676223797384372e-2;
inline constexpr double a158 = -5.49237485713909884646569340306e-2;
inline constexpr double a1511 = -1.08347328697249322858509316994e-4;
inline constexpr double a1512 = 3.82571090835658412954920192323e-4;
inline constexpr double a1513 = -3.40465008687404560802977114492e-4;
inline constexpr double a1514 = 1.41312443674632500278074618366e-1;
inline constexpr double a161 = -4.28896301583791923408573538692e-1;
inline constexpr double a166 = -4.69762141536116384314449447206e0;
inline constexpr double a167 = 7.68342119606259904184240953878e0;
inline constexpr double a168 = 4.06898981839711007970213554331e0;
inline constexpr double a169 = 3.56727187455281109270669543021e-1;
inline constexpr double a1613 = -1.39902416515901462129418009734e-3;
inline constexpr double a1614 = 2.9475147891527723389556272149e0;
inline constexpr double a1615 = -9.15095847217987001081870187138e0;

inline constexpr double b1 = 5.42937341165687622380535766363e-2;
inline constexpr double b6 = 4.45031289275240888144113950566e0;
inline constexpr double b7 = 1.89151789931450038304281599044e0;
inline constexpr double b8 = -5.8012039600105847814672114227e0;
inline constexpr double b9 = 3.1116436695781989440891606237e-1;
inline constexpr double b10 = -1.52160949662516078556178806805e-1;
inline constexpr double b11 = 2.01365400804030348374776537501e-1;
inline constexpr double b12 = 4.47106157277725905176885569043e-2;

inline constexpr double bhh1 = 0.244094488188976377952755905512e+00;
inline constexpr double bhh2 = 0.733846688281611857341361741547e+00;
inline constexpr double bhh3 = 0.220588235294117647058823529412e-01;

inline constexpr double er1 = 0.1312004499419488073250102996e-01;
inline constexpr double er6 = -0.1225156446376204440720569753e+01;
inline constexpr double er7 = -0.4957589496572501915214079952e+00;
inline constexpr double er8 = 0.1664377182454986536961530415e+01;
inline constexpr double er9 = -0.3503288487499736816886487290e+00;
inline constexpr double er10 = 0.3341791187130174790297318841e+00;
inline constexpr double er11 = 0.8192320648511571246570742613e-01;
inline constexpr double er12 = -0.2235530786388629525884427845e-01;

inline constexpr double d41 = -0.84289382761090128651353491142e+01;
inline constexpr double d46 = 0.56671495351937776962531783590e+00;
inline constexpr double d47 = -0.30689499459498916912797304727e+01;
inline constexpr double d48 = 0.23846676565120698287728149680e+01;
inline constexpr double d49 = 0.21170345824450282767155149946e+01;
inline constexpr double d410 = -0.87139158377797299206789907490e+00;
inline constexpr double d411 = 0.22404374302607882758541771650e+01;
inline constexpr double d412 = 0.63157877876946881815570249290e+00;
inline constexpr double d413 = -0.88990336451333310820698117400e-01;
inline constexpr double d414 = 0.18148505520854727256656404962e+02;
inline constexpr double d415 = -0.91946323924783554000451984436e+01;
inline constexpr double d416 = -0.44360363875948939664310572000e+01;
inline constexpr double d51 = 0.10427508642579134603413151009e+02;
inline constexpr double d56 = 0.24228349177525818288430175319e+03;
inline constexpr double d57 = 0.16520045171727028198505394887e+03;
inline constexpr double d58 = -0.37454675472269020279518312152e+03;
inline constexpr double d59 = -0.22113666853125306036270938578e+02;
inline constexpr double d510 = 0.77334326684722638389603898808e+01;
inline constexpr double d511 = -0.30674084731089398182061213626e+02;
inline constexpr double d512 = -0.93321305264302278729567221706e+01;
inline constexpr double d513 = 0.15697238121770843886131091075e+02;
inline constexpr double d514 = -0.31139403219565177677282850411e+02;
inline constexpr double d515 = -0.93529243588444783865713862664e+01;
inline constexpr double d516 = 0.35816841486394083752465898540e+02;
inline constexpr double d61 = 0.19985053242002433820987653617e+02;
inline constexpr double d66 = -0.38703730874935176555105901742e+03;
inline constexpr double d67 = -0.18917813819516756882830838328e+03;
inline constexpr double d68 = 0.52780815920542364900561016686e+03;
inline constexpr double d69 = -0.11573902539959630126141871134e+02;
inline constexpr double d610 = 0.68812326946963000169666922661e+01;
inline constexpr double d611 = -0.10006050966910838403183860980e+01;
inline constexpr double d612 = 0.77771377980534432092869265740e+00;
inline constexpr double d613 = -0.27782057523535084065932004339e+01;
inline constexpr double d614 = -0.60196695231264120758267380846e+02;
inline constexpr double d615 = 0.84320405506677161018159903784e+02;
inline constexpr double d616 = 0.11992291136182789328035130030e+02;
inline constexpr double d71 = -0.25693933462703749003312586129e+02;
inline constexpr double d76 = -0.15418974869023643374053993627e+03;
inline constexpr double d77 = -0.23152937917604549567536039109e+03;
inline constexpr double d78 = 0.35763911791061412378285349910e+03;
inline constexpr double d79 = 0.93405324183624310003907691704e+02;
inline constexpr double d710 = -0.37458323136451633156875139351e+02;
inline constexpr double d711 = 0.10409964950896230045147246184e+03;
inline constexpr double d712 = 0.29840293426660503123344363579e+02;
inline constexpr double d713 = -0.43533456590011143754432175058e+02;
inline constexpr double d714 = 0.96324553959188282948394950600e+02;
inline constexpr double d715 = -0.39177261675615439165231486172e+02;
inline constexpr double d716 = -0.14972683625798562581422125276e+03;

} // namespace dop853

// dense-output polynomial of one accepted step
template <class Real>
struct DenseSegment {
    Real t0{}, t1{};
    double h = 0;
    std::array<std::vector<Real>, 8> r;

    size_t dim() const { return r[0].size(); }
    bool contains(Real t) const {
        return to_double((t - t0)) * (h > 0 ? 1 : -1) >= -1e-300 &&
               to_double((t - t1)) * (h > 0 ? 1 : -1) <= 1e-300;
    }
    void eval(Real t, Real* y) const {
        Real s = (t - t0) / h;
        Real s1 = Real(1) - s;
        for (size_t i = 0; i < dim(); ++i) {
            Real v = r[4][i] + s * (r[5][i] + s1 * (r[6][i] + s * r[7][i]));
            y[i] = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * v)));
        }
    }
};

template <class Real>
struct StepRecord {
    Real t_old{}, t_new{};
    const std::vector<Real>* y_new = nullptr;
    const DenseSegment<Real>* dense = nullptr;   // null unless requested
};

template <class Real>
struct IntegrateStats {
    long n_steps = 0, n_accepted = 0, n_rejected = 0, n_rhs = 0;
};

template <class Real, class F>
class Dop853 {
  public:
    using Vec = std::vector<Real>;

    Dop853(F f, IntegratorConfig<Real> cfg) : f_(std::move(f)), cfg_(cfg) {
        cfg_.validate();
        // repair the first-order weight-sum defect in the working precision,
        // so compensated runs are not limited by coefficient rounding
        using namespace dop853;
        bw_ = {Real(b1), Real(b6), Real(b7), Real(b8),
               Real(b9), Real(b10), Real(b11), Real(b12)};
        Real s(0);
        for (auto& b : bw_) s += b;
        bw_[7] += Real(1) - s;
    }

    void init(Real t0, const Vec& y0) {
        n_ = y0.size();
        t_ = t0;
        y_ = y0;
        for (auto& k : k_) k.assign(n_, Real(0));
        yw_.assign(n_, Real(0));
        ytmp_.assign(n_, Real(0));
        f_(t_, y_.data(), k_[0].data());
        stats_.n_rhs++;
        check_finite(k_[0]);
        h_ = 0;
        first_ = true;
    }

    Real t() const { return t_; }
    const Vec& y() const { return y_; }
    const IntegrateStats<Real>& stats() const { return stats_; }
    const DenseSegment<Real>& dense() const { return seg_; }

    // advance one accepted step toward t_end (clipped); returns false when
    // already at t_end
    bool step(Real t_end, bool want_dense) {
        double dir = to_double(t_end - t_) >= 0 ? 1.0 : -1.0;
        double remaining = std::fabs(to_double(t_end - t_));
        if (remaining <= 4.0 * real_traits<double>::eps * std::fabs(to_double(t_)) ||
            remaining == 0.0)
            return false;
        if (first_) {
            h_ = initial_step(t_end, dir);
            first_ = false;
        }
        for (;;) {
            if (stats_.n_steps++ > cfg_.max_steps)
                throw NumericsError("dop853: max step count exceeded");
            h_ = std::min(h_, cfg_.max_step);
            bool clipped = false;
            if (h_ >= remaining) {
                h_ = remaining;
                clipped = true;
            }
            if (h_ < 16.0 * real_traits<double>::eps * std::max(1.0, std::fabs(to_double(t_))) &&
                !clipped)
                throw StepSizeUnderflow("dop853: step size underflow (singularity or stiffness)");

            double h = dir * h_;
            Real t_new = clipped ? t_end : t_ + h;
            double err = do_stages(h, clipped ? to_double(t_end - t_) : h);
            double scale;
            if (std::isnan(err) || std::isinf(err)) {
                stats_.n_rejected++;
                h_ *= 0.25;
                continue;
            }
            if (err <= 1.0) {
                scale = err == 0.0 ? kMaxScale
                                   : std::clamp(kSafe * std::pow(err, -0.125), kMinScale, kMaxScale);
                if (last_rejected_) scale = std::min(scale, 1.0);
                stats_.n_accepted++;
                last_rejected_ = false;
                f_(t_new, yw_.data(), k_[3].data());   // derivative at the new point
                stats_.n_rhs++;
                if (want_dense) build_dense(h, t_new);
                t_old_ = t_;
                t_ = t_new;
                std::swap(y_, yw_);
                std::swap(k_[0], k_[3]);   // k1 <- f(t_new, y_new)
                check_finite(k_[0]);
                if (!clipped) h_ *= scale;
                return true;
            }
            stats_.n_rejected++;
            last_rejected_ = true;
            h_ *= std::max(kSafe * std::pow(err, -0.125), kMinScale);
        }
    }

    Real t_old() const { return t_old_; }

  private:
    static constexpr double kSafe = 0.9, kMinScale = 1.0 / 3.0, kMaxScale = 6.0;

    void check_finite(const Vec& v) const {
        for (const auto& x : v)
            if (!isfinite(x)) throw NonFiniteRhs("dop853: non-finite rhs evaluation");
    }

    double initial_step(Real t_end, double dir) {
        // Hairer's HINIT
        double d0 = 0, d1 = 0;
        double atol = to_double(cfg_.abs_tol), rtol = to_double(cfg_.rel_tol);
        for (size_t i = 0; i < n_; ++i) {
            double sk = atol + rtol * std::fabs(to_double(y_[i]));
            double a = to_double(y_[i]) / sk, b = to_double(k_[0][i]) / sk;
            d0 += a * a;
            d1 += b * b;
        }
        double h0 = (d0 < 1e-10 || d1 < 1e-10) ? 1e-6 : 0.01 * std::sqrt(d0 / d1);
        h0 = std::min({h0, std::fabs(to_double(t_end - t_)), cfg_.max_step});
        for (size_t i = 0; i < n_; ++i) ytmp_[i] = y_[i] + (dir * h0) * k_[0][i];
        f_(t_ + dir * h0, ytmp_.data(), k_[1].data());
        stats_.n_rhs++;
        double d2 = 0;
        for (size_t i = 0; i < n_; ++i) {
            double sk = atol + rtol * std::fabs(to_double(y_[i]));
            double c = (to_double(k_[1][i]) - to_double(k_[0][i])) / sk;
            d2 += c * c;
        }
        d2 = std::sqrt(d2) / h0;
        double dm = std::max(std::sqrt(d1), d2);
        double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                : std::pow(0.01 / dm, 1.0 / 8.0);
        return std::min({100 * h0, h1, std::fabs(to_double(t_end - t_)), cfg_.max_step});
    }

    // run the 12 stages; yw_ <- y_new; returns scalar error estimate
    double do_stages(double h, double h_exact) {
        using namespace dop853;
        (void)h_exact;
        auto& k1 = k_[0];
        auto& k2 = k_[1];
        auto& k3 = k_[2];
        auto& k4 = k_[3];
        auto& k5 = k_[4];
        auto& k6 = k_[5];
        auto& k7 = k_[6];
        auto& k8 = k_[7];
        auto& k9 = k_[8];
        auto& k10 = k_[9];
        auto& k11 = k_[10];
        auto& k12 = k_[11];
        const Real* y = y_.data();
        auto st = [&](const std::vector<Real>& lin, double ci, Vec& out) {
            f_(t_ + ci * h, lin.data(), out.data());
            stats_.n_rhs++;
        };
        for (size_t i = 0; i < n_; ++i) ytmp_[i] = y[i] + h * (a21 * k1[i]);
        st(ytmp_, c2, k2);
        for (size_t i = 0; i < n_; ++i) ytmp_[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        st(ytmp_, c3, k3);
        for (size_t i = 0; i < n_; ++i) ytmp_[i] = y[i] + h * (a41 * k1[i] + a43 * k3[i]);
        st(ytmp_, c4, k4);
        for (size_t i = 0; i < n_; ++i)
            ytmp_[i] = y[i] + h * (a51 * k1[i] + a53 * k3[i] + a54 * k4[i]);
        st(ytmp_, c5, k5);
        for (size_t i = 0; i < n_; ++i)
            ytmp_[i] = y[i] + h * (a61 * k1[i] + a64 * k4[i] + a65 * k5[i]);
        st(ytmp_, c6, k6);
        for (size_t i = 0; i < n_; ++i)
            ytmp_[i] = y[i] + h * (a71 * k1[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        st(ytmp_, c7, k7);
        for (size_t i = 0; i < n_; ++i)
            ytmp_[i] = y[i] + h * (a81 * k1[i] + a84 * k4[i] + a85 * k5[i] + a86 * k6[i] +
                                   a87 * k7[i]);
        st(ytmp_, c8, k8);
        for (size_t i = 0; i < n_; ++i)
            ytmp_[i] = y[i] + h * (a91 * k1[i] + a94 * k4[i] + a95 * k5[i] + a96 * k6[i] +
                                   a97 * k7[i] + a98 * k8[i]);
        st(ytmp_, c9, k9);
        for (size_t i = 0; i < n_; ++i)
            ytmp_[i] = y[i] + h * (a101 * k1[i] + a104 * k4[i] + a105 * k5[i] + a106 * k6[i] +
                                   a107 * k7[i] + a108 * k8[i] + a109 * k9[i]);
        st(ytmp_, c10, k10);
        for (size_t i = 0; i < n_; ++i)
            ytmp_[i] = y[i] + h * (a111 * k1[i] + a114 * k4[i] + a115 * k5[i] + a116 * k6[i] +
                                   a117 * k7[i] + a118 * k8[i] + a119 * k9[i] + a1110 * k10[i]);
        st(ytmp_, c11, k11);
        for (size_t i = 0; i < n_; ++i)
            ytmp_[i] = y[i] + h * (a121 * k1[i] + a124 * k4[i] + a125 * k5[i] + a126 * k6[i] +
                                   a127 * k7[i] + a128 * k8[i] + a129 * k9[i] + a1210 * k10[i] +
                                   a1211 * k11[i]);
        st(ytmp_, 1.0, k12);

        double err3 = 0, err5 = 0;
        double atol = to_double(cfg_.abs_tol), rtol = to_double(cfg_.rel_tol);
        for (size_t i = 0; i < n_; ++i) {
            Real inc = bw_[0] * k1[i] + bw_[1] * k6[i] + bw_[2] * k7[i] + bw_[3] * k8[i] +
                       bw_[4] * k9[i] + bw_[5] * k10[i] + bw_[6] * k11[i] + bw_[7] * k12[i];
            yw_[i] = y[i] + h * inc;
            double sk = atol + rtol * std::max(std::fabs(to_double(y[i])),
                                               std::fabs(to_double(yw_[i])));
            double e3 = to_double(inc) - bhh1 * to_double(k1[i]) - bhh2 * to_double(k9[i]) -
                        bhh3 * to_double(k12[i]);
            double e5 = er1 * to_double(k1[i]) + er6 * to_double(k6[i]) + er7 * to_double(k7[i]) +
                        er8 * to_double(k8[i]) + er9 * to_double(k9[i]) + er10 * to_double(k10[i]) +
                        er11 * to_double(k11[i]) + er12 * to_double(k12[i]);
            err3 += (e3 / sk) * (e3 / sk);
            err5 += (e5 / sk) * (e5 / sk);
        }
        double deno = err5 + 0.01 * err3;
        if (deno <= 0.0) deno = 1.0;
        return std::fabs(h) * err5 / std::sqrt(double(n_) * deno);
    }

    // three extra stages and the 8 interpolation vectors (k_[3] holds f_new)
    void build_dense(double h, Real t_new) {
        using namespace dop853;
        auto& k1 = k_[0];
        auto& k6 = k_[5];
        auto& k7 = k_[6];
        auto& k8 = k_[7];
        auto& k9 = k_[8];
        auto& k10 = k_[9];
        auto& k11 = k_[10];
        auto& k12 = k_[11];
        auto& k13 = k_[3];    // f(t_new, y_new)
        auto& k14 = k_[12];
        auto& k15 = k_[13];
        auto& k16 = k_[14];
        for (int j = 12; j < 15; ++j)
            if (k_[j].size() != n_) k_[j].assign(n_, Real(0));
        seg_.t0 = t_;
        seg_.t1 = t_new;
        seg_.h = h;
        for (auto& rv : seg_.r) rv.assign(n_, Real(0));
        for (size_t i = 0; i < n_; ++i) {
            seg_.r[0][i] = y_[i];
            Real dy = yw_[i] - y_[i];
            seg_.r[1][i] = dy;
            seg_.r[2][i] = h * k1[i] - dy;
            seg_.r[3][i] = dy - h * k13[i] - seg_.r[2][i];
            seg_.r[4][i] = d41 * k1[i] + d46 * k6[i] + d47 * k7[i] + d48 * k8[i] + d49 * k9[i] +
                           d410 * k10[i] + d411 * k11[i] + d412 * k12[i];
            seg_.r[5][i] = d51 * k1[i] + d56 * k6[i] + d57 * k7[i] + d58 * k8[i] + d59 * k9[i] +
                           d510 * k10[i] + d511 * k11[i] + d512 * k12[i];
            seg_.r[6][i] = d61 * k1[i] + d66 * k6[i] + d67 * k7[i] + d68 * k8[i] + d69 * k9[i] +
                           d610 * k10[i] + d611 * k11[i] + d612 * k12[i];
            seg_.r[7][i] = d71 * k1[i] + d76 * k6[i] + d77 * k7[i] + d78 * k8[i] + d79 * k9[i] +
                           d710 * k10[i] + d711 * k11[i] + d712 * k12[i];
        }
        for (size_t i = 0; i < n_; ++i)
            ytmp_[i] = y_[i] + h * (a141 * k1[i] + a147 * k7[i] + a148 * k8[i] + a149 * k9[i] +
                                    a1410 * k10[i] + a1411 * k11[i] + a1412 * k12[i] +
                                    a1413 * k13[i]);
        f_(t_ + c14 * h, ytmp_.data(), k14.data());
        for (size_t i = 0; i < n_; ++i)
            ytmp_[i] = y_[i] + h * (a151 * k1[i] + a156 * k6[i] + a157 * k7[i] + a158 * k8[i] +
                                    a1511 * k11[i] + a1512 * k12[i] + a1513 * k13[i] +
                                    a1514 * k14[i]);
        f_(t_ + c15 * h, ytmp_.data(), k15.data());
        for (size_t i = 0; i < n_; ++i)
            ytmp_[i] = y_[i] + h * (a161 * k1[i] + a166 * k6[i] + a167 * k7[i] + a168 * k8[i] +
                                    a169 * k9[i] + a1613 * k13[i] + a1614 * k14[i] +
                                    a1615 * k15[i]);
        f_(t_ + c16 * h, ytmp_.data(), k16.data());
        stats_.n_rhs += 3;
        for (size_t i = 0; i < n_; ++i) {
            seg_.r[4][i] = h * (seg_.r[4][i] + d413 * k13[i] + d414 * k14[i] + d415 * k15[i] +
                                d416 * k16[i]);
            seg_.r[5][i] = h * (seg_.r[5][i] + d513 * k13[i] + d514 * k14[i] + d515 * k15[i] +
                                d516 * k16[i]);
            seg_.r[6][i] = h * (seg_.r[6][i] + d613 * k13[i] + d614 * k14[i] + d615 * k15[i] +
                                d616 * k16[i]);
            seg_.r[7][i] = h * (seg_.r[7][i] + d713 * k13[i] + d714 * k14[i] + d715 * k15[i] +
                                d716 * k16[i]);
        }
    }

    F f_;
    IntegratorConfig<Real> cfg_;
    size_t n_ = 0;
    Real t_{}, t_old_{};
    double h_ = 0;
    bool first_ = true, last_rejected_ = false;
    Vec y_, yw_, ytmp_;
    std::array<Real, 8> bw_{};
    std::array<Vec, 15> k_;
    DenseSegment<Real> seg_;
    IntegrateStats<Real> stats_;
};

template <class Real>
struct IntegrateResult {
    Real t{};
    std::vector<Real> y;
    IntegrateStats<Real> stats;
};

template <class Real, class F>
IntegrateResult<Real> integrate(F&& f, Real t0, Real t1, const std::vector<Real>& y0,
                                const IntegratorConfig<Real>& cfg) {
    Dop853<Real, std::decay_t<F>> st(std::forward<F>(f), cfg);
    st.init(t0, y0);
    while (st.step(t1, cfg.dense_output)) {
    }
    return {st.t(), st.y(), st.stats()};
}

// per accepted step: sink(StepRecord) -> bool (false stops the run)
template <class Real, class F, class Sink>
IntegrateResult<Real> integrate_with_sink(F&& f, Real t0, Real t1, const std::vector<Real>& y0,
                                          const IntegratorConfig<Real>& cfg, Sink&& sink,
                                          bool want_dense = true) {
    Dop853<Real, std::decay_t<F>> st(std::forward<F>(f), cfg);
    st.init(t0, y0);
    while (st.step(t1, want_dense)) {
        StepRecord<Real> rec{st.t_old(), st.t(), &st.y(), want_dense ? &st.dense() : nullptr};
        if (!sink(rec)) break;
    }
    return {st.t(), st.y(), st.stats()};
}

enum class EventDirection { increasing, decreasing, any };

template <class Real>
struct EventSpec {
    std::function<Real(Real, const Real*)> value;
    EventDirection direction = EventDirection::any;
    Real root_tol = Real(1e-12);
    int which = 1;                                  // report the k-th accepted crossing
    std::function<bool(Real, const Real*)> accept;  // optional extra section condition

    void validate() const {
        if (!value) throw std::invalid_argument("event function not set");
        if (!(to_double(root_tol) > 0)) throw std::invalid_argument("root_tol must be positive");
        if (which < 1) throw std::invalid_argument("event index must be >= 1");
    }
};

template <class Real>
struct EventResult {
    Real t{};
    std::vector<Real> y;
    int crossing_index = 0;
    IntegrateStats<Real> stats;
};

template <class Real, class F>
EventResult<Real> integrate_to_event(F&& f, Real t0, const std::vector<Real>& y0,
                                     const EventSpec<Real>& ev, IntegratorConfig<Real> cfg,
                                     Real t_horizon) {
    ev.validate();
    Dop853<Real, std::decay_t<F>> st(std::forward<F>(f), cfg);
    st.init(t0, y0);
    std::vector<Real> ys(y0.size());
    int found = 0;
    Real g_prev = ev.value(t0, y0.data());
    if (!isfinite(g_prev)) throw NonFiniteRhs("event function non-finite at start");

    constexpr int kScan = 8;
    while (st.step(t_horizon, true)) {
        const auto& seg = st.dense();
        Real ta = seg.t0;
        Real ga = g_prev;
        for (int j = 1; j <= kScan; ++j) {
            Real tb = (j == kScan) ? seg.t1 : seg.t0 + (seg.h * (double(j) / kScan));
            if (j == kScan) {
                ys = st.y();
            } else {
                seg.eval(tb, ys.data());
            }
            Real gb = ev.value(tb, ys.data());
            if (!isfinite(gb)) throw NonFiniteRhs("event function non-finite along trajectory");
            bool sign_change = (to_double(ga) <= 0 && to_double(gb) > 0) ||
                               (to_double(ga) >= 0 && to_double(gb) < 0);
            if (sign_change) {
                bool up = to_double(gb) > to_double(ga);
                bool dir_ok = ev.direction == EventDirection::any ||
                              (ev.direction == EventDirection::increasing && up) ||
                              (ev.direction == EventDirection::decreasing && !up);
                if (dir_ok) {
                    // bisection on the dense interpolant
                    Real lo = ta, hi = tb;
                    Real glo = ga;
                    for (int it = 0; it < 80; ++it) {
                        Real mid = lo + (hi - lo) * Real(0.5);
                        seg.eval(mid, ys.data());
                        Real gm = ev.value(mid, ys.data());
                        if ((to_double(glo) <= 0) == (to_double(gm) <= 0)) {
                            lo = mid;
                            glo = gm;
                        } else {
                            hi = mid;
                        }
                        if (fabs(to_double(hi - lo)) <
                            1e-15 * std::max(1.0, std::fabs(to_double(seg.t1))))
                            break;
                    }
                    Real tstar = lo + (hi - lo) * Real(0.5);
                    // re-integrate the step prefix so the event state has full
                    // working precision, then polish with secant on dt
                    IntegratorConfig<Real> sub = cfg;
                    sub.dense_output = false;
                    std::vector<Real> yseg(st.y().size());
                    auto shoot = [&](Real tt) {
                        seg.eval(seg.t0, yseg.data());   // y at step start (exact r[0])
                        auto res = integrate(f, seg.t0, tt, yseg, sub);
                        return res.y;
                    };
                    std::vector<Real> ystar = shoot(tstar);
                    Real gstar = ev.value(tstar, ystar.data());
                    Real tprev = tstar - (hi - lo);   // small offset for the secant
                    seg.eval(tprev, ys.data());
                    Real gprev2 = ev.value(tprev, ys.data());
                    for (int it = 0; it < 8 && fabs(to_double(gstar)) > to_double(ev.root_tol);
                         ++it) {
                        Real denom = gstar - gprev2;
                        if (to_double(denom) == 0.0) break;
                        Real tnext = tstar - gstar * (tstar - tprev) / denom;
                        if (!seg.contains(tnext)) break;
                        tprev = tstar;
                        gprev2 = gstar;
                        tstar = tnext;
                        ystar = shoot(tstar);
                        gstar = ev.value(tstar, ystar.data());
                    }
                    if (fabs(to_double(gstar)) > to_double(ev.root_tol))
                        throw NoCrossing("event refinement did not reach root_tol");
                    if (!ev.accept || ev.accept(tstar, ystar.data())) {
                        if (++found == ev.which)
                            return {tstar, std::move(ystar), found, st.stats()};
                    }
                }
            }
            ta = tb;
            ga = gb;
        }
        g_prev = ga;
    }
    throw NoCrossing("no event crossing before the time horizon");
}

} // namespace l3split
