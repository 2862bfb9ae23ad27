// l3split: numerical laboratory for the exponentially small splitting of the
// L3 stable/unstable manifolds in the restricted planar circular 3-body
// problem.  Exit codes: 0 ok, 1 validation error, 2 numerical failure.
#include <atomic>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "l3split/io.hpp"

using namespace l3split;

namespace {

struct MuGrid {
    std::vector<double> values;
};

MuGrid parse_grid(const std::string& spec) {
    // lo:hi:log:n
    MuGrid g;
    double lo, hi;
    int n;
    char kind[8] = {0};
    if (std::sscanf(spec.c_str(), "%lf:%lf:%3[a-z]:%d", &lo, &hi, kind, &n) != 4 ||
        std::string(kind) != "log")
        throw std::invalid_argument("grid spec must be lo:hi:log:n");
    if (!(lo > 0) || !(hi > lo) || n < 2)
        throw std::invalid_argument("grid spec must be strictly positive and increasing");
    for (int i = 0; i < n; ++i)
        g.values.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1)));
    return g;
}

void validate_mu(double mu) {
    if (!(mu > 0) || mu > 0.5) throw std::invalid_argument("mu must lie in (0, 1/2]");
    if (mu < 3e-5)
        throw std::invalid_argument("mu below the supported floor 3e-5 (splitting falls "
                                    "under the compensated-precision resolution)");
}

Precision pick_precision(const std::string& mode, double mu) {
    if (mode == "auto") return mu < 1e-3 ? Precision::compensated : Precision::native64;
    return precision_from_name(mode);
}

int default_workers() {
    if (const char* env = std::getenv("L3SPLIT_WORKERS")) {
        int w = std::atoi(env);
        if (w > 0) return w;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 2;
}

void emit(const json& payload, const std::string& out_path) {
    std::string text = payload.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        write_text(out_path, text);
}

void emit_manifest(Manifest& man, const std::string& path) {
    std::string text = man.finish().dump(2) + "\n";
    if (path.empty())
        std::cerr << text;
    else
        write_text(path, text);
}

double quadrature_A() {
    return to_double(constant_A_x_integral<double>(1e-12).value);
}

template <class Real>
IntegratorConfig<Real> cfg_of(double rel_tol, double abs_tol) {
    IntegratorConfig<Real> cfg;
    cfg.rel_tol = Real(rel_tol);
    cfg.abs_tol = Real(abs_tol);
    return cfg;
}

template <class Real>
SplittingReport<double> demote(const SplittingReport<Real>& r) {
    if constexpr (std::is_same_v<Real, double>) {
        return r;
    } else {
        SplittingReport<double> o;
        o.mu = to_double(r.mu);
        o.delta = to_double(r.delta);
        o.section = r.section;
        o.d = to_double(r.d);
        o.C = to_double(r.C);
        o.A_used = to_double(r.A_used);
        o.delta_r = to_double(r.delta_r);
        o.delta_R = to_double(r.delta_R);
        o.delta_G = to_double(r.delta_G);
        o.abs_dx = to_double(r.abs_dx);
        o.abs_dy = to_double(r.abs_dy);
        o.abs_dLambda = to_double(r.abs_dLambda);
        o.energy_mismatch = to_double(r.energy_mismatch);
        o.seed_eps = to_double(r.seed_eps);
        o.rel_tol = to_double(r.rel_tol);
        o.precision = r.precision;
        auto cross = [](const SectionCrossing<Real>& c) {
            SectionCrossing<double> d;
            d.section = c.section;
            d.polar = {to_double(c.polar.r), to_double(c.polar.theta), to_double(c.polar.R),
                       to_double(c.polar.G)};
            d.scaled = {to_double(c.scaled.lambda), to_double(c.scaled.Lambda),
                        {to_double(c.scaled.x.re), to_double(c.scaled.x.im)},
                        {to_double(c.scaled.y.re), to_double(c.scaled.y.im)},
                        to_double(c.scaled.delta)};
            d.cart = {to_double(c.cart.q1), to_double(c.cart.q2), to_double(c.cart.p1),
                      to_double(c.cart.p2)};
            d.time_of_flight = to_double(c.time_of_flight);
            d.crossing_index = c.crossing_index;
            d.n_steps = c.n_steps;
            return d;
        };
        o.unstable = cross(r.unstable);
        o.stable = cross(r.stable);
        return o;
    }
}

SplittingReport<double> run_splitting(double mu, const SectionSpec& sec, Precision prec,
                                      double rel_tol, double abs_tol, double eps, double A) {
    if (prec == Precision::native64) {
        auto m = MuParam<double>::make(mu);
        return splitting_distance(m, sec, cfg_of<double>(rel_tol, abs_tol), eps, A);
    }
    auto m = MuParam<DD>::make(DD(mu));
    double rt = std::min(rel_tol, 1e-18);
    double at = std::min(abs_tol, 1e-22);
    return demote(splitting_distance(m, sec, cfg_of<DD>(rt, at), DD(eps), DD(A)));
}

int run_check_coords(int samples, unsigned seed);

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"L3 invariant-manifold splitting laboratory (RPC3BP)"};
    app.require_subcommand(1);

    std::string manifest_path;
    app.add_option("--manifest", manifest_path, "write the run manifest JSON here (default: stderr)");

    // ---- lagrange ----
    auto* lag = app.add_subcommand("lagrange", "Lagrange points and spectra");
    double lag_mu = 1e-3;
    bool lag_json = false;
    std::string lag_out;
    lag->add_option("--mu", lag_mu, "mass ratio in (0, 1/2]")->required();
    lag->add_flag("--json", lag_json, "JSON output (default on)");
    lag->add_option("--out", lag_out, "output path (default: stdout)");

    // ---- constant-a ----
    auto* ca = app.add_subcommand("constant-a", "singularity constant A by quadrature");
    double ca_tol = 1e-10;
    std::string ca_method = "both";
    std::string ca_out;
    ca->add_option("--tol", ca_tol, "quadrature tolerance")->check(CLI::PositiveNumber);
    ca->add_option("--method", ca_method, "x-integral | lambda-integral | both")
        ->check(CLI::IsMember({"x-integral", "lambda-integral", "both"}));
    ca->add_option("--out", ca_out, "output path");

    // ---- separatrix ----
    auto* sep = app.add_subcommand("separatrix", "CSV of separatrix samples (t, lambda, Lambda)");
    double sep_tmin = -15.0, sep_tmax = 15.0, sep_dt = 0.01;
    std::string sep_out;
    sep->add_option("--t-min", sep_tmin);
    sep->add_option("--t-max", sep_tmax);
    sep->add_option("--dt", sep_dt)->check(CLI::PositiveNumber);
    sep->add_option("--out", sep_out, "output path (default: stdout)");

    // ---- splitting ----
    auto* sp = app.add_subcommand("splitting", "splitting distance at one mu");
    double sp_mu = 1e-3, sp_theta = 1.5707963267948966, sp_lambda = -1.0;
    double sp_rtol = 1e-12, sp_atol = 1e-14, sp_eps = 1e-7;
    std::string sp_prec = "auto", sp_out;
    sp->add_option("--mu", sp_mu)->required();
    sp->add_option("--theta", sp_theta, "polar section theta* in (0, theta0)");
    sp->add_option("--lambda-star", sp_lambda, "use the scaled section S(lambda*) instead");
    sp->add_option("--rel-tol", sp_rtol)->check(CLI::PositiveNumber);
    sp->add_option("--abs-tol", sp_atol)->check(CLI::PositiveNumber);
    sp->add_option("--eps", sp_eps, "seed offset along the eigenvector");
    sp->add_option("--precision", sp_prec)->check(CLI::IsMember({"auto", "native", "compensated"}));
    sp->add_option("--out", sp_out);

    // ---- sweep ----
    auto* sw = app.add_subcommand("sweep", "splitting sweep over a mu grid");
    std::string sw_grid, sw_out = "sweep.csv", sw_prec = "auto";
    double sw_theta = 1.5707963267948966, sw_rtol = 1e-12, sw_atol = 1e-14, sw_eps = 1e-7;
    bool sw_fit = false;
    int sw_workers = default_workers();
    sw->add_option("--mu-grid", sw_grid, "lo:hi:log:n")->required();
    sw->add_option("--theta", sw_theta);
    sw->add_option("--out", sw_out, "CSV output path");
    sw->add_option("--precision", sw_prec)
        ->check(CLI::IsMember({"auto", "native", "compensated"}));
    sw->add_option("--rel-tol", sw_rtol)->check(CLI::PositiveNumber);
    sw->add_option("--abs-tol", sw_atol)->check(CLI::PositiveNumber);
    sw->add_option("--eps", sw_eps);
    sw->add_option("--workers", sw_workers)->check(CLI::PositiveNumber);
    sw->add_flag("--fit", sw_fit, "fit the exponential rate and prefactor");

    // ---- stokes ----
    auto* st = app.add_subcommand("stokes", "Stokes constant from the inner equation");
    std::vector<double> st_rhos;
    double st_rho = 0.0, st_remax = 60.0;
    std::string st_prec = "auto", st_out, st_csv;
    st->add_option("--rho", st_rho, "single path level Im U = -rho");
    st->add_option("--rho-list", st_rhos, "several rho levels")->delimiter(',');
    st->add_option("--re-max", st_remax, "|Re U| at the asymptotic seed")
        ->check(CLI::PositiveNumber);
    st->add_option("--precision", st_prec)->check(CLI::IsMember({"auto", "native", "compensated"}));
    st->add_option("--out", st_out);
    st->add_option("--csv", st_csv, "also write theta(U) samples CSV");

    // ---- check-coords ----
    auto* cc = app.add_subcommand("check-coords", "randomized coordinate-tower property checks");
    int cc_samples = 1000;
    unsigned cc_seed = 42;
    cc->add_option("--samples", cc_samples)->check(CLI::PositiveNumber);
    cc->add_option("--seed", cc_seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (lag->parsed()) {
            Manifest man("lagrange");
            man.config({{"mu", lag_mu}, {"json", true}});
            validate_mu(lag_mu);
            auto m = MuParam<double>::make(lag_mu);
            auto pts = lagrange_points(m);
            json out;
            out["mu"] = lag_mu;
            out["points"] = json::array();
            for (const auto& L : pts) {
                json jp{{"label", lagrange_name(L.label)},
                        {"q1", L.state.q1},
                        {"q2", L.state.q2},
                        {"p1", L.state.p1},
                        {"p2", L.state.p2},
                        {"grad_norm", L.grad_norm},
                        {"saddle_center", L.spectrum.saddle_center}};
                json ev = json::array();
                if (L.spectrum.saddle_center)
                    for (const auto& e : L.spectrum.eigenvalues)
                        ev.push_back({{"re", to_double(e.re)}, {"im", to_double(e.im)}});
                jp["eigenvalues"] = ev;
                if (L.spectrum.saddle_center) {
                    jp["lambda_hyp"] = L.spectrum.lambda_hyp;
                    jp["omega"] = L.spectrum.omega;
                }
                out["points"].push_back(jp);
                if (L.grad_norm > 1e-11)
                    throw NumericsError("Lagrange point failed the gradient check");
            }
            emit(out, lag_out);
            emit_manifest(man, manifest_path);
            return 0;
        }

        if (ca->parsed()) {
            Manifest man("constant-a");
            man.config({{"tol", ca_tol}, {"method", ca_method}});
            json out;
            double vx = 0, vl = 0;
            if (ca_method != "lambda-integral") {
                auto r = constant_A_x_integral<double>(ca_tol);
                vx = to_double(r.value);
                out["x_integral"] = {{"value", vx},
                                     {"error_estimate", to_double(r.error_estimate)}};
            }
            if (ca_method != "x-integral") {
                auto r = constant_A_lambda_integral<double>(ca_tol);
                vl = to_double(r.value);
                out["lambda_integral"] = {{"value", vl},
                                          {"error_estimate", to_double(r.error_estimate)}};
            }
            if (ca_method == "both") {
                out["agreement"] = std::fabs(vx - vl);
                if (std::fabs(vx - vl) > 1e-8)
                    throw NumericsError("constant A routes disagree beyond 1e-8");
            }
            emit(out, ca_out);
            emit_manifest(man, manifest_path);
            return 0;
        }

        if (sep->parsed()) {
            Manifest man("separatrix");
            man.config({{"t_min", sep_tmin}, {"t_max", sep_tmax}, {"dt", sep_dt}});
            if (!(sep_tmax > sep_tmin)) throw std::invalid_argument("t-max must exceed t-min");
            const auto& handle = separatrix_handle();
            std::string csv = "t,lambda,Lambda\n";
            for (double t = sep_tmin; t <= sep_tmax + 1e-12; t += sep_dt) {
                auto s = handle.eval(t);
                csv += fmt_g17(t) + "," + fmt_g17(s.lambda_h) + "," + fmt_g17(s.Lambda_h) + "\n";
            }
            if (sep_out.empty())
                std::cout << csv;
            else
                write_text(sep_out, csv);
            emit_manifest(man, manifest_path);
            return 0;
        }

        if (sp->parsed()) {
            Manifest man("splitting");
            validate_mu(sp_mu);
            SectionSpec sec;
            if (sp->count("--lambda-star")) {
                sec.type = SectionSpec::Type::lambda;
                sec.value = sp_lambda;
            } else {
                sec.type = SectionSpec::Type::theta;
                sec.value = sp_theta;
            }
            Precision prec = pick_precision(sp_prec, sp_mu);
            man.config({{"mu", sp_mu},
                        {"section", sec.type == SectionSpec::Type::theta ? "theta" : "lambda"},
                        {"value", sec.value},
                        {"precision", precision_name(prec)},
                        {"rel_tol", sp_rtol},
                        {"eps", sp_eps}});
            double A = quadrature_A();
            auto rep = run_splitting(sp_mu, sec, prec, sp_rtol, sp_atol, sp_eps, A);
            emit(splitting_report_json(rep), sp_out);
            emit_manifest(man, manifest_path);
            return 0;
        }

        if (sw->parsed()) {
            Manifest man("sweep");
            auto grid = parse_grid(sw_grid);
            for (double mu : grid.values) validate_mu(mu);
            SectionSpec sec;
            sec.value = sw_theta;
            man.config({{"mu_grid", sw_grid},
                        {"theta", sw_theta},
                        {"precision", sw_prec},
                        {"workers", sw_workers},
                        {"fit", sw_fit}});
            double A = quadrature_A();
            std::vector<SplittingReport<double>> reports(grid.values.size());
            std::vector<std::string> failures(grid.values.size());
            std::atomic<size_t> next{0};
            auto worker = [&]() {
                for (;;) {
                    size_t i = next.fetch_add(1);
                    if (i >= grid.values.size()) return;
                    double mu = grid.values[i];
                    try {
                        Precision prec = pick_precision(sw_prec, mu);
                        reports[i] = run_splitting(mu, sec, prec, sw_rtol, sw_atol, sw_eps, A);
                    } catch (const std::exception& e) {
                        failures[i] = e.what();
                    }
                }
            };
            std::vector<std::thread> pool;
            int nw = std::min<int>(sw_workers, static_cast<int>(grid.values.size()));
            for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
            for (auto& th : pool) th.join();

            std::string csv = sweep_csv_header<double>() + "\n";
            int nfail = 0;
            for (size_t i = 0; i < grid.values.size(); ++i) {
                if (!failures[i].empty()) {
                    ++nfail;
                    man.warn("mu=" + fmt_g17(grid.values[i]) + " failed: " + failures[i]);
                    continue;
                }
                csv += sweep_csv_row(reports[i]) + "\n";
            }
            write_text(sw_out, csv);
            man.stage("sweep", {{"n_ok", static_cast<int>(grid.values.size()) - nfail},
                                {"n_failed", nfail},
                                {"csv", sw_out}});
            if (sw_fit) {
                std::vector<SplittingReport<double>> ok;
                for (size_t i = 0; i < reports.size(); ++i)
                    if (failures[i].empty()) ok.push_back(reports[i]);
                auto fit = fit_asymptotics(ok);
                emit(fit_json(fit), "");
            }
            emit_manifest(man, manifest_path);
            return nfail == 0 ? 0 : 2;
        }

        if (st->parsed()) {
            Manifest man("stokes");
            std::vector<double> rhos = st_rhos;
            if (rhos.empty()) {
                if (st_rho > 0)
                    rhos.push_back(st_rho);
                else
                    rhos = {8.0, 12.0, 16.0};
            }
            double max_rho = *std::max_element(rhos.begin(), rhos.end());
            Precision prec = st_prec == "auto"
                                 ? (max_rho >= 12.0 ? Precision::compensated : Precision::native64)
                                 : precision_from_name(st_prec);
            man.config({{"rhos", rhos},
                        {"re_max", st_remax},
                        {"precision", precision_name(prec)}});
            json out;
            std::string csv = "rho,sigma,theta_re,theta_im\n";
            if (prec == Precision::native64) {
                auto est = stokes_estimate<double>(rhos, st_remax, cfg_of<double>(1e-13, 1e-16),
                                                   0.02);
                out = stokes_json(est);
            } else {
                auto est =
                    stokes_estimate<DD>(rhos, st_remax, cfg_of<DD>(1e-20, 1e-26), 0.02);
                out = stokes_json(est);
            }
            if (!st_csv.empty()) {
                // per-rho theta(U) samples for diagnostics
                for (double rho : rhos) {
                    InnerPath<double> p;
                    p.rho = rho;
                    p.re_start = st_remax;
                    p.cfg = cfg_of<double>(1e-13, 1e-16);
                    std::vector<double> sig;
                    for (double s = -4; s <= 4.01; s += 1.0) sig.push_back(s);
                    auto zu = solve_inner_branch(InnerBranch::unstable, p, sig);
                    auto zs = solve_inner_branch(InnerBranch::stable, p, sig);
                    for (size_t i = 0; i < sig.size(); ++i) {
                        for (size_t j = 0; j < sig.size(); ++j) {
                            if (zu.sigma[i] != zs.sigma[j]) continue;
                            cplxd U(zu.sigma[i], -rho);
                            cplxd th = (zu.Z[i][2] - zs.Z[j][2]) * exp(cplxd(0, 1) * U);
                            csv += fmt_g17(rho) + "," + fmt_g17(zu.sigma[i]) + "," +
                                   fmt_g17(th.re) + "," + fmt_g17(th.im) + "\n";
                        }
                    }
                }
                write_text(st_csv, csv);
            }
            emit(out, st_out);
            emit_manifest(man, manifest_path);
            return 0;
        }

        if (cc->parsed()) {
            Manifest man("check-coords");
            man.config({{"samples", cc_samples}, {"seed", cc_seed}});
            int rc = run_check_coords(cc_samples, cc_seed);
            emit_manifest(man, manifest_path);
            return rc;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const NumericsError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

namespace {

int run_check_coords(int samples, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int failures = 0;
    auto report = [&](const char* name, double worst, double tol) {
        bool ok = worst <= tol;
        if (!ok) ++failures;
        std::printf("%-44s %s  (worst %.3e, tol %.1e)\n", name, ok ? "pass" : "FAIL", worst, tol);
    };

    double worst = 0;
    for (int i = 0; i < samples; ++i) {
        CartesianState<double> s{2 * u(rng), 2 * u(rng), 2 * u(rng), 2 * u(rng)};
        if (std::hypot(s.q1, s.q2) < 1e-2) continue;
        auto b = polar_to_cart(cart_to_polar(s));
        worst = std::max({worst, std::fabs(b.q1 - s.q1), std::fabs(b.q2 - s.q2),
                          std::fabs(b.p1 - s.p1), std::fabs(b.p2 - s.p2)});
    }
    report("polar round trip", worst, 1e-12);

    worst = 0;
    double worstG = 0;
    for (int i = 0; i < samples; ++i) {
        PoincareState<double> ps;
        ps.lambda = 3 * u(rng);
        ps.L = 1 + 0.05 * u(rng);
        ps.eta = {0.05 * u(rng), 0.05 * u(rng)};
        ps.xi = conj(ps.eta);
        auto pol = poincare_to_polar(ps);
        auto back = polar_to_poincare(pol);
        worst = std::max({worst, std::fabs(normalize_angle(back.lambda - ps.lambda)),
                          std::fabs(back.L - ps.L), std::fabs(back.eta.re - ps.eta.re),
                          std::fabs(back.eta.im - ps.eta.im)});
        worstG = std::max(worstG, std::fabs(pol.G - (back.L - (back.eta * back.xi).re)));
    }
    report("poincare round trip", worst, 1e-12);
    report("G = L - eta.xi", worstG, 1e-13);

    // first-order series residual scales quadratically
    auto series_resid = [&](double a) {
        double w = 0;
        for (int i = 0; i < samples / 4; ++i) {
            PoincareState<double> ps;
            ps.lambda = 3 * u(rng);
            ps.L = 1 + a * u(rng);
            ps.eta = {a * u(rng), a * u(rng)};
            ps.xi = conj(ps.eta);
            auto pol = poincare_to_polar(ps);
            double s2 = std::sqrt(2.0);
            cplxd em = cis(-ps.lambda), ep = cis(ps.lambda);
            double r1 = 1 + 2 * (ps.L - 1) - ((em * ps.eta + ep * ps.xi) / s2).re;
            double th1 = ps.lambda + (cplxd(0, s2) * (em * ps.eta - ep * ps.xi)).re;
            w = std::max({w, std::fabs(pol.r - r1),
                          std::fabs(normalize_angle(pol.theta - th1))});
        }
        return w;
    };
    double r2 = series_resid(2e-4), r1 = series_resid(1e-4);
    report("series residual quadratic ratio in [3,5]", std::fabs(r2 / r1 - 4.0), 1.0);

    worst = 0;
    const auto& handle = separatrix_handle();
    double l0 = to_double(lambda0<double>());
    for (int i = 0; i < samples / 4; ++i) {
        double lam = 0.5 + (l0 - 0.6) * std::fabs(u(rng));
        bool stable = rng() & 1;
        double uu = handle.invert(lam, stable);
        auto sep = handle.eval(uu);
        ScaledState<double> s{sep.lambda_h, sep.Lambda_h - 0.1 * u(rng), {0, 0}, {0, 0}, 0.1};
        auto sc = to_separatrix_coords(s, handle, stable);
        auto back = from_separatrix_coords(sc, handle, 0.1);
        worst = std::max({worst, std::fabs(back.lambda - s.lambda),
                          std::fabs(back.Lambda - s.Lambda)});
    }
    report("separatrix-coordinate round trip", worst, 1e-11);

    std::printf("%s\n", failures == 0 ? "all coordinate checks passed" : "coordinate checks FAILED");
    return failures == 0 ? 0 : 2;
}

} // namespace
