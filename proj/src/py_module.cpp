// Python bindings for the main operations.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "l3split/inner.hpp"
#include "l3split/io.hpp"
#include "l3split/manifolds.hpp"

namespace py = pybind11;
using namespace l3split;

namespace {

MuParam<double> mu_of(double mu) { return MuParam<double>::make(mu); }

py::dict splitting_dict(const SplittingReport<double>& r) {
    py::dict d;
    d["mu"] = to_double(r.mu);
    d["delta"] = to_double(r.delta);
    d["d"] = to_double(r.d);
    d["C"] = to_double(r.C);
    d["A_used"] = to_double(r.A_used);
    d["delta_r"] = r.delta_r;
    d["delta_R"] = r.delta_R;
    d["delta_G"] = r.delta_G;
    d["abs_dx"] = r.abs_dx;
    d["abs_dy"] = r.abs_dy;
    d["abs_dLambda"] = r.abs_dLambda;
    d["tof_u"] = to_double(r.unstable.time_of_flight);
    d["tof_s"] = to_double(r.stable.time_of_flight);
    d["energy_mismatch"] = r.energy_mismatch;
    d["precision"] = precision_name(r.precision);
    return d;
}

SplittingReport<double> py_splitting(double mu, double theta, double rel_tol, double eps,
                                     const std::string& precision) {
    SectionSpec sec;
    sec.value = theta;
    double A = to_double(constant_A_x_integral<double>(1e-12).value);
    if (precision == "compensated" || (precision == "auto" && mu < 1e-3)) {
        auto m = MuParam<DD>::make(DD(mu));
        IntegratorConfig<DD> cfg;
        cfg.rel_tol = DD(std::min(rel_tol, 1e-18));
        cfg.abs_tol = DD(1e-22);
        auto rep = splitting_distance(m, sec, cfg, DD(eps), DD(A));
        SplittingReport<double> out;
        out.mu = mu;
        out.delta = to_double(m.delta);
        out.section = sec;
        out.d = to_double(rep.d);
        out.C = to_double(rep.C);
        out.A_used = A;
        out.delta_r = to_double(rep.delta_r);
        out.delta_R = to_double(rep.delta_R);
        out.delta_G = to_double(rep.delta_G);
        out.energy_mismatch = to_double(rep.energy_mismatch);
        out.unstable.time_of_flight = to_double(rep.unstable.time_of_flight);
        out.stable.time_of_flight = to_double(rep.stable.time_of_flight);
        out.precision = Precision::compensated;
        return out;
    }
    auto m = mu_of(mu);
    IntegratorConfig<double> cfg;
    cfg.rel_tol = rel_tol;
    cfg.abs_tol = 1e-14;
    return splitting_distance(m, sec, cfg, eps, A);
}

} // namespace

PYBIND11_MODULE(_l3split, m) {
    m.doc() = "L3 manifold-splitting laboratory for the planar restricted 3-body problem";

    m.def("constant_a", [](double tol) {
        auto rx = constant_A_x_integral<double>(tol);
        auto rl = constant_A_lambda_integral<double>(tol);
        py::dict d;
        d["x_integral"] = to_double(rx.value);
        d["lambda_integral"] = to_double(rl.value);
        d["error_estimate"] = to_double(rx.error_estimate);
        return d;
    }, py::arg("tol") = 1e-10, "constant A by both quadrature routes");

    m.def("potential_v", [](double lam) { return potential_V(lam); }, py::arg("lam"));
    m.def("lambda0", []() { return to_double(lambda0<double>()); });
    m.def("saddle_rate", []() { return to_double(saddle_rate<double>()); });

    m.def("separatrix", [](double t) {
        auto s = separatrix_handle().eval(t);
        return py::make_tuple(s.lambda_h, s.Lambda_h);
    }, py::arg("t"), "(lambda_h, Lambda_h) on the pendulum separatrix");

    m.def("lagrange_points", [](double mu) {
        auto pts = lagrange_points(mu_of(mu));
        py::list out;
        for (const auto& L : pts) {
            py::dict d;
            d["label"] = lagrange_name(L.label);
            d["q1"] = L.state.q1;
            d["q2"] = L.state.q2;
            d["p1"] = L.state.p1;
            d["p2"] = L.state.p2;
            d["grad_norm"] = L.grad_norm;
            if (L.spectrum.saddle_center) {
                d["lambda_hyp"] = L.spectrum.lambda_hyp;
                d["omega"] = L.spectrum.omega;
            }
            out.append(d);
        }
        return out;
    }, py::arg("mu"));

    m.def("l3_spectrum", [](double mu) {
        auto L = l3_point(mu_of(mu));
        py::dict d;
        d["q1"] = L.state.q1;
        d["lambda_hyp"] = L.spectrum.lambda_hyp;
        d["omega"] = L.spectrum.omega;
        d["grad_norm"] = L.grad_norm;
        return d;
    }, py::arg("mu"));

    m.def("hamiltonian", [](double q1, double q2, double p1, double p2, double mu) {
        return hamiltonian_h(CartesianState<double>{q1, q2, p1, p2},
                             MuParam<double>{mu, std::sqrt(std::sqrt(mu))});
    });

    m.def("splitting", [](double mu, double theta, double rel_tol, double eps,
                          const std::string& precision) {
        return splitting_dict(py_splitting(mu, theta, rel_tol, eps, precision));
    }, py::arg("mu"), py::arg("theta") = 1.5707963267948966, py::arg("rel_tol") = 1e-12,
       py::arg("eps") = 1e-7, py::arg("precision") = "auto",
       "first-crossing splitting report at the polar section");

    m.def("scaled_splitting", [](double mu, double lambda_star, double rel_tol, double eps) {
        auto m_ = mu_of(mu);
        IntegratorConfig<double> cfg;
        cfg.rel_tol = rel_tol;
        cfg.abs_tol = 1e-14;
        double A = to_double(constant_A_x_integral<double>(1e-12).value);
        return splitting_dict(scaled_section_splitting(m_, lambda_star, cfg, eps, A));
    }, py::arg("mu"), py::arg("lambda_star") = 1.0, py::arg("rel_tol") = 1e-12,
       py::arg("eps") = 1e-7);

    m.def("sweep_fit", [](std::vector<double> mus, double theta, double rel_tol) {
        SectionSpec sec;
        sec.value = theta;
        double A = to_double(constant_A_x_integral<double>(1e-12).value);
        std::vector<SplittingReport<double>> reps;
        for (double mu : mus) {
            IntegratorConfig<double> cfg;
            cfg.rel_tol = rel_tol;
            cfg.abs_tol = 1e-14;
            reps.push_back(splitting_distance(mu_of(mu), sec, cfg, 1e-7, A));
        }
        auto fit = fit_asymptotics(reps);
        py::dict d;
        d["A_hat"] = fit.A_hat;
        d["c_hat"] = fit.c_hat;
        d["c0_hat"] = fit.c0_hat;
        d["c1_hat"] = fit.c1_hat;
        d["residual_rms"] = fit.residual_rms;
        d["A_quadrature"] = fit.A_quadrature;
        py::list ds;
        for (const auto& r : reps) ds.append(splitting_dict(r));
        d["reports"] = ds;
        return d;
    }, py::arg("mus"), py::arg("theta") = 1.5707963267948966, py::arg("rel_tol") = 1e-12);

    m.def("stokes", [](std::vector<double> rhos, double re_max, const std::string& precision) {
        bool dd = precision == "compensated" ||
                  (precision == "auto" &&
                   *std::max_element(rhos.begin(), rhos.end()) >= 12.0);
        py::dict d;
        if (dd) {
            IntegratorConfig<DD> cfg;
            cfg.rel_tol = DD(1e-20);
            cfg.abs_tol = DD(1e-26);
            auto est = stokes_estimate<DD>(rhos, re_max, cfg, 0.02);
            d["theta_re"] = to_double(est.theta.re);
            d["theta_im"] = to_double(est.theta.im);
            d["abs_theta"] = est.abs_theta;
            d["spread"] = est.spread;
            d["precision"] = "compensated";
        } else {
            IntegratorConfig<double> cfg;
            cfg.rel_tol = 1e-13;
            cfg.abs_tol = 1e-16;
            auto est = stokes_estimate<double>(rhos, re_max, cfg, 0.02);
            d["theta_re"] = est.theta.re;
            d["theta_im"] = est.theta.im;
            d["abs_theta"] = est.abs_theta;
            d["spread"] = est.spread;
            d["precision"] = "native";
        }
        return d;
    }, py::arg("rhos") = std::vector<double>{8.0, 12.0, 16.0}, py::arg("re_max") = 60.0,
       py::arg("precision") = "auto");
}
