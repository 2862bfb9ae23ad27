// CSV/JSON emission helpers shared by the CLI and tests.  Numeric payloads
// are printed with %.17g so reruns are byte-identical in native mode.
#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "l3split/inner.hpp"
#include "l3split/manifolds.hpp"
#include "l3split/real.hpp"

namespace l3split {

using json = nlohmann::ordered_json;

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline constexpr const char* kVersion = "0.1.0";

template <class Real>
json section_json(const SectionSpec& sec) {
    return {{"type", sec.type == SectionSpec::Type::theta ? "theta" : "lambda"},
            {"value", sec.value}};
}

template <class Real>
json crossing_json(const SectionCrossing<Real>& c) {
    return {{"r", to_double(c.polar.r)},
            {"theta", to_double(c.polar.theta)},
            {"R", to_double(c.polar.R)},
            {"G", to_double(c.polar.G)},
            {"lambda", to_double(c.scaled.lambda)},
            {"Lambda", to_double(c.scaled.Lambda)},
            {"x_re", to_double(c.scaled.x.re)},
            {"x_im", to_double(c.scaled.x.im)},
            {"time_of_flight", to_double(c.time_of_flight)},
            {"crossing_index", c.crossing_index},
            {"n_steps", c.n_steps}};
}

template <class Real>
json splitting_report_json(const SplittingReport<Real>& r) {
    json j{{"mu", to_double(r.mu)},
           {"delta", to_double(r.delta)},
           {"section", section_json<Real>(r.section)},
           {"d", to_double(r.d)},
           {"C", to_double(r.C)},
           {"A_used", to_double(r.A_used)},
           {"precision", precision_name(r.precision)},
           {"seed_eps", to_double(r.seed_eps)},
           {"rel_tol", to_double(r.rel_tol)},
           {"energy_mismatch", to_double(r.energy_mismatch)}};
    if (r.section.type == SectionSpec::Type::theta) {
        j["components"] = {{"delta_r", to_double(r.delta_r)},
                           {"delta_R", to_double(r.delta_R)},
                           {"delta_G", to_double(r.delta_G)}};
    } else {
        j["components"] = {{"abs_dx", to_double(r.abs_dx)},
                           {"abs_dy", to_double(r.abs_dy)},
                           {"abs_dLambda", to_double(r.abs_dLambda)}};
    }
    j["crossing_unstable"] = crossing_json(r.unstable);
    j["crossing_stable"] = crossing_json(r.stable);
    return j;
}

inline json fit_json(const AsymptoticFit& f) {
    return {{"A_hat", f.A_hat},
            {"c_hat", f.c_hat},
            {"c0_hat", f.c0_hat},
            {"c1_hat", f.c1_hat},
            {"residual_rms", f.residual_rms},
            {"residuals", f.residuals},
            {"n_points", f.n_points},
            {"A_quadrature", f.A_quadrature}};
}

template <class Real>
json stokes_json(const StokesEstimate<Real>& s) {
    json per = json::array();
    for (const auto& [rho, th] : s.per_rho)
        per.push_back({{"rho", rho},
                       {"theta_re", to_double(th.re)},
                       {"theta_im", to_double(th.im)},
                       {"abs_theta", to_double(abs(th))}});
    return {{"theta_re", to_double(s.theta.re)},
            {"theta_im", to_double(s.theta.im)},
            {"abs_theta", s.abs_theta},
            {"per_rho", per},
            {"spread", s.spread},
            {"fit_residual", s.fit_residual},
            {"re_start", s.re_start},
            {"precision", precision_name(s.precision)}};
}

template <class Real>
std::string sweep_csv_header() {
    return "mu,theta_star,d,C,delta_r,delta_R,delta_G,tof_u,tof_s,precision";
}

template <class Real>
std::string sweep_csv_row(const SplittingReport<Real>& r) {
    std::string row;
    row += fmt_g17(to_double(r.mu)) + ",";
    row += fmt_g17(r.section.value) + ",";
    row += fmt_g17(to_double(r.d)) + ",";
    row += fmt_g17(to_double(r.C)) + ",";
    row += fmt_g17(to_double(r.delta_r)) + ",";
    row += fmt_g17(to_double(r.delta_R)) + ",";
    row += fmt_g17(to_double(r.delta_G)) + ",";
    row += fmt_g17(to_double(r.unstable.time_of_flight)) + ",";
    row += fmt_g17(to_double(r.stable.time_of_flight)) + ",";
    row += precision_name(r.precision);
    return row;
}

class Manifest {
  public:
    explicit Manifest(std::string command) : start_(clock::now()) {
        j_["command"] = std::move(command);
        j_["version"] = kVersion;
        j_["warnings"] = json::array();
    }
    void config(json cfg) { j_["config"] = std::move(cfg); }
    void warn(const std::string& w) { j_["warnings"].push_back(w); }
    void stage(const std::string& name, json info) { j_["stages"][name] = std::move(info); }
    json finish() {
        j_["wall_time_s"] =
            std::chrono::duration<double>(clock::now() - start_).count();
        return j_;
    }

  private:
    using clock = std::chrono::steady_clock;
    json j_;
    clock::time_point start_;
};

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << text;
}

} // namespace l3split
