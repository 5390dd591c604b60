#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "darboux/branch.hpp"
#include "darboux/errors.hpp"
#include "darboux/ode.hpp"
#include "darboux/system.hpp"

namespace darboux {

struct weyl_options {
    double x_max = 0.0;              // 0: use the potential cutoff
    double wronskian_point = 1.0;    // where the defining Wronskians are taken
    double riccati_threshold = 50.0; // switch to log-derivative integration
    double pole_ratio = 1e-10;       // |W(phi,u+)| / |W(theta,u+)| pole test
    ode_options ode;
};

/// Sample of the Weyl solution u_+(z, .), stored as (u, du) * exp(log_scale);
/// the overall scalar is meaningless, ratios and Wronskian quotients are not.
struct weyl_sample {
    double x = 0;
    complex u{0, 0}, du{0, 0};
    double log_scale = 0;

    log_scaled value() const { return log_scaled{u, log_scale}; }
};

namespace detail {

/// Liouville-Green initial data at the cutoff: u = 1,
/// u'/u = i sqrt(z - q) + q'/(4 (z - q)).
inline complex lg_initial_slope(const Potential& q, complex z, double xm) {
    complex zq = z - q(xm);
    complex s = sqrt_upper(zq);
    return complex(0, 1) * s + q.derivative(xm) / (4.0 * zq);
}

} // namespace detail

/// The Weyl solution at the right endpoint, up to one global scalar multiple,
/// sampled at strictly descending targets below x_max.  Built by integrating
/// inward from Liouville-Green data at x_max; for |sqrt(z)| * span beyond the
/// threshold the log-derivative (Riccati) variable is integrated instead so
/// that arbitrarily large exponents never overflow.
inline std::vector<weyl_sample> weyl_solution_b(const Potential& q, complex z,
                                                const std::vector<double>& targets,
                                                const weyl_options& opt = {}) {
    if (targets.empty()) return {};
    const double xm = (opt.x_max > 0) ? opt.x_max : q.cutoff();
    for (size_t i = 0; i < targets.size(); ++i) {
        if (!(targets[i] < xm))
            throw numerical_error("weyl", "weyl_solution_b: targets must lie below x_max");
        if (i > 0 && !(targets[i] < targets[i - 1]))
            throw numerical_error("weyl", "weyl_solution_b: targets must be strictly descending");
    }
    if (q.class_at_upper() != endpoint_class::limit_point)
        throw numerical_error("weyl", "weyl_solution_b: right endpoint must be limit point");

    const complex zq = z - q(xm);
    if (std::abs(q(xm)) >= std::abs(zq))
        throw numerical_error("weyl", "x_max too small: potential is not a perturbation of z at "
                                      "the cutoff (decay diagnostic failed)");
    const complex s0 = sqrt_upper(zq);
    if (!(s0.imag() > 1e-14 * std::abs(s0)))
        throw numerical_error("weyl",
                              "no decaying solution at the cutoff (z on the essential spectrum)");

    const complex w0 = detail::lg_initial_slope(q, z, xm);
    const double span = xm - targets.back();
    const double growth = std::abs(sqrt_upper(z)) * span;

    std::vector<weyl_sample> out;
    out.reserve(targets.size());

    if (growth > opt.riccati_threshold) {
        // w = u'/u, L = log u;  u_+ has no zeros off the real axis (and none
        // below the spectrum on it), so the Riccati variable stays finite.
        state_vec y{w0, complex(0, 0)};
        auto rhs = [&](double x, const state_vec& st, state_vec& d) {
            d[0] = (q(x) - z) - st[0] * st[0];
            d[1] = st[0];
        };
        auto capture = [&](double xc, const state_vec& st, const state_vec&) {
            complex L = st[1];
            complex m = std::exp(complex(0.0, L.imag()));
            out.push_back({xc, m, st[0] * m, L.real()});
        };
        integrate_adaptive(rhs, xm, targets.back(), y, opt.ode, targets, capture);
    } else {
        if (std::abs(sqrt_upper(z).imag()) * span > 600.0)
            throw numerical_error("weyl", "solution range exceeds double precision; "
                                          "raise the riccati threshold or reduce |z|");
        state_vec y{complex(1, 0), w0};
        auto rhs = [&](double x, const state_vec& st, state_vec& d) {
            d[0] = st[1];
            d[1] = (q(x) - z) * st[0];
        };
        auto capture = [&](double xc, const state_vec& st, const state_vec&) {
            out.push_back({xc, st[0], st[1], 0.0});
        };
        integrate_adaptive(rhs, xm, targets.back(), y, opt.ode, targets, capture);
    }
    if (out.size() != targets.size())
        throw numerical_error("weyl", "internal: missed targets in inward pass");
    return out;
}

// --------------------------------------------------------------------------

struct weyl_result {
    complex M{0, 0};
    bool pole = false;
    double pole_indicator = 0; // |W(phi,u+)| / |W(theta,u+)|
    complex W_theta_u{0, 0}, W_phi_u{0, 0}; // common u_+ scale divided out
    double x_w = 0;
};

/// Singular Weyl function  M(z) = -W(theta(z), u_+(z)) / W(phi(z), u_+(z)),
/// independent of the u_+ normalization and of the evaluation point.  Valid
/// for Im z != 0, and for real z strictly below the spectrum (where u_+ is
/// the decaying real solution).
inline weyl_result singular_weyl(const FundamentalSystem& fs, complex z,
                                 const weyl_options& opt = {}) {
    const double xm = (opt.x_max > 0) ? opt.x_max : fs.q.cutoff();
    double xw = std::min(opt.wronskian_point, 0.5 * xm);
    double im_rate = std::abs(sqrt_upper(z).imag());
    if (im_rate * xw > 300.0) xw = std::max(300.0 / im_rate, 0.02); // keep phi/theta in range

    weyl_options o = opt;
    o.x_max = xm;
    auto up = weyl_solution_b(fs.q, z, {xw}, o).front();
    auto pv = fs.phi1(z, xw);
    auto tv = fs.theta1(z, xw);

    weyl_result r;
    r.x_w = xw;
    r.W_phi_u = pv.value * up.du - pv.deriv * up.u;
    r.W_theta_u = tv.value * up.du - tv.deriv * up.u;
    r.pole_indicator = std::abs(r.W_phi_u) / std::abs(r.W_theta_u);
    if (r.pole_indicator < opt.pole_ratio) {
        r.pole = true;
        return r;
    }
    r.M = -r.W_theta_u / r.W_phi_u;
    return r;
}

/// M at real lambda below the spectrum as the limit from the left, evaluated
/// at lambda - eps and lambda - 2 eps with one Richardson refinement.
inline complex weyl_real_below(const FundamentalSystem& fs, double lambda,
                               const weyl_options& opt = {}, double eps = 1e-6) {
    auto m1 = singular_weyl(fs, complex(lambda - 2 * eps, 0), opt);
    auto m2 = singular_weyl(fs, complex(lambda - eps, 0), opt);
    if (m1.pole || m2.pole)
        throw numerical_error("weyl", "M(lambda) divergent: pole at the evaluation point");
    return 2.0 * m2.M - m1.M;
}

/// z -> M(z) evaluator with provenance.
class WeylFunction {
public:
    WeylFunction() = default;

    static WeylFunction from_system(FundamentalSystem fs, weyl_options opt = {},
                                    std::string provenance = {}) {
        WeylFunction w;
        auto fsp = std::make_shared<FundamentalSystem>(std::move(fs));
        w.prov_ = provenance.empty() ? ("numeric M on " + fsp->description) : std::move(provenance);
        w.eval_ = [fsp, opt](complex z) {
            auto r = singular_weyl(*fsp, z, opt);
            if (r.pole)
                throw numerical_error("weyl", "M(z) pole encountered at z=(" +
                                                  std::to_string(z.real()) + "," +
                                                  std::to_string(z.imag()) + ")");
            return r.M;
        };
        return w;
    }

    static WeylFunction from_formula(std::function<complex(complex)> f, std::string provenance) {
        WeylFunction w;
        w.eval_ = std::move(f);
        w.prov_ = std::move(provenance);
        return w;
    }

    complex operator()(complex z) const { return eval_(z); }
    const std::string& provenance() const { return prov_; }
    bool valid() const { return static_cast<bool>(eval_); }

private:
    std::function<complex(complex)> eval_;
    std::string prov_;
};

/// psi(z,x) = theta(z,x) + M(z) phi(z,x), the Weyl solution normalized
/// against the fundamental system.
inline value_deriv weyl_psi(const FundamentalSystem& fs, complex M, complex z, double x) {
    auto pv = fs.phi1(z, x);
    auto tv = fs.theta1(z, x);
    return {tv.value + M * pv.value, tv.deriv + M * pv.deriv};
}

} // namespace darboux
