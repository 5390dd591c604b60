#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "darboux/commute_single.hpp"
#include "darboux/errors.hpp"
#include "darboux/system.hpp"

namespace darboux {

/// Ingredients of a double commutation at (lambda, gamma): the seed solution
/// phi(lambda, .), the running norm  gamma^{-1} + int_a^x phi(lambda)^2, and
/// the rank-one kernel  phi_tilde = phi(lambda) / norm.
struct DoubleCommutationData {
    double lambda = 0;
    double gamma = 0; // unused when infinite
    bool infinite = false;
    real_solution seed;
    std::function<double(double)> norm_accum;
    std::function<value_deriv(double)> phi_tilde;
};

/// Transformed Weyl solution  psi_gamma = psi + phi_tilde W_x(phi(lambda), psi)/(z - lambda).
inline complex psi_gamma(const DoubleCommutationData& dc, const value_deriv& psi, complex z,
                         double x) {
    if (z == complex(dc.lambda, 0))
        throw numerical_error("commute-double", "psi_gamma undefined at z = lambda");
    auto s = dc.seed.eval(x);
    complex W = s.value * psi.deriv - s.deriv * psi.value;
    return psi.value + dc.phi_tilde(x).value * W / (z - dc.lambda);
}

namespace detail {

inline std::shared_ptr<DoubleCommutationData>
make_dc_data(const std::shared_ptr<real_solution>& seed, double lambda, double gamma,
             bool infinite) {
    auto dc = std::make_shared<DoubleCommutationData>();
    dc->lambda = lambda;
    dc->gamma = gamma;
    dc->infinite = infinite;
    dc->seed = *seed;
    double g_inv = infinite ? 0.0 : 1.0 / gamma;
    dc->norm_accum = [seed, g_inv](double x) { return g_inv + seed->integral_sq(x); };
    auto na = dc->norm_accum;
    dc->phi_tilde = [seed, na](double x) {
        auto s = seed->eval(x);
        double I = na(x);
        complex v = s.value / I;
        complex d = s.deriv / I - s.value * s.value * s.value / (I * I);
        return value_deriv{v, d};
    };
    return dc;
}

inline Potential make_dc_potential(const Potential& q, double lambda,
                                   const std::shared_ptr<real_solution>& seed, double g_inv,
                                   double l_new, const char* kind) {
    auto f = [q, seed, g_inv](double x) {
        auto s = seed->eval(x);
        double I = g_inv + seed->integral_sq(x);
        double sv = s.value.real(), sd = s.deriv.real();
        double s2 = sv * sv;
        return q(x) - 4 * sv * sd / I + 2 * s2 * s2 / (I * I);
    };
    auto df = [q, lambda, seed, g_inv](double x) {
        auto s = seed->eval(x);
        double I = g_inv + seed->integral_sq(x);
        double sv = s.value.real(), sd = s.deriv.real();
        double s2 = sv * sv;
        return q.derivative(x) - 4 * (sd * sd + (q(x) - lambda) * s2) / I +
               12 * s2 * sv * sd / (I * I) - 4 * s2 * s2 * s2 / (I * I * I);
    };
    return Potential::from_function(f, q.lower(), q.upper(), df, q.class_at_lower(),
                                    endpoint_class::limit_point, kind)
        .with_index(l_new)
        .with_cutoff(q.cutoff());
}

} // namespace detail

/// Double commutation with finite gamma > 0: inserts an eigenvalue of mass
/// gamma at lambda, leaves the singularity index unchanged, and maps the Weyl
/// function to  M(z) - gamma/(z - lambda).
inline TransformResult commute_double(const FundamentalSystem& base, double lambda, double gamma,
                                      const transform_options& opt = {}) {
    if (!(gamma > 0)) throw config_error("double commutation: gamma must be positive");
    auto basep = std::make_shared<FundamentalSystem>(base);
    if (!basep->phi_quad)
        throw numerical_error("commute-double",
                              "base system lacks the co-integrated quadrature needed here");
    if (basep->q.class_at_upper() == endpoint_class::limit_circle)
        throw numerical_error("commute-double",
                              "limit-circle right endpoint requires an eigenvalue seed; "
                              "not supported");
    auto seed = std::make_shared<real_solution>(basep->phi_at(lambda));
    if (!seed->integral_sq)
        throw numerical_error("commute-double", "seed lacks the square-integral accumulator");

    auto dc = detail::make_dc_data(seed, lambda, gamma, false);
    const double l_new = basep->q.index_l().value_or(0.0);
    Potential q_new =
        detail::make_dc_potential(basep->q, lambda, seed, 1.0 / gamma, l_new, "double-commuted");

    TransformResult out;
    out.q_new = q_new;
    out.lambda = lambda;
    out.kind = "double";
    out.seed = *seed;
    out.dc = dc;
    out.weyl_map.steps = {{weyl_map_step::kind::insert, lambda, gamma}};
    out.measure_map = {MeasureMap::kind::insert, lambda, gamma, std::nullopt};

    auto phi_tilde = dc->phi_tilde;

    // phi_gamma via the globally valid integral form.
    auto phi_new = [basep, seed, phi_tilde](complex z, const std::vector<double>& xs) {
        auto qs = basep->phi_quad(z, xs, *seed);
        std::vector<value_deriv> out(xs.size());
        for (size_t i = 0; i < xs.size(); ++i) {
            auto pt = phi_tilde(xs[i]);
            auto sv = seed->eval(xs[i]);
            complex v = qs[i].s.u - pt.value * qs[i].quad;
            complex d = qs[i].s.du - pt.deriv * qs[i].quad - pt.value * sv.value * qs[i].s.u;
            out[i] = {v, d};
        }
        return out;
    };
    auto theta_far = [basep, seed, phi_tilde, phi_new, lambda, gamma](
                         complex z, const std::vector<double>& xs) {
        auto ts = basep->theta(z, xs);
        auto pg = phi_new(z, xs);
        std::vector<value_deriv> out(xs.size());
        for (size_t i = 0; i < xs.size(); ++i) {
            auto s = seed->eval(xs[i]);
            auto pt = phi_tilde(xs[i]);
            complex W = s.value * ts[i].deriv - s.deriv * ts[i].value;
            complex dW = (lambda - z) * s.value * ts[i].value;
            complex corr = (pt.value * W + gamma * pg[i].value) / (z - lambda);
            complex dcorr = (pt.deriv * W + pt.value * dW + gamma * pg[i].deriv) / (z - lambda);
            out[i] = {ts[i].value + corr, ts[i].deriv + dcorr};
        }
        return out;
    };
    auto theta_new = [opt, lambda, theta_far](complex z, const std::vector<double>& xs) {
        if (std::abs(z - lambda) > opt.near_lambda_radius) return theta_far(z, xs);
        auto c = detail::ring_taylor3([&](complex zz) { return theta_far(zz, xs); },
                                      lambda, opt.ring_radius, xs.size());
        std::vector<value_deriv> out(xs.size());
        complex dz = z - lambda;
        for (size_t i = 0; i < xs.size(); ++i)
            out[i] = {c[i][0].value + dz * (c[i][1].value + dz * c[i][2].value),
                      c[i][0].deriv + dz * (c[i][1].deriv + dz * c[i][2].deriv)};
        return out;
    };

    auto phi_at_new = [basep, seed, phi_tilde, lambda, gamma](double lam2) {
        real_solution rs;
        rs.lambda = lam2;
        rs.x_hi = seed->x_hi;
        rs.leading_power = seed->leading_power;
        if (std::abs(lam2 - lambda) < 1e-12) {
            rs.eval = [phi_tilde, gamma](double x) {
                auto pt = phi_tilde(x);
                return value_deriv{pt.value / gamma, pt.deriv / gamma};
            };
        } else {
            auto v = std::make_shared<real_solution>(basep->phi_at(lam2));
            rs.x_hi = std::min(rs.x_hi, v->x_hi);
            rs.eval = [seed, phi_tilde, lambda, lam2, v](double x) {
                auto s = seed->eval(x);
                auto w = v->eval(x);
                auto pt = phi_tilde(x);
                complex W = s.value * w.deriv - s.deriv * w.value;
                complex dW = (lambda - lam2) * s.value * w.value;
                return value_deriv{w.value + pt.value * W / (lam2 - lambda),
                                   w.deriv + (pt.deriv * W + pt.value * dW) / (lam2 - lambda)};
            };
        }
        return rs;
    };
    auto theta_at_new = [basep, seed, phi_tilde, phi_at_new, lambda, gamma, opt,
                         theta_far](double lam2) {
        real_solution rs;
        rs.lambda = lam2;
        rs.x_hi = seed->x_hi;
        rs.leading_power = -seed->leading_power + 1;
        if (std::abs(lam2 - lambda) < 1e-12) {
            rs.eval = [lambda, opt, theta_far](double x) {
                auto c = detail::ring_taylor3(
                    [&](complex zz) { return theta_far(zz, {x}); }, lambda, opt.ring_radius, 1);
                return value_deriv{c[0][0].value, c[0][0].deriv};
            };
        } else {
            auto vt = std::make_shared<real_solution>(basep->theta_at(lam2));
            auto pg = std::make_shared<real_solution>(phi_at_new(lam2));
            rs.x_hi = std::min(rs.x_hi, vt->x_hi);
            rs.eval = [seed, phi_tilde, lambda, lam2, gamma, vt, pg](double x) {
                auto s = seed->eval(x);
                auto w = vt->eval(x);
                auto pt = phi_tilde(x);
                auto pgx = pg->eval(x);
                complex W = s.value * w.deriv - s.deriv * w.value;
                complex dW = (lambda - lam2) * s.value * w.value;
                complex corr = (pt.value * W + gamma * pgx.value) / (lam2 - lambda);
                complex dcorr =
                    (pt.deriv * W + pt.value * dW + gamma * pgx.deriv) / (lam2 - lambda);
                return value_deriv{w.value + corr, w.deriv + dcorr};
            };
        }
        return rs;
    };

    out.system.q = q_new;
    out.system.phi = phi_new;
    out.system.theta = theta_new;
    out.system.phi_at = phi_at_new;
    out.system.theta_at = theta_at_new;
    out.system.description =
        basep->description + " -> double-commuted (lambda=" + std::to_string(lambda) +
        ", gamma=" + std::to_string(gamma) + ")";
    return out;
}

/// The gamma = infinity limit: no eigenvalue is inserted, the singularity
/// index jumps by two, and the Weyl function is multiplied by (z - lambda)^2.
inline TransformResult commute_double_infinite(const FundamentalSystem& base, double lambda,
                                               const transform_options& opt = {}) {
    auto basep = std::make_shared<FundamentalSystem>(base);
    if (!basep->phi_quad)
        throw numerical_error("commute-double",
                              "base system lacks the co-integrated quadrature needed here");
    if (basep->q.class_at_upper() == endpoint_class::limit_circle)
        throw numerical_error("commute-double",
                              "limit-circle right endpoint requires an eigenvalue seed; "
                              "not supported");
    auto seed = std::make_shared<real_solution>(basep->phi_at(lambda));
    if (!seed->integral_sq)
        throw numerical_error("commute-double", "seed lacks the square-integral accumulator");

    auto dc = detail::make_dc_data(seed, lambda, 0.0, true);
    const double l_new = basep->q.index_l().value_or(0.0) + 2.0;
    Potential q_new =
        detail::make_dc_potential(basep->q, lambda, seed, 0.0, l_new, "double-commuted-inf");

    TransformResult out;
    out.q_new = q_new;
    out.lambda = lambda;
    out.kind = "double-inf";
    out.seed = *seed;
    out.dc = dc;
    out.weyl_map.steps = {{weyl_map_step::kind::square, lambda, 0}};
    out.measure_map = {MeasureMap::kind::square, lambda, 0, std::nullopt};

    auto phi_tilde = dc->phi_tilde;

    auto phi_far = [basep, seed, phi_tilde, lambda](complex z, const std::vector<double>& xs) {
        auto qs = basep->phi_quad(z, xs, *seed);
        std::vector<value_deriv> out(xs.size());
        for (size_t i = 0; i < xs.size(); ++i) {
            auto pt = phi_tilde(xs[i]);
            auto sv = seed->eval(xs[i]);
            complex v = (qs[i].s.u - pt.value * qs[i].quad) / (z - lambda);
            complex d =
                (qs[i].s.du - pt.deriv * qs[i].quad - pt.value * sv.value * qs[i].s.u) /
                (z - lambda);
            out[i] = {v, d};
        }
        return out;
    };
    auto phi_new = [opt, lambda, phi_far](complex z, const std::vector<double>& xs) {
        if (std::abs(z - lambda) > opt.near_lambda_radius) return phi_far(z, xs);
        auto c = detail::ring_taylor3([&](complex zz) { return phi_far(zz, xs); },
                                      lambda, opt.ring_radius, xs.size());
        std::vector<value_deriv> out(xs.size());
        complex dz = z - lambda;
        for (size_t i = 0; i < xs.size(); ++i)
            out[i] = {c[i][0].value + dz * (c[i][1].value + dz * c[i][2].value),
                      c[i][0].deriv + dz * (c[i][1].deriv + dz * c[i][2].deriv)};
        return out;
    };
    auto theta_new = [basep, seed, phi_tilde, lambda](complex z, const std::vector<double>& xs) {
        auto ts = basep->theta(z, xs);
        std::vector<value_deriv> out(xs.size());
        for (size_t i = 0; i < xs.size(); ++i) {
            auto s = seed->eval(xs[i]);
            auto pt = phi_tilde(xs[i]);
            complex W = s.value * ts[i].deriv - s.deriv * ts[i].value;
            complex dW = (lambda - z) * s.value * ts[i].value;
            out[i] = {(z - lambda) * ts[i].value + pt.value * W,
                      (z - lambda) * ts[i].deriv + pt.deriv * W + pt.value * dW};
        }
        return out;
    };

    auto phi_at_new = [opt, lambda, phi_far, basep, seed, phi_tilde](double lam2) {
        real_solution rs;
        rs.lambda = lam2;
        rs.x_hi = seed->x_hi;
        rs.leading_power = seed->leading_power + 2;
        if (std::abs(lam2 - lambda) < 1e-12) {
            rs.eval = [lambda, opt, phi_far](double x) {
                auto c = detail::ring_taylor3(
                    [&](complex zz) { return phi_far(zz, {x}); }, lambda, opt.ring_radius, 1);
                return value_deriv{c[0][0].value, c[0][0].deriv};
            };
        } else {
            auto v = std::make_shared<real_solution>(basep->phi_at(lam2));
            rs.x_hi = std::min(rs.x_hi, v->x_hi);
            rs.eval = [seed, phi_tilde, lambda, lam2, v](double x) {
                auto s = seed->eval(x);
                auto w = v->eval(x);
                auto pt = phi_tilde(x);
                complex W = s.value * w.deriv - s.deriv * w.value;
                complex dW = (lambda - lam2) * s.value * w.value;
                // (w + pt * W/(lam2-lambda)) / (lam2-lambda), written out
                complex num = w.value + pt.value * W / (lam2 - lambda);
                complex dnum = w.deriv + (pt.deriv * W + pt.value * dW) / (lam2 - lambda);
                return value_deriv{num / (lam2 - lambda), dnum / (lam2 - lambda)};
            };
        }
        return rs;
    };
    auto theta_at_new = [basep, seed, phi_tilde, lambda](double lam2) {
        real_solution rs;
        rs.lambda = lam2;
        rs.x_hi = seed->x_hi;
        rs.leading_power = -(seed->leading_power + 2);
        if (std::abs(lam2 - lambda) < 1e-12) {
            rs.eval = [phi_tilde](double x) {
                auto pt = phi_tilde(x);
                return value_deriv{-pt.value, -pt.deriv};
            };
        } else {
            auto vt = std::make_shared<real_solution>(basep->theta_at(lam2));
            rs.x_hi = std::min(rs.x_hi, vt->x_hi);
            rs.eval = [seed, phi_tilde, lambda, lam2, vt](double x) {
                auto s = seed->eval(x);
                auto w = vt->eval(x);
                auto pt = phi_tilde(x);
                complex W = s.value * w.deriv - s.deriv * w.value;
                complex dW = (lambda - lam2) * s.value * w.value;
                return value_deriv{(lam2 - lambda) * w.value + pt.value * W,
                                   (lam2 - lambda) * w.deriv + pt.deriv * W + pt.value * dW};
            };
        }
        return rs;
    };

    out.system.q = q_new;
    out.system.phi = phi_new;
    out.system.theta = theta_new;
    out.system.phi_at = phi_at_new;
    out.system.theta_at = theta_at_new;
    out.system.description =
        basep->description + " -> double-commuted (lambda=" + std::to_string(lambda) +
        ", gamma=inf)";
    return out;
}

/// Dispatch on finite vs infinite gamma.
inline TransformResult commute_double_any(const FundamentalSystem& base, double lambda,
                                          double gamma, bool infinite,
                                          const transform_options& opt = {}) {
    return infinite ? commute_double_infinite(base, lambda, opt)
                    : commute_double(base, lambda, gamma, opt);
}

} // namespace darboux
