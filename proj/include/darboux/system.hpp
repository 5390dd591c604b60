#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "darboux/errors.hpp"
#include "darboux/frobenius.hpp"
#include "darboux/ode.hpp"
#include "darboux/potential.hpp"

namespace darboux {

/// A real solution u(lambda, .) of -u'' + q u = lambda u with cheap repeated
/// evaluation (dense trajectory or closed formula behind the closure).
struct real_solution {
    double lambda = 0;
    std::function<value_deriv(double)> eval;
    /// int_a^x u(t)^2 dt including the part below any series launch point;
    /// empty when the integral does not exist or was not built.
    std::function<double(double)> integral_sq;
    double x_hi = 0;
    double leading_power = 0; // x -> a exponent, diagnostic only

    value_deriv operator()(double x) const { return eval(x); }
};

using batch_fn = std::function<std::vector<value_deriv>(complex, const std::vector<double>&)>;

/// Entire-in-z solution pair (phi, theta) with unit Wronskian attached to a
/// potential.  phi lies in the distinguished class near the left endpoint
/// (x^{l+1} type at a Bessel singularity, vanishing at a regular basepoint);
/// theta is the unit-Wronskian companion.
///
/// phi/theta evaluate in batch at ascending x.  phi_at/theta_at produce the
/// fixed-lambda evaluators the commutation transforms feed on.  phi_quad,
/// when present, returns phi(z, x) together with int_a^x w(t) phi(z,t) dt
/// accumulated at integrator accuracy; transformed systems may lack it.
struct FundamentalSystem {
    Potential q;
    batch_fn phi, theta;
    std::function<real_solution(double)> phi_at, theta_at;
    std::function<std::vector<quad_sample>(complex, const std::vector<double>&,
                                           const real_solution&)>
        phi_quad;
    std::string description;

    value_deriv phi1(complex z, double x) const { return phi(z, {x}).front(); }
    value_deriv theta1(complex z, double x) const { return theta(z, {x}).front(); }
};

namespace detail {

inline void require_ascending(const std::vector<double>& xs, const char* who) {
    for (size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1]))
            throw numerical_error("ode", std::string(who) + ": x values must be ascending");
}

/// Assemble a fixed-lambda solution from a forward trajectory, stitching in a
/// stable inward tail when the solution turns out to decay exponentially
/// toward b (an eigenvalue-type seed).  Outward integration of a decaying
/// solution is swamped by growing-solution contamination past the crossover
/// point; the inward pass from Liouville-Green data does not have that
/// problem, and the two branches are matched by a scalar at x_m.
inline real_solution assemble_lambda_solution(const Potential& q, double lambda, double xa,
                                              value_deriv launch, double x_hi,
                                              const ode_options& ode,
                                              std::function<value_deriv(double)> head,
                                              std::function<complex(double)> head_isq,
                                              double leading_power) {
    // integrate at unit launch scale so the absolute-tolerance floor cannot
    // swamp solutions that start at x^{l+1} ~ 1e-12, and undo the scale on
    // evaluation
    const double kappa = (std::abs(launch.value) >= 1e-150)
                             ? std::abs(launch.value)
                             : std::max(1.0, std::abs(launch.deriv));
    std::function<value_deriv(double)> head_scaled;
    if (head)
        head_scaled = [head, kappa](double x) {
            auto v = head(x);
            return value_deriv{v.value / kappa, v.deriv / kappa};
        };
    std::function<complex(double)> head_isq_scaled;
    if (head_isq)
        head_isq_scaled = [head_isq, kappa](double x) { return head_isq(x) / (kappa * kappa); };
    auto fwd = std::make_shared<SolutionTrajectory>(
        SolutionTrajectory::build(q, lambda, xa, launch.value / kappa, launch.deriv / kappa, x_hi,
                                  ode, head_scaled, head_isq_scaled));
    const bool with_isq = static_cast<bool>(head_isq) || !static_cast<bool>(head);

    real_solution rs;
    rs.lambda = lambda;
    rs.x_hi = x_hi;
    rs.leading_power = leading_power;

    // decay detection: compare realized growth against the WKB exponent
    double xm = xa + std::min(3.0 / std::sqrt(std::max(std::abs(lambda), 0.09)),
                              0.25 * (x_hi - xa));
    bool stitched = false;
    std::shared_ptr<SolutionTrajectory> inward;
    double scale = 1.0, x_match = xm;
    double tail_gap = q(x_hi) - lambda;
    if (tail_gap > std::max(0.02, 0.1 * std::abs(lambda))) {
        double expo = 0;
        const int n = 64;
        for (int i = 0; i < n; ++i) {
            double x = xm + (x_hi - xm) * (i + 0.5) / n;
            expo += std::sqrt(std::max(q(x) - lambda, 0.0)) * (x_hi - xm) / n;
        }
        double realized = std::log(std::abs(fwd->eval(x_hi).value) /
                                   std::max(std::abs(fwd->eval(xm).value), 1e-280));
        if (expo > 5.0 && realized < 0.5 * expo) {
            double zq = tail_gap;
            double w0 = -std::sqrt(zq) - q.derivative(x_hi) / (4 * zq);
            inward = std::make_shared<SolutionTrajectory>(SolutionTrajectory::build(
                q, lambda, x_hi, 1.0, w0, xm, ode));
            // match where the forward branch is still clean and not near a node
            for (double xc = xm; xc <= xm * 1.9 && xc < 0.4 * x_hi; xc *= 1.15) {
                auto vf = fwd->eval(xc);
                auto vi = inward->eval(xc);
                if (std::abs(vi.value) == 0.0 || std::abs(vf.value) == 0.0) continue;
                double c = vf.value.real() / vi.value.real();
                double mism = std::abs(c * vi.deriv - vf.deriv) /
                              (std::abs(vf.deriv) + std::abs(vf.value));
                if (mism < 1e-5) {
                    scale = c;
                    x_match = xc;
                    stitched = true;
                    break;
                }
            }
        }
    }

    if (!stitched) {
        rs.eval = [fwd, kappa](double x) {
            auto v = fwd->eval(x);
            return value_deriv{kappa * v.value, kappa * v.deriv};
        };
        if (with_isq)
            rs.integral_sq = [fwd, kappa](double x) {
                return kappa * kappa * fwd->integral_sq(x).real();
            };
        return rs;
    }
    rs.eval = [fwd, inward, scale, x_match, kappa](double x) {
        if (x <= x_match) {
            auto v = fwd->eval(x);
            return value_deriv{kappa * v.value, kappa * v.deriv};
        }
        auto v = inward->eval(x);
        return value_deriv{kappa * scale * v.value, kappa * scale * v.deriv};
    };
    if (with_isq) {
        double I_m = fwd->integral_sq(x_match).real();
        double Qin_m = inward->integral_sq(x_match).real();
        rs.integral_sq = [fwd, inward, scale, x_match, I_m, Qin_m, kappa](double x) {
            double k2 = kappa * kappa;
            if (x <= x_match) return k2 * fwd->integral_sq(x).real();
            return k2 * (I_m + scale * scale * (inward->integral_sq(x).real() - Qin_m));
        };
    }
    return rs;
}

/// Evaluate a solution launched from (x0, u0, du0) at ascending targets that
/// may straddle x0: one pass down for the targets below, one pass up.
inline std::vector<value_deriv> eval_straddle(const Potential& q, complex z, double x0, complex u0,
                                              complex du0, const std::vector<double>& xs,
                                              const ode_options& opt) {
    std::vector<value_deriv> out(xs.size());
    std::vector<double> below, above;
    std::vector<size_t> ib, ia;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] < x0) {
            below.push_back(xs[i]);
            ib.push_back(i);
        } else if (xs[i] == x0) {
            out[i] = {u0, du0};
        } else {
            above.push_back(xs[i]);
            ia.push_back(i);
        }
    }
    if (!below.empty()) {
        std::reverse(below.begin(), below.end());
        auto s = integrate(q, z, x0, u0, du0, below, opt);
        for (size_t k = 0; k < s.size(); ++k) out[ib[ib.size() - 1 - k]] = {s[k].u, s[k].du};
    }
    if (!above.empty()) {
        auto s = integrate(q, z, x0, u0, du0, above, opt);
        for (size_t k = 0; k < s.size(); ++k) out[ia[k]] = {s[k].u, s[k].du};
    }
    return out;
}

} // namespace detail

// --------------------------------------------------------------------------

struct regular_system_options {
    ode_options ode;
    double trajectory_margin = 2.0;
};

/// Fundamental system anchored at a regular basepoint c:
/// phi(z,c) = 0, phi'(z,c) = 1 and theta(z,c) = 1, theta'(z,c) = 0.
inline FundamentalSystem make_regular_system(const Potential& q, double c,
                                             regular_system_options opt = {}) {
    if (!q.in_domain(c))
        throw config_error("regular system: basepoint outside the potential domain");

    FundamentalSystem sys;
    sys.q = q;
    sys.description = "regular basepoint c=" + std::to_string(c);

    auto make_batch = [q, c, opt](complex u0, complex du0) {
        return [q, c, opt, u0, du0](complex z, const std::vector<double>& xs) {
            detail::require_ascending(xs, "regular system");
            return detail::eval_straddle(q, z, c, u0, du0, xs, opt.ode);
        };
    };
    sys.phi = make_batch(0.0, 1.0);
    sys.theta = make_batch(1.0, 0.0);

    const bool c_is_a = (c == q.lower());
    auto make_at = [q, c, opt, c_is_a](complex u0, complex du0) {
        return [q, c, opt, c_is_a, u0, du0](double lambda) {
            double x_hi = q.cutoff() + opt.trajectory_margin;
            real_solution up = detail::assemble_lambda_solution(
                q, lambda, c, {u0, du0}, x_hi, opt.ode, {}, {}, 0.0);
            if (c_is_a) return up;
            if (q.class_at_lower() != endpoint_class::regular)
                throw numerical_error("ode", "interior basepoint over a singular endpoint: use a "
                                             "singular fundamental system instead");
            auto down = std::make_shared<SolutionTrajectory>(
                SolutionTrajectory::build(q, lambda, c, u0, du0, q.lower(), opt.ode));
            double head = -down->integral_sq(q.lower()).real(); // int_a^c u^2
            real_solution rs;
            rs.lambda = lambda;
            rs.x_hi = x_hi;
            rs.leading_power = 0;
            auto up_eval = up.eval;
            rs.eval = [up_eval, down, c](double x) {
                if (x >= c) return up_eval(x);
                return down->eval(x);
            };
            auto up_isq = up.integral_sq;
            rs.integral_sq = [up_isq, down, c, head](double x) {
                if (x >= c) return head + up_isq(x);
                return head + down->integral_sq(x).real();
            };
            return rs;
        };
    };
    sys.phi_at = make_at(0.0, 1.0);
    sys.theta_at = make_at(1.0, 0.0);

    sys.phi_quad = [q, c, opt, c_is_a](complex z, const std::vector<double>& xs,
                                       const real_solution& w) {
        detail::require_ascending(xs, "regular system quad");
        for (double x : xs)
            if (x < c)
                throw numerical_error("ode", "phi_quad targets must lie above the basepoint");
        auto weight = [&w](double t) { return w.eval(t).value.real(); };
        complex head{0, 0};
        if (!c_is_a) {
            // quadrature head over (a, c) by an inward pass
            std::vector<double> endpt{q.lower()};
            auto down = integrate_with_quadrature(q, z, c, 0.0, 1.0, endpt, weight, opt.ode);
            head = -down.front().quad;
        }
        auto out = integrate_with_quadrature(q, z, c, 0.0, 1.0, xs, weight, opt.ode);
        for (auto& e : out) e.quad += head;
        return out;
    };
    return sys;
}

// --------------------------------------------------------------------------

struct bessel_system_options {
    double x_start = 1e-3;
    int series_terms = 64;
    ode_options ode;
    double trajectory_margin = 2.0;
};

namespace detail {

/// Launch point for the x^{-l} branch.  Integrating the subdominant branch
/// outward amplifies launch error by (x/x_start)^{2l+1}, so the theta series
/// is pushed out as far as convergence allows; the series itself covers the
/// range below.  Capped so that the amplification stays near 1e3.
inline double theta_launch_point(double l, double x_start_phi) {
    double xs = std::pow((2 * l + 1) * 1e3, -1.0 / (2 * l + 1));
    return std::max(x_start_phi, std::min(xs, 0.35));
}

} // namespace detail

/// Fundamental system for a perturbed Bessel potential, launched from the
/// singular endpoint at 0:
///   phi(z,x)   = x^{l+1} (1 + o(1)),
///   theta(z,x) = x^{-l}/(2l+1) (1 + o(1)),
/// so that W(theta, phi) = 1.  Requires the potential's singular expansion.
inline FundamentalSystem make_bessel_system(const Potential& q, bessel_system_options opt = {}) {
    if (!q.index_l())
        throw config_error("bessel system: potential carries no singularity index l");
    const double l = *q.index_l();
    if (std::abs(l + 0.5) < 1e-12)
        throw config_error("bessel system: l = -1/2 (logarithmic case) not supported");

    FundamentalSystem sys;
    sys.q = q;
    sys.description = "singular Bessel endpoint, l=" + std::to_string(l);

    auto make_batch = [q, opt, l](FrobeniusSolution::branch br) {
        const bool phi_branch = (br == FrobeniusSolution::branch::phi);
        const double xs0 = phi_branch ? opt.x_start
                                      : detail::theta_launch_point(l, opt.x_start);
        return [q, opt, br, xs0](complex z, const std::vector<double>& xs) {
            detail::require_ascending(xs, "bessel system");
            auto fs = std::make_shared<FrobeniusSolution>(q, z, br, opt.series_terms);
            double x_launch = xs0;
            while (fs->truncation_at(x_launch) > 1e-12 && x_launch > opt.x_start)
                x_launch = std::max(opt.x_start, x_launch / 1.6);
            if (fs->truncation_at(x_launch) > 1e-10)
                throw numerical_error("ode", "series launch not converged; reduce x_start");
            std::vector<value_deriv> out(xs.size());
            std::vector<double> above;
            std::vector<size_t> ia;
            for (size_t i = 0; i < xs.size(); ++i) {
                if (xs[i] < x_launch * (1 - 1e-12)) {
                    out[i] = fs->eval(xs[i]);
                } else {
                    above.push_back(xs[i]);
                    ia.push_back(i);
                }
            }
            if (!above.empty()) {
                auto vd0 = fs->eval(x_launch);
                double kappa = (std::abs(vd0.value) >= 1e-150)
                                   ? std::abs(vd0.value)
                                   : std::max(1.0, std::abs(vd0.deriv));
                auto s = integrate(q, z, x_launch, vd0.value / kappa, vd0.deriv / kappa, above,
                                   opt.ode);
                for (size_t k = 0; k < s.size(); ++k)
                    out[ia[k]] = {kappa * s[k].u, kappa * s[k].du};
            }
            return out;
        };
    };
    sys.phi = make_batch(FrobeniusSolution::branch::phi);
    sys.theta = make_batch(FrobeniusSolution::branch::theta);

    auto make_at = [q, opt, l](FrobeniusSolution::branch br) {
        return [q, opt, l, br](double lambda) {
            auto fs = std::make_shared<FrobeniusSolution>(q, lambda, br, opt.series_terms);
            const bool phi_branch = (br == FrobeniusSolution::branch::phi);
            double x_launch = phi_branch ? opt.x_start
                                         : detail::theta_launch_point(l, opt.x_start);
            while (fs->truncation_at(x_launch) > 1e-12 && x_launch > opt.x_start)
                x_launch = std::max(opt.x_start, x_launch / 1.6);
            if (fs->truncation_at(x_launch) > 1e-10)
                throw numerical_error("ode", "series launch not converged; reduce x_start");
            double x_hi = q.cutoff() + opt.trajectory_margin;
            auto vd0 = fs->eval(x_launch);
            return detail::assemble_lambda_solution(
                q, lambda, x_launch, vd0, x_hi, opt.ode,
                [fs](double x) { return fs->eval(x); },
                phi_branch ? std::function<complex(double)>(
                                 [fs](double x) { return fs->integral_sq(x); })
                           : std::function<complex(double)>{},
                phi_branch ? l + 1 : -l);
        };
    };
    sys.phi_at = make_at(FrobeniusSolution::branch::phi);
    sys.theta_at = make_at(FrobeniusSolution::branch::theta);

    sys.phi_quad = [q, opt](complex z, const std::vector<double>& xs, const real_solution& w) {
        detail::require_ascending(xs, "bessel system quad");
        FrobeniusSolution fs(q, z, FrobeniusSolution::branch::phi, opt.series_terms);
        auto vd0 = fs.eval(opt.x_start);
        auto weight = [&w](double t) { return w.eval(t).value.real(); };
        // head integral over (0, x_start): the integrand is a clean power
        // there, so a one-term power quadrature is ample
        auto head_at = [&](double x) {
            auto wv = w.eval(x);
            auto uv = fs.eval(x);
            double p = x * std::real(wv.deriv / wv.value + uv.deriv / uv.value);
            return wv.value.real() * uv.value * x / (p + 1);
        };
        std::vector<quad_sample> out(xs.size());
        std::vector<double> above;
        std::vector<size_t> ia;
        for (size_t i = 0; i < xs.size(); ++i) {
            if (xs[i] < opt.x_start * (1 - 1e-12)) {
                auto uv = fs.eval(xs[i]);
                out[i] = {SolutionSample{xs[i], uv.value, uv.deriv, z}, head_at(xs[i])};
            } else {
                above.push_back(xs[i]);
                ia.push_back(i);
            }
        }
        if (!above.empty()) {
            complex head = head_at(opt.x_start);
            double kappa = (std::abs(vd0.value) >= 1e-150)
                               ? std::abs(vd0.value)
                               : std::max(1.0, std::abs(vd0.deriv));
            auto s = integrate_with_quadrature(q, z, opt.x_start, vd0.value / kappa,
                                               vd0.deriv / kappa, above, weight, opt.ode);
            for (size_t k = 0; k < s.size(); ++k) {
                s[k].s.u *= kappa;
                s[k].s.du *= kappa;
                s[k].quad = kappa * s[k].quad + head;
                out[ia[k]] = s[k];
            }
        }
        return out;
    };
    return sys;
}

/// q == 0 on (0, inf) with the Dirichlet basepoint at 0:
/// phi = sin(sqrt(z) x)/sqrt(z), theta = cos(sqrt(z) x).
inline FundamentalSystem make_free_system(double cutoff = 40.0, regular_system_options opt = {}) {
    return make_regular_system(Potential::free_particle().with_cutoff(cutoff), 0.0, opt);
}

} // namespace darboux
