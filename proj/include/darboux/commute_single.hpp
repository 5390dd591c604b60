#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "darboux/errors.hpp"
#include "darboux/system.hpp"
#include "darboux/weyl.hpp"

namespace darboux {

namespace detail {

/// Taylor coefficients of an analytic (batched) function about z0 from a
/// trapezoidal contour rule on |z - z0| = R.  Used to evaluate transform
/// formulas across their removable singularity at z = lambda.
template <class BatchFn>
std::vector<std::array<value_deriv, 3>> ring_taylor3(const BatchFn& f, complex z0, double R,
                                                     size_t m, int npts = 16) {
    std::vector<std::array<value_deriv, 3>> c(m);
    for (int j = 0; j < npts; ++j) {
        double th = 2 * M_PI * j / npts;
        complex w = std::polar(R, th);
        auto vals = f(z0 + w);
        for (size_t i = 0; i < m; ++i) {
            for (int k = 0; k < 3; ++k) {
                complex ph = std::exp(complex(0, -k * th)) / std::pow(R, k) /
                             static_cast<double>(npts);
                c[i][static_cast<size_t>(k)].value += vals[i].value * ph;
                c[i][static_cast<size_t>(k)].deriv += vals[i].deriv * ph;
            }
        }
    }
    return c;
}

inline std::vector<double> certificate_grid(const Potential& q) {
    std::vector<double> g;
    double hi = q.cutoff();
    double lo = q.lower();
    if (std::isfinite(lo) && lo > -1e300 && hi > lo) {
        double span = hi - lo;
        double mid = std::min(lo + 1.0, lo + 0.5 * span);
        for (int i = 0; i < 32; ++i)
            g.push_back(lo + (mid - lo) * std::pow(1e-3, 1.0 - i / 31.0));
        for (int i = 1; i <= 64; ++i) g.push_back(mid + (hi - mid) * i / 64.0 * (1 - 1e-9));
    }
    return g;
}

inline void check_positive(const real_solution& s, const std::vector<double>& grid,
                           const char* what) {
    for (double x : grid) {
        double v = s.eval(x).value.real();
        if (!(v > 0))
            throw numerical_error("commute-single", std::string(what) +
                                                        " not positive at x=" + std::to_string(x));
    }
}

} // namespace detail

// --------------------------------------------------------------------------

/// Closed-form record of how a transform acts on the singular Weyl function.
struct weyl_map_step {
    enum class kind {
        hat,    // M -> (z - lambda) M
        check,  // M -> M / (z - lambda)
        insert, // M -> M - gamma / (z - lambda)
        square  // M -> (z - lambda)^2 M
    };
    kind k = kind::hat;
    double lambda = 0;
    double gamma = 0;
};

struct WeylMap {
    std::vector<weyl_map_step> steps;

    complex apply(complex z, complex M) const {
        for (const auto& s : steps) {
            switch (s.k) {
            case weyl_map_step::kind::hat: M *= (z - s.lambda); break;
            case weyl_map_step::kind::check: M /= (z - s.lambda); break;
            case weyl_map_step::kind::insert: M -= s.gamma / (z - s.lambda); break;
            case weyl_map_step::kind::square: M *= (z - s.lambda) * (z - s.lambda); break;
            }
        }
        return M;
    }

    std::string describe() const {
        std::ostringstream os;
        os << "M'(z) = ";
        std::string tail;
        for (const auto& s : steps) {
            switch (s.k) {
            case weyl_map_step::kind::hat: os << "(z - (" << s.lambda << ")) * "; break;
            case weyl_map_step::kind::check: os << "1/(z - (" << s.lambda << ")) * "; break;
            case weyl_map_step::kind::insert:
                tail += " - " + std::to_string(s.gamma) + "/(z - (" + std::to_string(s.lambda) +
                        "))";
                break;
            case weyl_map_step::kind::square:
                os << "(z - (" << s.lambda << "))^2 * ";
                break;
            }
        }
        os << "M(z)" << tail;
        return os.str();
    }
};

/// How the transform acts on the spectral measure, as data plus a printable
/// description.
struct MeasureMap {
    enum class kind { hat, check, insert, square };
    kind k = kind::hat;
    double lambda = 0;
    double gamma = 0;
    std::optional<complex> M_at_lambda; // left-limit constant for the check map

    std::string describe() const {
        std::ostringstream os;
        switch (k) {
        case kind::hat: os << "rho'(dt) = (t - (" << lambda << ")) rho(dt)"; break;
        case kind::check:
            os << "rho'(dt) = rho(dt)/(t - (" << lambda << "))";
            if (M_at_lambda)
                os << " - M(lambda) * step(t - lambda), M(lambda) = (" << M_at_lambda->real()
                   << "," << M_at_lambda->imag() << ")";
            else
                os << " - M(lambda) * step(t - lambda), M(lambda) unavailable (lambda at the "
                      "spectral edge)";
            break;
        case kind::insert:
            os << "rho'(dt) = rho(dt) + " << gamma << " * atom at t = " << lambda;
            break;
        case kind::square: os << "rho'(dt) = (t - (" << lambda << "))^2 rho(dt)"; break;
        }
        return os.str();
    }
};

struct DoubleCommutationData; // defined in commute_double.hpp

/// Result of one commutation step: the transformed potential, the transformed
/// fundamental system (unit Wronskian), and the induced Weyl/measure maps.
struct TransformResult {
    Potential q_new;
    FundamentalSystem system;
    WeylMap weyl_map;
    MeasureMap measure_map;
    double lambda = 0;
    std::string kind;
    real_solution seed;
    std::vector<double> certificate_grid;
    std::shared_ptr<DoubleCommutationData> dc;
};

struct transform_options {
    double near_lambda_radius = 1e-4; // |z - lambda| below which ring forms kick in
    double ring_radius = 1e-2;
    bool compute_measure_constants = true;
    weyl_options weyl; // used when a measure constant must be evaluated
};

// --------------------------------------------------------------------------

/// a_seed u = (seed'/seed) u - u', the first-order factorization operator
/// applied to a solution sample at z.  Maps solutions of the base equation to
/// solutions of the phi-commuted one.
inline value_deriv commuted_solution(const real_solution& seed, const value_deriv& u, complex z,
                                     double x) {
    auto s = seed.eval(x);
    if (s.value == complex(0, 0))
        throw numerical_error("commute-single", "seed vanishes at x=" + std::to_string(x));
    complex r = s.deriv / s.value;
    complex uh = r * u.value - u.deriv;
    complex duh = (z - seed.lambda) * u.value - r * uh;
    return {uh, duh};
}

/// Commutation built from the positive solution phi(lambda, .): the
/// transformed potential picks up one more unit of the singularity index and
/// the Weyl function is multiplied by (z - lambda).
inline TransformResult commute_phi(const FundamentalSystem& base, double lambda,
                                   const transform_options& opt = {}) {
    auto basep = std::make_shared<FundamentalSystem>(base);
    auto seed = std::make_shared<real_solution>(basep->phi_at(lambda));
    auto grid = detail::certificate_grid(basep->q);
    detail::check_positive(*seed, grid, "phi(lambda, .)");

    const Potential q = basep->q;
    const double l_new = q.index_l().value_or(0.0) + 1.0;

    auto r_of = [seed](double x) {
        auto s = seed->eval(x);
        return (s.deriv / s.value).real();
    };
    auto q_hat_f = [q, lambda, r_of](double x) {
        double r = r_of(x);
        return 2 * lambda - q(x) + 2 * r * r;
    };
    auto q_hat_df = [q, lambda, r_of](double x) {
        double r = r_of(x);
        double dr = q(x) - lambda - r * r;
        return -q.derivative(x) + 4 * r * dr;
    };
    Potential q_new =
        Potential::from_function(q_hat_f, q.lower(), q.upper(), q_hat_df,
                                 l_new >= 0.5 ? endpoint_class::limit_point
                                              : endpoint_class::limit_circle,
                                 q.class_at_upper(), "commuted-phi")
            .with_index(l_new)
            .with_cutoff(q.cutoff());

    TransformResult out;
    out.q_new = q_new;
    out.lambda = lambda;
    out.kind = "single-phi";
    out.seed = *seed;
    out.certificate_grid = grid;
    out.weyl_map.steps = {{weyl_map_step::kind::hat, lambda, 0}};
    out.measure_map = {MeasureMap::kind::hat, lambda, 0, std::nullopt};

    // hat(phi): (r v - v') / (z - lambda) with the removable point at lambda
    // served by the co-integrated quadrature form or a contour Taylor stencil.
    auto phi_wronskian_form = [basep, seed, lambda](complex z, const std::vector<double>& xs) {
        auto vs = basep->phi(z, xs);
        std::vector<value_deriv> out(xs.size());
        for (size_t i = 0; i < xs.size(); ++i) {
            auto s = seed->eval(xs[i]);
            complex r = s.deriv / s.value;
            complex uh = (r * vs[i].value - vs[i].deriv) / (z - lambda);
            out[i] = {uh, vs[i].value - r * uh};
        }
        return out;
    };
    auto phi_new = [basep, seed, lambda, opt,
                    phi_wronskian_form](complex z, const std::vector<double>& xs) {
        if (std::abs(z - lambda) > opt.near_lambda_radius) return phi_wronskian_form(z, xs);
        if (basep->phi_quad) {
            auto qs = basep->phi_quad(z, xs, *seed);
            std::vector<value_deriv> out(xs.size());
            for (size_t i = 0; i < xs.size(); ++i) {
                auto s = seed->eval(xs[i]);
                complex r = s.deriv / s.value;
                complex uh = qs[i].quad / s.value;
                out[i] = {uh, qs[i].s.u - r * uh};
            }
            return out;
        }
        auto c = detail::ring_taylor3([&](complex zz) { return phi_wronskian_form(zz, xs); },
                                      lambda, opt.ring_radius, xs.size());
        std::vector<value_deriv> out(xs.size());
        complex dz = z - lambda;
        for (size_t i = 0; i < xs.size(); ++i)
            out[i] = {c[i][0].value + dz * (c[i][1].value + dz * c[i][2].value),
                      c[i][0].deriv + dz * (c[i][1].deriv + dz * c[i][2].deriv)};
        return out;
    };
    auto theta_new = [basep, seed, lambda](complex z, const std::vector<double>& xs) {
        auto vs = basep->theta(z, xs);
        std::vector<value_deriv> out(xs.size());
        for (size_t i = 0; i < xs.size(); ++i) {
            auto s = seed->eval(xs[i]);
            complex r = s.deriv / s.value;
            complex th = r * vs[i].value - vs[i].deriv;
            out[i] = {th, (z - lambda) * vs[i].value - r * th};
        }
        return out;
    };

    auto phi_at_new = [basep, seed, lambda](double lam2) {
        real_solution rs;
        rs.lambda = lam2;
        rs.x_hi = seed->x_hi;
        rs.leading_power = seed->leading_power + 1;
        if (std::abs(lam2 - lambda) < 1e-12) {
            if (!seed->integral_sq)
                throw numerical_error("commute-single",
                                      "transformed seed has no square-integral accumulator; "
                                      "phi at the transform energy is unavailable");
            rs.eval = [seed](double x) {
                auto s = seed->eval(x);
                complex r = s.deriv / s.value;
                complex uh = seed->integral_sq(x) / s.value;
                return value_deriv{uh, s.value - r * uh};
            };
        } else {
            auto v = std::make_shared<real_solution>(basep->phi_at(lam2));
            rs.x_hi = std::min(rs.x_hi, v->x_hi);
            rs.eval = [seed, v, lambda, lam2](double x) {
                auto s = seed->eval(x);
                auto w = v->eval(x);
                complex r = s.deriv / s.value;
                complex uh = (r * w.value - w.deriv) / (lam2 - lambda);
                return value_deriv{uh, w.value - r * uh};
            };
        }
        return rs;
    };
    auto theta_at_new = [basep, seed, lambda](double lam2) {
        real_solution rs;
        rs.lambda = lam2;
        rs.x_hi = seed->x_hi;
        rs.leading_power = -(seed->leading_power);
        if (std::abs(lam2 - lambda) < 1e-12) {
            rs.eval = [seed](double x) {
                auto s = seed->eval(x);
                complex r = s.deriv / s.value;
                return value_deriv{1.0 / s.value, -r / s.value};
            };
        } else {
            auto v = std::make_shared<real_solution>(basep->theta_at(lam2));
            rs.x_hi = std::min(rs.x_hi, v->x_hi);
            rs.eval = [seed, v, lambda, lam2](double x) {
                auto s = seed->eval(x);
                auto w = v->eval(x);
                complex r = s.deriv / s.value;
                complex th = r * w.value - w.deriv;
                return value_deriv{th, (lam2 - lambda) * w.value - r * th};
            };
        }
        return rs;
    };

    out.system.q = q_new;
    out.system.phi = phi_new;
    out.system.theta = theta_new;
    out.system.phi_at = phi_at_new;
    out.system.theta_at = theta_at_new;
    out.system.description = basep->description + " -> phi-commuted at lambda=" +
                             std::to_string(lambda);
    return out;
}

/// Commutation built from the positive solution theta(lambda, .): lowers the
/// singularity index and divides the Weyl function by (z - lambda).  Requires
/// the limit-point case at the left endpoint.
inline TransformResult commute_theta(const FundamentalSystem& base, double lambda,
                                     const transform_options& opt = {}) {
    auto basep = std::make_shared<FundamentalSystem>(base);
    if (basep->q.class_at_lower() != endpoint_class::limit_point)
        throw numerical_error("commute-single",
                              "theta commutation requires the limit-point case at a");
    auto seed = std::make_shared<real_solution>(basep->theta_at(lambda));
    auto grid = detail::certificate_grid(basep->q);
    detail::check_positive(*seed, grid, "theta(lambda, .)");

    const Potential q = basep->q;
    const double l_new = q.index_l().value_or(1.0) - 1.0;

    auto r_of = [seed](double x) {
        auto s = seed->eval(x);
        return (s.deriv / s.value).real();
    };
    auto q_chk_f = [q, lambda, r_of](double x) {
        double r = r_of(x);
        return 2 * lambda - q(x) + 2 * r * r;
    };
    auto q_chk_df = [q, lambda, r_of](double x) {
        double r = r_of(x);
        double dr = q(x) - lambda - r * r;
        return -q.derivative(x) + 4 * r * dr;
    };
    Potential q_new =
        Potential::from_function(q_chk_f, q.lower(), q.upper(), q_chk_df,
                                 l_new >= 0.5 ? endpoint_class::limit_point
                                              : endpoint_class::limit_circle,
                                 q.class_at_upper(), "commuted-theta")
            .with_index(l_new)
            .with_cutoff(q.cutoff());

    TransformResult out;
    out.q_new = q_new;
    out.lambda = lambda;
    out.kind = "single-theta";
    out.seed = *seed;
    out.certificate_grid = grid;
    out.weyl_map.steps = {{weyl_map_step::kind::check, lambda, 0}};
    out.measure_map = {MeasureMap::kind::check, lambda, 0, std::nullopt};
    if (opt.compute_measure_constants && lambda <= -1e-2) {
        try {
            out.measure_map.M_at_lambda = weyl_real_below(*basep, lambda, opt.weyl);
        } catch (const numerical_error&) {
            out.measure_map.M_at_lambda.reset();
        }
    }

    auto phi_new = [basep, seed, lambda](complex z, const std::vector<double>& xs) {
        auto vs = basep->phi(z, xs);
        std::vector<value_deriv> out(xs.size());
        for (size_t i = 0; i < xs.size(); ++i) {
            auto s = seed->eval(xs[i]);
            complex r = s.deriv / s.value;
            complex uc = vs[i].deriv - r * vs[i].value;
            out[i] = {uc, (lambda - z) * vs[i].value - r * uc};
        }
        return out;
    };
    auto theta_wronskian_form = [basep, seed, lambda](complex z, const std::vector<double>& xs) {
        auto vs = basep->theta(z, xs);
        std::vector<value_deriv> out(xs.size());
        for (size_t i = 0; i < xs.size(); ++i) {
            auto s = seed->eval(xs[i]);
            complex r = s.deriv / s.value;
            complex tc = (vs[i].deriv - r * vs[i].value) / (z - lambda);
            out[i] = {tc, -vs[i].value - r * tc};
        }
        return out;
    };
    auto theta_new = [opt, lambda, theta_wronskian_form](complex z,
                                                         const std::vector<double>& xs) {
        if (std::abs(z - lambda) > opt.near_lambda_radius) return theta_wronskian_form(z, xs);
        auto c = detail::ring_taylor3([&](complex zz) { return theta_wronskian_form(zz, xs); },
                                      lambda, opt.ring_radius, xs.size());
        std::vector<value_deriv> out(xs.size());
        complex dz = z - lambda;
        for (size_t i = 0; i < xs.size(); ++i)
            out[i] = {c[i][0].value + dz * (c[i][1].value + dz * c[i][2].value),
                      c[i][0].deriv + dz * (c[i][1].deriv + dz * c[i][2].deriv)};
        return out;
    };

    auto phi_at_new = [basep, seed, lambda](double lam2) {
        real_solution rs;
        rs.lambda = lam2;
        rs.x_hi = seed->x_hi;
        rs.leading_power = -(seed->leading_power);
        if (std::abs(lam2 - lambda) < 1e-12) {
            rs.eval = [seed](double x) {
                auto s = seed->eval(x);
                complex r = s.deriv / s.value;
                return value_deriv{1.0 / s.value, -r / s.value};
            };
        } else {
            auto v = std::make_shared<real_solution>(basep->phi_at(lam2));
            rs.x_hi = std::min(rs.x_hi, v->x_hi);
            rs.eval = [seed, v, lambda, lam2](double x) {
                auto s = seed->eval(x);
                auto w = v->eval(x);
                complex r = s.deriv / s.value;
                complex uc = w.deriv - r * w.value;
                return value_deriv{uc, (lambda - lam2) * w.value - r * uc};
            };
        }
        return rs;
    };
    auto theta_at_new = [basep, seed, lambda, opt, theta_wronskian_form](double lam2) {
        real_solution rs;
        rs.lambda = lam2;
        rs.x_hi = seed->x_hi;
        rs.leading_power = seed->leading_power + 1; // -l + 1 = -(l-1)
        if (std::abs(lam2 - lambda) < 1e-12) {
            rs.eval = [lambda, opt, theta_wronskian_form](double x) {
                auto c = detail::ring_taylor3(
                    [&](complex zz) { return theta_wronskian_form(zz, {x}); }, lambda,
                    opt.ring_radius, 1);
                return value_deriv{c[0][0].value, c[0][0].deriv};
            };
        } else {
            auto v = std::make_shared<real_solution>(basep->theta_at(lam2));
            rs.x_hi = std::min(rs.x_hi, v->x_hi);
            rs.eval = [seed, v, lambda, lam2](double x) {
                auto s = seed->eval(x);
                auto w = v->eval(x);
                complex r = s.deriv / s.value;
                complex tc = (w.deriv - r * w.value) / (lam2 - lambda);
                return value_deriv{tc, -w.value - r * tc};
            };
        }
        return rs;
    };

    out.system.q = q_new;
    out.system.phi = phi_new;
    out.system.theta = theta_new;
    out.system.phi_at = phi_at_new;
    out.system.theta_at = theta_at_new;
    out.system.description = basep->description + " -> theta-commuted at lambda=" +
                             std::to_string(lambda);
    return out;
}

// --------------------------------------------------------------------------

/// The radial Coulomb ladder: iterated phi-commutations at the factorization
/// energies lambda_k = -(gamma / (2(k+1)))^2 climb the singularity index from
/// 0 to l, multiplying the Weyl function by prod_k (z - lambda_k).
struct LadderResult {
    FundamentalSystem base;
    std::vector<TransformResult> steps;
    WeylMap weyl_map; // cumulative product
    std::vector<double> lambdas;
};

inline LadderResult coulomb_ladder(int l, double gamma, const bessel_system_options& bopts = {},
                                   const transform_options& topts = {}) {
    if (l < 1) throw config_error("coulomb_ladder: need l >= 1");
    LadderResult lr;
    lr.base = make_bessel_system(Potential::coulomb(0, gamma), bopts);
    FundamentalSystem cur = lr.base;
    for (int k = 0; k < l; ++k) {
        double ck = gamma / (2.0 * (k + 1));
        double lam = -ck * ck;
        lr.lambdas.push_back(lam);
        auto tr = commute_phi(cur, lam, topts);
        cur = tr.system;
        lr.weyl_map.steps.push_back({weyl_map_step::kind::hat, lam, 0});
        lr.steps.push_back(std::move(tr));
    }
    return lr;
}

} // namespace darboux
