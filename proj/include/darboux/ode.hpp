#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "darboux/branch.hpp"
#include "darboux/errors.hpp"
#include "darboux/potential.hpp"

namespace darboux {

using state_vec = std::vector<complex>;

struct ode_options {
    double rtol = 1e-10;
    double atol = 1e-12;
    double initial_step = 0.0; // 0 = automatic
    long max_steps = 4'000'000;
};

struct value_deriv {
    complex value{0.0, 0.0};
    complex deriv{0.0, 0.0};
};

namespace detail {

// Dormand-Prince 5(4) coefficients.
struct dopri5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

inline void axpy(state_vec& out, const state_vec& y, double h,
                 std::initializer_list<std::pair<double, const state_vec*>> terms) {
    const size_t n = y.size();
    for (size_t i = 0; i < n; ++i) {
        complex acc = y[i];
        for (auto& [w, k] : terms) acc += (h * w) * (*k)[i];
        out[i] = acc;
    }
}

/// Two-point quintic Taylor interpolation from (f, f', f'') at both ends.
inline std::pair<complex, complex> two_point_quintic(double x, double x0, double x1, complex f0,
                                                     complex d0, complex s0, complex f1,
                                                     complex d1, complex s1) {
    const double h = x1 - x0, t = x - x0;
    const complex A = f1 - (f0 + d0 * h + s0 * (h * h / 2));
    const complex B = d1 - (d0 + s0 * h);
    const complex C = s1 - s0;
    const complex a = A / (h * h * h), b = B / (h * h), c = C / h;
    const complex c3 = 10.0 * a - 4.0 * b + 0.5 * c;
    const complex c4h = -15.0 * a + 7.0 * b - c;      // = c4 * h
    const complex c5h2 = 6.0 * a - 3.0 * b + 0.5 * c; // = c5 * h^2
    const double r = t / h;
    complex val = f0 + d0 * t + s0 * (t * t / 2) + t * t * t * (c3 + c4h * r + c5h2 * r * r);
    complex der = d0 + s0 * t + t * t * (3.0 * c3 + 4.0 * c4h * r + 5.0 * c5h2 * r * r);
    return {val, der};
}

} // namespace detail

/// Adaptive Dormand-Prince 5(4) driver over a complex state vector.
///
/// Integrates rhs from x0 to x1 (either direction).  `checkpoints` must be
/// sorted in the direction of integration and lie inside [x0, x1]; the solver
/// lands on them exactly and invokes on_checkpoint.  on_accepted, when given,
/// sees every accepted step (for dense trajectory construction).
template <class RHS>
void integrate_adaptive(
    RHS&& rhs, double x0, double x1, state_vec& y, const ode_options& opt,
    const std::vector<double>& checkpoints = {},
    const std::function<void(double, const state_vec&, const state_vec&)>& on_checkpoint = {},
    const std::function<void(double, const state_vec&, const state_vec&)>& on_accepted = {}) {
    using tab = detail::dopri5;
    const size_t n = y.size();
    const double dir = (x1 >= x0) ? 1.0 : -1.0;
    double x = x0;

    state_vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
    rhs(x, y, k1);

    auto weighted_norm = [&](const state_vec& e, const state_vec& ya, const state_vec& yb) {
        double s = 0;
        for (size_t i = 0; i < n; ++i) {
            double sc = opt.atol + opt.rtol * std::max(std::abs(ya[i]), std::abs(yb[i]));
            double r = std::abs(e[i]) / sc;
            s += r * r;
        }
        return std::sqrt(s / static_cast<double>(n));
    };

    size_t next_cp = 0;
    auto at_checkpoint = [&](double xc) {
        while (next_cp < checkpoints.size() &&
               (checkpoints[next_cp] - xc) * dir <= 1e-13 * std::max(1.0, std::abs(xc))) {
            if (on_checkpoint) on_checkpoint(checkpoints[next_cp], y, k1);
            ++next_cp;
        }
    };
    if (on_accepted) on_accepted(x, y, k1);
    at_checkpoint(x);

    if (x0 == x1) return;

    // initial step-size guess
    double h;
    if (opt.initial_step > 0) {
        h = dir * opt.initial_step;
    } else {
        double d0 = 0, d1 = 0;
        for (size_t i = 0; i < n; ++i) {
            double sc = opt.atol + opt.rtol * std::abs(y[i]);
            d0 = std::max(d0, std::abs(y[i]) / sc);
            d1 = std::max(d1, std::abs(k1[i]) / sc);
        }
        h = dir * ((d0 > 1e-8 && d1 > 1e-8) ? 0.01 * d0 / d1 : 1e-4);
    }
    if (std::abs(h) > std::abs(x1 - x0)) h = x1 - x0;

    long steps = 0;
    while ((x1 - x) * dir > 1e-14 * std::max(1.0, std::abs(x))) {
        if (++steps > opt.max_steps)
            throw numerical_error("ode", "step limit exceeded at x=" + std::to_string(x));
        // do not overshoot the endpoint or the next checkpoint
        double limit = x1;
        if (next_cp < checkpoints.size() && (checkpoints[next_cp] - limit) * dir < 0)
            limit = checkpoints[next_cp];
        if ((x + h - limit) * dir > 0) h = limit - x;
        if (std::abs(h) < 16 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)))
            throw numerical_error("ode", "step size underflow at x=" + std::to_string(x));

        detail::axpy(ytmp, y, h, {{tab::a21, &k1}});
        rhs(x + tab::c2 * h, ytmp, k2);
        detail::axpy(ytmp, y, h, {{tab::a31, &k1}, {tab::a32, &k2}});
        rhs(x + tab::c3 * h, ytmp, k3);
        detail::axpy(ytmp, y, h, {{tab::a41, &k1}, {tab::a42, &k2}, {tab::a43, &k3}});
        rhs(x + tab::c4 * h, ytmp, k4);
        detail::axpy(ytmp, y, h,
                     {{tab::a51, &k1}, {tab::a52, &k2}, {tab::a53, &k3}, {tab::a54, &k4}});
        rhs(x + tab::c5 * h, ytmp, k5);
        detail::axpy(ytmp, y, h,
                     {{tab::a61, &k1}, {tab::a62, &k2}, {tab::a63, &k3}, {tab::a64, &k4},
                      {tab::a65, &k5}});
        rhs(x + h, ytmp, k6);
        detail::axpy(ynew, y, h,
                     {{tab::b1, &k1}, {tab::b3, &k3}, {tab::b4, &k4}, {tab::b5, &k5},
                      {tab::b6, &k6}});
        rhs(x + h, ynew, k7);
        for (size_t i = 0; i < n; ++i)
            err[i] = h * (tab::e1 * k1[i] + tab::e3 * k3[i] + tab::e4 * k4[i] + tab::e5 * k5[i] +
                          tab::e6 * k6[i] + tab::e7 * k7[i]);

        double e = weighted_norm(err, y, ynew);
        if (e <= 1.0) {
            x += h;
            y.swap(ynew);
            k1.swap(k7);
            if (on_accepted) on_accepted(x, y, k1);
            at_checkpoint(x);
            double f = (e > 0) ? 0.9 * std::pow(e, -0.2) : 5.0;
            h *= std::clamp(f, 0.2, 5.0);
        } else {
            h *= std::max(0.2, 0.9 * std::pow(e, -0.2));
        }
    }
}

// --------------------------------------------------------------------------

/// One sample of a solution of  -u'' + (q - z) u = 0.
struct SolutionSample {
    double x = 0;
    complex u{0, 0};
    complex du{0, 0};
    complex z{0, 0};
};

/// W_x(u1, u2) = u1 u2' - u1' u2 for two samples at the same point and
/// spectral parameter.
inline complex wronskian(const SolutionSample& s1, const SolutionSample& s2) {
    if (s1.x != s2.x)
        throw numerical_error("ode", "wronskian: samples taken at different x");
    if (s1.z != s2.z)
        throw numerical_error("ode", "wronskian: samples taken at different z");
    return s1.u * s2.du - s1.du * s2.u;
}

inline complex wronskian_vd(const value_deriv& a, const value_deriv& b) {
    return a.value * b.deriv - a.deriv * b.value;
}

/// Integrate -u'' + (q - z) u = 0 from (u0, du0) at x0, sampling the solution
/// at the given targets.  Targets must be monotone (either direction) and lie
/// in the domain of q, as must x0.
///
/// When `quad_weight` is given, the running integral  Q(x) = int_{x0}^x
/// w(t) u(t) dt  is carried as an extra state and reported per sample.
struct quad_sample {
    SolutionSample s;
    complex quad{0, 0};
};

inline std::vector<quad_sample>
integrate_with_quadrature(const Potential& q, complex z, double x0, complex u0, complex du0,
                          const std::vector<double>& targets,
                          const std::function<double(double)>& quad_weight,
                          const ode_options& opt = {}) {
    if (!targets.empty()) {
        const double dir = (targets.back() >= x0) ? 1.0 : -1.0;
        if ((targets.front() - x0) * dir < 0)
            throw numerical_error("ode", "targets must lie on one side of the initial point");
        for (size_t i = 1; i < targets.size(); ++i)
            if ((targets[i] - targets[i - 1]) * dir <= 0)
                throw numerical_error("ode", "targets must be strictly monotone");
    }
    for (double t : targets)
        if (!q.in_domain(t))
            throw numerical_error("ode", "target outside potential domain: x=" + std::to_string(t));
    if (!q.in_domain(x0))
        throw numerical_error("ode", "initial point outside domain: x=" + std::to_string(x0));

    const bool with_quad = static_cast<bool>(quad_weight);
    state_vec y = with_quad ? state_vec{u0, du0, complex(0, 0)} : state_vec{u0, du0};
    auto rhs = [&](double x, const state_vec& s, state_vec& ds) {
        ds[0] = s[1];
        ds[1] = (q(x) - z) * s[0];
        if (with_quad) ds[2] = quad_weight(x) * s[0];
    };

    std::vector<quad_sample> out;
    out.reserve(targets.size());
    if (targets.empty()) return out;

    const double x_end = targets.back();
    auto capture = [&](double xc, const state_vec& s, const state_vec&) {
        out.push_back({SolutionSample{xc, s[0], s[1], z}, with_quad ? s[2] : complex(0, 0)});
    };
    integrate_adaptive(rhs, x0, x_end, y, opt, targets, capture);
    if (out.size() != targets.size())
        throw numerical_error("ode", "internal: missed integration checkpoints");
    return out;
}

inline std::vector<SolutionSample> integrate(const Potential& q, complex z, double x0, complex u0,
                                             complex du0, const std::vector<double>& targets,
                                             const ode_options& opt = {}) {
    auto qs = integrate_with_quadrature(q, z, x0, u0, du0, targets, {}, opt);
    std::vector<SolutionSample> out;
    out.reserve(qs.size());
    for (auto& e : qs) out.push_back(e.s);
    return out;
}

// --------------------------------------------------------------------------

/// Dense representation of one solution of -u'' + (q - z)u = 0 on an x range,
/// built from the accepted steps of an adaptive pass.  Between nodes the
/// solution is reconstructed by two-point quintic Taylor interpolation using
/// u'' = (q - z) u at the nodes, which matches the integrator's own accuracy.
///
/// Optionally carries the accumulated square integral  I(x) = head + int u^2.
class SolutionTrajectory {
public:
    struct node {
        double x;
        complex u, du, ddu;
        complex isq, disq; // accumulated integral of u^2 and its derivative u^2
    };

    SolutionTrajectory() = default;

    double front() const { return nodes_.front().x; }
    double back() const { return nodes_.back().x; }
    complex z() const { return z_; }

    bool has_head() const { return static_cast<bool>(head_); }

    value_deriv eval(double x) const {
        if (head_ && x < nodes_.front().x) return head_(x);
        const node *n0, *n1;
        locate(x, n0, n1);
        auto [v, d] = detail::two_point_quintic(x, n0->x, n1->x, n0->u, n0->du, n0->ddu,
                                                n1->u, n1->du, n1->ddu);
        return {v, d};
    }

    /// head_isq + int_{front}^{x} u(t)^2 dt  (head covers (a, front)).
    complex integral_sq(double x) const {
        if (!with_isq_)
            throw numerical_error("ode", "trajectory built without square-integral accumulation");
        if (x < nodes_.front().x) {
            if (!head_isq_fn_)
                throw numerical_error("ode", "square integral requested below trajectory range");
            return head_isq_fn_(x);
        }
        const node *n0, *n1;
        locate(x, n0, n1);
        auto dd = [](const node& n) { return 2.0 * n.u * n.du; };
        auto [v, d] = detail::two_point_quintic(x, n0->x, n1->x, n0->isq, n0->disq, dd(*n0),
                                                n1->isq, n1->disq, dd(*n1));
        (void)d;
        return v;
    }

    /// Build by integrating from (u0, du0) at xa up to xb (xa < xb).
    /// `head` evaluates the solution below xa (e.g. a series), `head_isq(x)`
    /// the square integral on (a, x) for x <= xa.
    static SolutionTrajectory build(const Potential& q, complex z, double xa, complex u0,
                                    complex du0, double xb, const ode_options& opt = {},
                                    std::function<value_deriv(double)> head = {},
                                    std::function<complex(double)> head_isq = {}) {
        SolutionTrajectory tr;
        tr.z_ = z;
        tr.head_ = std::move(head);
        tr.head_isq_fn_ = std::move(head_isq);
        tr.with_isq_ = static_cast<bool>(tr.head_isq_fn_) || !static_cast<bool>(tr.head_);
        complex isq0 = tr.head_isq_fn_ ? tr.head_isq_fn_(xa) : complex(0, 0);

        state_vec y{u0, du0, isq0};
        auto rhs = [&](double x, const state_vec& s, state_vec& ds) {
            ds[0] = s[1];
            ds[1] = (q(x) - z) * s[0];
            ds[2] = s[0] * s[0];
        };
        auto record = [&](double x, const state_vec& s, const state_vec& ds) {
            tr.nodes_.push_back({x, s[0], s[1], ds[1], s[2], ds[2]});
        };
        integrate_adaptive(rhs, xa, xb, y, opt, {}, {}, record);
        // inward builds record nodes in descending order
        if (xb < xa) std::reverse(tr.nodes_.begin(), tr.nodes_.end());
        return tr;
    }

private:
    void locate(double x, const node*& n0, const node*& n1) const {
        if (nodes_.size() < 2 || x < nodes_.front().x ||
            x > nodes_.back().x + 1e-12 * std::max(1.0, std::abs(nodes_.back().x)))
            throw numerical_error("ode", "trajectory evaluation outside range at x=" +
                                             std::to_string(x));
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x,
                                   [](double v, const node& n) { return v < n.x; });
        size_t i = static_cast<size_t>(it - nodes_.begin());
        if (i == 0) i = 1;
        if (i >= nodes_.size()) i = nodes_.size() - 1;
        n0 = &nodes_[i - 1];
        n1 = &nodes_[i];
    }

    complex z_{0, 0};
    std::vector<node> nodes_;
    std::function<value_deriv(double)> head_;
    std::function<complex(double)> head_isq_fn_;
    bool with_isq_ = false;
};

} // namespace darboux
