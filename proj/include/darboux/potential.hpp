#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "darboux/errors.hpp"

namespace darboux {

enum class endpoint_class { regular, limit_circle, limit_point };

/// Real-valued coefficient q of the differential expression -d^2/dx^2 + q on
/// an open interval (a,b).  Immutable after construction and safe to share
/// between threads.
///
/// When the left endpoint is a Bessel-type singularity the potential carries
/// its local expansion  q(x) = l(l+1)/x^2 + c/x + sum_k t_k x^k,  which the
/// series launcher consumes.  Everything else only uses pointwise values.
class Potential {
public:
    using eval_fn = std::function<double(double)>;

    Potential() = default;

    double lower() const { return a_; }
    double upper() const { return b_; }
    bool upper_infinite() const { return std::isinf(b_); }

    /// Practical integration cutoff standing in for b = +infinity.
    double cutoff() const { return std::isinf(b_) ? cutoff_ : b_; }

    Potential with_cutoff(double xmax) const {
        Potential p = *this;
        if (!(xmax > a_)) throw config_error("potential cutoff must exceed the left endpoint");
        p.cutoff_ = xmax;
        return p;
    }

    bool in_domain(double x) const {
        // regular endpoints are themselves evaluable
        if (x < a_ || (x == a_ && at_a_ != endpoint_class::regular)) return false;
        if (x > b_ || (x == b_ && at_b_ != endpoint_class::regular)) return false;
        return true;
    }

    double operator()(double x) const {
        if (!in_domain(x))
            throw numerical_error("potentials", "evaluation outside domain at x=" + std::to_string(x));
        return f_(x);
    }

    double derivative(double x) const {
        if (!in_domain(x))
            throw numerical_error("potentials", "evaluation outside domain at x=" + std::to_string(x));
        if (df_) return df_(x);
        // fallback: interior central difference
        double h = 1e-5 * std::max(1.0, std::abs(x));
        h = std::min({h, (x - a_) / 2, (b_ - x) / 2});
        return (f_(x + h) - f_(x - h)) / (2 * h);
    }

    std::optional<double> index_l() const { return l_; }
    double coulomb_coefficient() const { return coulomb_; }
    const std::vector<double>& perturbation_series() const { return pert_taylor_; }

    endpoint_class class_at_lower() const { return at_a_; }
    endpoint_class class_at_upper() const { return at_b_; }

    const std::string& kind() const { return kind_; }

    // --- factories ------------------------------------------------------

    /// q == 0 on (0, inf); regular at 0.
    static Potential free_particle() {
        Potential p;
        p.kind_ = "free";
        p.f_ = [](double) { return 0.0; };
        p.df_ = [](double) { return 0.0; };
        p.at_a_ = endpoint_class::regular;
        p.at_b_ = endpoint_class::limit_point;
        return p;
    }

    /// l(l+1)/x^2 + q_pert(x) on (0, inf).  `pert_taylor` are the Taylor
    /// coefficients of q_pert at 0 (needed only if solutions are to be
    /// launched from the singular endpoint); `pert_coulomb` adds c/x.
    static Potential bessel(double l, eval_fn q_pert = {}, std::vector<double> pert_taylor = {},
                            double pert_coulomb = 0.0, eval_fn dq_pert = {}) {
        if (l < -0.5) throw config_error("bessel: index l must satisfy l >= -1/2");
        Potential p;
        p.kind_ = "bessel";
        p.l_ = l;
        p.coulomb_ = pert_coulomb;
        p.pert_taylor_ = std::move(pert_taylor);
        const double ll1 = l * (l + 1);
        if (q_pert) {
            p.f_ = [ll1, pert_coulomb, q_pert](double x) {
                return ll1 / (x * x) + pert_coulomb / x + q_pert(x);
            };
        } else {
            p.f_ = [ll1, pert_coulomb](double x) { return ll1 / (x * x) + pert_coulomb / x; };
        }
        if (dq_pert) {
            p.df_ = [ll1, pert_coulomb, dq_pert](double x) {
                return -2 * ll1 / (x * x * x) - pert_coulomb / (x * x) + dq_pert(x);
            };
        } else if (!q_pert) {
            p.df_ = [ll1, pert_coulomb](double x) {
                return -2 * ll1 / (x * x * x) - pert_coulomb / (x * x);
            };
        }
        p.at_a_ = (l >= 0.5) ? endpoint_class::limit_point : endpoint_class::limit_circle;
        p.at_b_ = endpoint_class::limit_point;
        return p;
    }

    /// Convenience: l(l+1)/x^2 + amplitude * exp(-rate x).
    static Potential bessel_exp(double l, double amplitude, double rate, int series_terms = 24) {
        std::vector<double> taylor(static_cast<size_t>(series_terms));
        double c = amplitude;
        for (int k = 0; k < series_terms; ++k) {
            taylor[static_cast<size_t>(k)] = c;
            c *= -rate / (k + 1);
        }
        return bessel(
            l, [amplitude, rate](double x) { return amplitude * std::exp(-rate * x); },
            std::move(taylor), 0.0,
            [amplitude, rate](double x) { return -rate * amplitude * std::exp(-rate * x); });
    }

    /// l(l+1)/x^2 - gamma/x on (0, inf), l a nonnegative integer.
    static Potential coulomb(int l, double gamma) {
        if (l < 0) throw config_error("coulomb: l must be a nonnegative integer");
        return bessel(static_cast<double>(l), {}, {}, -gamma);
    }

    enum class interpolation { linear, cubic };

    /// Interpolating potential through (x, q) samples; evaluation outside the
    /// sample range is an error.
    static Potential tabulated(const std::vector<std::pair<double, double>>& samples,
                               interpolation method = interpolation::cubic);

    /// Wrap an arbitrary callable on (a, b).
    static Potential from_function(eval_fn f, double a, double b, eval_fn df = {},
                                   endpoint_class at_a = endpoint_class::limit_point,
                                   endpoint_class at_b = endpoint_class::limit_point,
                                   std::string kind = "custom") {
        Potential p;
        p.kind_ = std::move(kind);
        p.f_ = std::move(f);
        p.df_ = std::move(df);
        p.a_ = a;
        p.b_ = b;
        p.at_a_ = at_a;
        p.at_b_ = at_b;
        return p;
    }

    Potential with_index(double l) const {
        Potential p = *this;
        p.l_ = l;
        return p;
    }

private:
    std::string kind_ = "free";
    eval_fn f_ = [](double) { return 0.0; };
    eval_fn df_;
    double a_ = 0.0;
    double b_ = std::numeric_limits<double>::infinity();
    double cutoff_ = 40.0;
    std::optional<double> l_;
    double coulomb_ = 0.0;
    std::vector<double> pert_taylor_;
    endpoint_class at_a_ = endpoint_class::regular;
    endpoint_class at_b_ = endpoint_class::limit_point;
};

namespace detail {

/// Natural data for a cubic spline with not-a-knot ends; n = 3 degenerates to
/// the interpolating parabola and n = 2 to the chord.
struct cubic_spline {
    std::vector<double> x, y, m; // m = second derivatives at nodes

    static cubic_spline build(const std::vector<double>& xs, const std::vector<double>& ys) {
        cubic_spline s;
        s.x = xs;
        s.y = ys;
        const size_t n = xs.size();
        s.m.assign(n, 0.0);
        if (n <= 2) return s;
        if (n == 3) {
            double f01 = (ys[1] - ys[0]) / (xs[1] - xs[0]);
            double f12 = (ys[2] - ys[1]) / (xs[2] - xs[1]);
            double c = 2 * (f12 - f01) / (xs[2] - xs[0]);
            s.m.assign(n, c);
            return s;
        }
        // Eliminate M0 and M_{n-1} through the not-a-knot conditions, then
        // solve the tridiagonal system for the interior second derivatives.
        std::vector<double> h(n - 1);
        for (size_t i = 0; i + 1 < n; ++i) h[i] = xs[i + 1] - xs[i];
        std::vector<double> a(n, 0), b(n, 0), c(n, 0), d(n, 0);
        for (size_t i = 1; i + 1 < n; ++i) {
            a[i] = h[i - 1] / 6;
            b[i] = (h[i - 1] + h[i]) / 3;
            c[i] = h[i] / 6;
            d[i] = (ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1];
        }
        // M0 = M1 (1 + h0/h1) - M2 h0/h1 ; mirrored at the right end.
        double r0 = h[0] / h[1];
        b[1] += a[1] * (1 + r0);
        c[1] -= a[1] * r0;
        double r1 = h[n - 2] / h[n - 3];
        b[n - 2] += c[n - 2] * (1 + r1);
        a[n - 2] -= c[n - 2] * r1;
        // Thomas algorithm on rows 1..n-2
        for (size_t i = 2; i + 1 < n; ++i) {
            double w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        s.m[n - 2] = d[n - 2] / b[n - 2];
        for (size_t i = n - 3; i >= 1; --i) {
            s.m[i] = (d[i] - c[i] * s.m[i + 1]) / b[i];
            if (i == 1) break;
        }
        s.m[0] = s.m[1] * (1 + r0) - s.m[2] * r0;
        s.m[n - 1] = s.m[n - 2] * (1 + r1) - s.m[n - 3] * r1;
        return s;
    }

    size_t segment(double t) const {
        auto it = std::upper_bound(x.begin(), x.end(), t);
        size_t i = static_cast<size_t>(it - x.begin());
        if (i == 0) i = 1;
        if (i >= x.size()) i = x.size() - 1;
        return i - 1;
    }

    double eval(double t) const {
        size_t i = segment(t);
        double h = x[i + 1] - x[i], u = x[i + 1] - t, v = t - x[i];
        return m[i] * u * u * u / (6 * h) + m[i + 1] * v * v * v / (6 * h) +
               (y[i] / h - m[i] * h / 6) * u + (y[i + 1] / h - m[i + 1] * h / 6) * v;
    }

    double deriv(double t) const {
        size_t i = segment(t);
        double h = x[i + 1] - x[i], u = x[i + 1] - t, v = t - x[i];
        return -m[i] * u * u / (2 * h) + m[i + 1] * v * v / (2 * h) -
               (y[i] / h - m[i] * h / 6) + (y[i + 1] / h - m[i + 1] * h / 6);
    }
};

} // namespace detail

inline Potential Potential::tabulated(const std::vector<std::pair<double, double>>& samples,
                                      interpolation method) {
    if (samples.size() < 2) throw config_error("tabulated: need at least two samples");
    std::vector<double> xs(samples.size()), ys(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        xs[i] = samples[i].first;
        ys[i] = samples[i].second;
        if (i > 0 && !(xs[i] > xs[i - 1]))
            throw config_error("tabulated: abscissae must be strictly increasing");
    }
    const double a = xs.front(), b = xs.back();
    eval_fn f, df;
    if (method == interpolation::linear) {
        auto look = [xs, ys](double t) {
            auto it = std::upper_bound(xs.begin(), xs.end(), t);
            size_t i = static_cast<size_t>(it - xs.begin());
            if (i == 0) i = 1;
            if (i >= xs.size()) i = xs.size() - 1;
            double w = (t - xs[i - 1]) / (xs[i] - xs[i - 1]);
            return std::pair<double, double>{ys[i - 1] * (1 - w) + ys[i] * w,
                                             (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])};
        };
        f = [look](double t) { return look(t).first; };
        df = [look](double t) { return look(t).second; };
    } else {
        auto spline = std::make_shared<detail::cubic_spline>(detail::cubic_spline::build(xs, ys));
        f = [spline](double t) { return spline->eval(t); };
        df = [spline](double t) { return spline->deriv(t); };
    }
    // The sample range is the domain; boundary values themselves are allowed.
    Potential p;
    p.kind_ = "tabulated";
    p.f_ = std::move(f);
    p.df_ = std::move(df);
    p.a_ = std::nextafter(a, -std::numeric_limits<double>::infinity());
    p.b_ = std::nextafter(b, std::numeric_limits<double>::infinity());
    p.at_a_ = endpoint_class::regular;
    p.at_b_ = endpoint_class::regular;
    p.cutoff_ = b;
    return p;
}

} // namespace darboux
