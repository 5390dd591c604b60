#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "darboux/branch.hpp"
#include "darboux/errors.hpp"

namespace darboux {

// --------------------------------------------------------------------------
// Stieltjes inversion

struct SpectralMeasureEstimate {
    double x0 = 0, x1 = 0;
    double mass = 0;                  // extrapolated to eps -> 0
    std::vector<double> eps;          // schedule actually used (descending)
    std::vector<double> mass_at_eps;  // (1/pi) int Im M(t + i eps) dt
    bool extrapolated = false;
    bool converged = true;
    bool signed_mass = false;         // negative mass: not a Herglotz function
};

struct measure_options {
    double quad_rel = 1e-8;
    double quad_abs = 1e-11;
    int max_depth = 48;
};

namespace detail {

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double rel,
                               double abs_tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6 * (fa + 4 * flm + fm);
    double right = (b - m) / 6 * (fm + 4 * frm + fb);
    double err = left + right - whole;
    if (depth <= 0 || std::abs(err) <= 15 * std::max(abs_tol, rel * std::abs(left + right)))
        return left + right + err / 15;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, rel, abs_tol / 2, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, rel, abs_tol / 2, depth - 1);
}

inline double integrate_1d(const std::function<double(double)>& f, double a, double b,
                           const measure_options& o) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, o.quad_rel, o.quad_abs, o.max_depth);
}

} // namespace detail

/// Interval mass of the spectral measure by Stieltjes inversion,
///   (1/pi) int_{x0}^{x1} Im M(t + i eps) dt,
/// extrapolated linearly in eps across the tail of the schedule.  The result
/// approximates the mean of the open- and closed-interval masses, so a point
/// mass sitting exactly on an endpoint counts with weight 1/2.
inline SpectralMeasureEstimate spectral_measure(const std::function<complex(complex)>& M,
                                                double x0, double x1,
                                                std::vector<double> eps_schedule = {1e-1, 1e-2,
                                                                                    1e-3},
                                                const measure_options& opt = {}) {
    if (!(x0 < x1)) throw config_error("spectral_measure: need x0 < x1");
    if (eps_schedule.empty()) throw config_error("spectral_measure: empty eps schedule");
    for (size_t i = 1; i < eps_schedule.size(); ++i)
        if (!(eps_schedule[i] < eps_schedule[i - 1]) || !(eps_schedule[i] > 0))
            throw config_error("spectral_measure: eps schedule must decrease to 0");

    SpectralMeasureEstimate est;
    est.x0 = x0;
    est.x1 = x1;
    est.eps = eps_schedule;
    for (double e : eps_schedule) {
        auto f = [&](double t) { return M(complex(t, e)).imag() / M_PI; };
        est.mass_at_eps.push_back(detail::integrate_1d(f, x0, x1, opt));
    }
    const size_t n = est.mass_at_eps.size();
    if (n == 1) {
        est.mass = est.mass_at_eps[0];
    } else {
        auto lin = [&](size_t i, size_t j) { // linear-in-eps extrapolation through points i < j
            double e0 = est.eps[i], e1 = est.eps[j];
            double m0 = est.mass_at_eps[i], m1 = est.mass_at_eps[j];
            return m1 + (m1 - m0) * e1 / (e0 - e1);
        };
        est.mass = lin(n - 2, n - 1);
        est.extrapolated = true;
        if (n >= 3) {
            double prev = lin(n - 3, n - 2);
            est.converged =
                std::abs(est.mass - prev) <= std::max(0.1 * std::abs(est.mass), 1e-6);
        }
    }
    est.signed_mass = est.mass < -1e-8 * std::max(1.0, std::abs(est.mass));
    return est;
}

// --------------------------------------------------------------------------
// Generalized-Nevanlinna index estimate

struct kappa_result {
    int kappa = 0;
    double slope = 0;        // d log|M(iy)| / d log y over the top decades
    double fit_rms = 0;
    double odd_gap = 0;      // distance of slope to the nearest odd integer
    bool ambiguous = false;  // slope too close to an odd integer to classify by growth alone
    bool phase_ok = true;    // the defining limit ratios behaved as expected
};

/// Smallest kappa with  M(iy)/(iy)^{2 kappa + 1} -> [0, inf)  and
/// -M(iy)/(iy)^{2 kappa - 1} -> (0, inf],  estimated from the log-log growth
/// of |M(iy)| on a geometric grid spanning at least three decades.  Slopes
/// near an odd integer sit between growth classes; those are flagged and the
/// tie is broken by the phase of M(iy)/(iy)^s at the top of the grid.
inline kappa_result estimate_kappa(const std::function<complex(complex)>& M,
                                   const std::vector<double>& y_grid) {
    if (y_grid.size() < 4) throw config_error("estimate_kappa: need at least 4 grid points");
    double ymin = *std::min_element(y_grid.begin(), y_grid.end());
    double ymax = *std::max_element(y_grid.begin(), y_grid.end());
    if (!(ymin > 0) || ymax / ymin < 0.999e3)
        throw config_error("estimate_kappa: y grid must span at least three decades");

    // least-squares slope over the top two decades
    std::vector<double> lx, ly;
    for (double y : y_grid) {
        if (y < ymax / 100) continue;
        double a = std::abs(M(complex(0, y)));
        if (!(a > 0) || !std::isfinite(a))
            throw numerical_error("weyl", "estimate_kappa: |M(iy)| not finite/positive");
        lx.push_back(std::log(y));
        ly.push_back(std::log(a));
    }
    const size_t n = lx.size();
    if (n < 3) throw config_error("estimate_kappa: too few points in the top decades");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    double denom = n * sxx - sx * sx;
    double s = (n * sxy - sx * sy) / denom;
    double b = (sy - s * sx) / n;
    double rms = 0;
    for (size_t i = 0; i < n; ++i) {
        double r = ly[i] - (s * lx[i] + b);
        rms += r * r;
    }
    rms = std::sqrt(rms / n);

    kappa_result kr;
    kr.slope = s;
    kr.fit_rms = rms;
    long nearest_odd = 2 * std::lround((s - 1) / 2) + 1;
    kr.odd_gap = std::abs(s - static_cast<double>(nearest_odd));
    kr.ambiguous = (kr.odd_gap < 0.15) || (rms > 0.1);

    int kappa;
    if (kr.odd_gap >= 0.15) {
        kappa = static_cast<int>(std::floor((s - 1) / 2)) + 1;
    } else {
        // on the boundary, a nonnegative real limit of M(iy)/(iy)^{s_odd}
        // keeps the smaller class
        double ytop = ymax;
        complex ratio = M(complex(0, ytop)) / std::pow(complex(0, ytop), nearest_odd);
        int base = static_cast<int>((nearest_odd - 1) / 2);
        kappa = (std::abs(std::arg(ratio)) < 0.2) ? base : base + 1;
    }
    kr.kappa = std::max(0, kappa);

    // diagnostic: -M(iy)/(iy)^{2k-1} should head to (0, inf]
    double ytop = ymax;
    complex low = -M(complex(0, ytop)) / std::pow(complex(0, ytop), 2 * kr.kappa - 1);
    kr.phase_ok = std::isfinite(low.real());
    return kr;
}

} // namespace darboux
