#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "darboux/errors.hpp"
#include "darboux/ode.hpp"
#include "darboux/potential.hpp"

namespace darboux {

/// Series solutions of  -u'' + (l(l+1)/x^2 + c/x + sum t_k x^k - z) u = 0
/// about the regular singular point x = 0.
///
/// branch::phi is the solution  x^{l+1} (1 + a_1 x + ...); branch::theta the
/// companion  x^{-l}/(2l+1) (1 + ...).  When 2l+1 is a nonnegative integer the
/// theta recurrence hits a resonance; the obstruction is absorbed by a
/// C * phi(z,x) * log(x) term (pure Bessel has C = 0, a Coulomb tail does not),
/// which keeps W(theta, phi) = 1 exactly.  The resonant power coefficient is
/// fixed to zero, a normalization choice that only shifts theta by a multiple
/// of phi.
class FrobeniusSolution {
public:
    enum class branch { phi, theta };

    FrobeniusSolution(const Potential& q, complex z, branch b, int max_terms = 48)
        : z_(z), br_(b) {
        if (!q.index_l())
            throw numerical_error("ode", "frobenius: potential has no singularity index l");
        l_ = *q.index_l();
        if (b == branch::theta && l_ <= -0.5 + 1e-12)
            throw numerical_error("ode",
                                  "frobenius: theta branch for l = -1/2 (logarithmic) not supported");
        c1_ = q.coulomb_coefficient();
        taylor_ = q.perturbation_series();
        alpha_ = (b == branch::phi) ? l_ + 1 : -l_;

        // detect the integer resonance of the theta branch
        double m_res = 2 * l_ + 1;
        long m_round = std::lround(m_res);
        resonant_ = (b == branch::theta) && m_round >= 1 &&
                    std::abs(m_res - static_cast<double>(m_round)) < 1e-9;
        m_star_ = resonant_ ? m_round : -1;

        phi_coeff_ = build_phi(q, z, max_terms);
        if (b == branch::phi) {
            a_ = phi_coeff_;
        } else {
            a_ = build_theta(z, max_terms);
        }
    }

    double index_l() const { return l_; }
    double leading_power() const { return alpha_; }
    complex log_coefficient() const { return log_c_; }

    /// Series value and derivative; valid for small x (caller picks x_start).
    value_deriv eval(double x) const {
        complex s{0, 0}, ds{0, 0};
        double p = std::pow(x, alpha_);
        for (size_t k = 0; k < a_.size(); ++k) {
            double e = alpha_ + static_cast<double>(k);
            s += a_[k] * p;
            ds += a_[k] * e * (p / x);
            p *= x;
        }
        if (resonant_ && log_c_ != complex(0, 0)) {
            complex f{0, 0}, df{0, 0};
            double pp = std::pow(x, l_ + 1);
            for (size_t k = 0; k < phi_coeff_.size(); ++k) {
                double e = l_ + 1 + static_cast<double>(k);
                f += phi_coeff_[k] * pp;
                df += phi_coeff_[k] * e * (pp / x);
                pp *= x;
            }
            double lg = std::log(x);
            s += log_c_ * f * lg;
            ds += log_c_ * (df * lg + f / x);
        }
        return {s, ds};
    }

    /// int_0^x u(t)^2 dt by termwise integration (log terms included when
    /// present).  Convergent since 2*alpha + 1 > 0 on the phi branch.
    complex integral_sq(double x) const {
        if (br_ != branch::phi)
            throw numerical_error("ode", "integral_sq only provided on the phi branch");
        complex acc{0, 0};
        // (sum a_k x^{alpha+k})^2 = sum_m (sum_{j} a_j a_{m-j}) x^{2 alpha + m}
        const size_t n = a_.size();
        double p = std::pow(x, 2 * alpha_ + 1);
        for (size_t m = 0; m < 2 * n - 1 && m < 2 * n; ++m) {
            complex conv{0, 0};
            for (size_t j = (m >= n - 1 ? m - (n - 1) : 0); j <= m && j < n; ++j)
                conv += a_[j] * a_[m - j];
            acc += conv * p / (2 * alpha_ + 1 + static_cast<double>(m));
            p *= x;
        }
        return acc;
    }

    /// Truncation estimate: magnitude of the last retained term relative to
    /// the leading one at x.
    double truncation_at(double x) const {
        double p = std::pow(x, static_cast<double>(a_.size() - 1));
        double last = std::abs(a_.back()) * p;
        double lead = std::abs(a_.front());
        return (lead > 0) ? last / lead : last;
    }

private:
    std::vector<complex> build_phi(const Potential&, complex z, int max_terms) {
        std::vector<complex> a(static_cast<size_t>(max_terms), complex(0, 0));
        a[0] = 1.0;
        for (int m = 1; m < max_terms; ++m) {
            complex rhs = c1_ * a[static_cast<size_t>(m - 1)];
            for (int j = 0; j <= m - 2; ++j) {
                complex cj = (j < static_cast<int>(taylor_.size())) ? complex(taylor_[static_cast<size_t>(j)], 0)
                                                                    : complex(0, 0);
                if (j == 0) cj -= z;
                rhs += cj * a[static_cast<size_t>(m - 2 - j)];
            }
            double denom = m * (m + 2 * l_ + 1);
            a[static_cast<size_t>(m)] = rhs / denom;
        }
        return a;
    }

    std::vector<complex> build_theta(complex z, int max_terms) {
        std::vector<complex> a(static_cast<size_t>(max_terms), complex(0, 0));
        a[0] = 1.0 / (2 * l_ + 1);
        log_c_ = complex(0, 0);
        for (int m = 1; m < max_terms; ++m) {
            complex rhs = c1_ * a[static_cast<size_t>(m - 1)];
            for (int j = 0; j <= m - 2; ++j) {
                complex cj = (j < static_cast<int>(taylor_.size())) ? complex(taylor_[static_cast<size_t>(j)], 0)
                                                                    : complex(0, 0);
                if (j == 0) cj -= z;
                rhs += cj * a[static_cast<size_t>(m - 2 - j)];
            }
            if (resonant_) {
                long kb = m - m_star_;
                if (kb >= 0 && kb < static_cast<long>(phi_coeff_.size()))
                    rhs -= log_c_ * phi_coeff_[static_cast<size_t>(kb)] *
                           static_cast<double>(2 * m - 2 * l_ - 1);
            }
            double denom = m * (m - (2 * l_ + 1));
            if (resonant_ && m == m_star_) {
                // resonance: pick the log coefficient so the equation closes,
                // and set the free resonant coefficient to zero
                log_c_ = rhs / (phi_coeff_[0] * (2 * l_ + 1));
                a[static_cast<size_t>(m)] = 0.0;
                continue;
            }
            if (std::abs(denom) < 1e-6 * std::max(1.0, static_cast<double>(m) * m))
                throw numerical_error("ode", "frobenius: near-resonant index l=" +
                                                 std::to_string(l_) + " (theta branch)");
            a[static_cast<size_t>(m)] = rhs / denom;
        }
        return a;
    }

    complex z_;
    branch br_;
    double l_ = 0, alpha_ = 1, c1_ = 0;
    std::vector<double> taylor_;
    std::vector<complex> a_, phi_coeff_;
    complex log_c_{0, 0};
    bool resonant_ = false;
    long m_star_ = -1;
};

/// Initial data (u, u') of the phi- or theta-branch series at x_start, with a
/// divergence check.  This is the launch point for outward integration.
inline std::pair<complex, complex> frobenius_start(const Potential& q, complex z, double x_start,
                                                   FrobeniusSolution::branch b,
                                                   int max_terms = 48) {
    FrobeniusSolution s(q, z, b, max_terms);
    if (s.truncation_at(x_start) > 1e-10)
        throw numerical_error("ode", "frobenius: series not converged at x_start=" +
                                         std::to_string(x_start) +
                                         " (x_start too large for requested accuracy)");
    auto vd = s.eval(x_start);
    return {vd.value, vd.deriv};
}

} // namespace darboux
