#pragma once

#include <cmath>
#include <complex>

namespace darboux {

using complex = std::complex<double>;

/// Square root on the sheet with Im(sqrt(z)) >= 0.
///
/// All of the library uses this single branch: it is the one for which
/// exp(i*sqrt(z)*x) decays as x -> +infinity whenever z is off the positive
/// half-line, and it gives sqrt(z) = i*sqrt(|z|) on the negative axis.  On
/// [0, inf) the value is the ordinary nonnegative root (limit from above).
template <class T>
std::complex<T> sqrt_upper(std::complex<T> z) {
    std::complex<T> w = std::sqrt(z);
    if (w.imag() < T(0)) w = -w;
    return w;
}

inline complex sqrt_upper(double x) { return sqrt_upper(complex(x, 0.0)); }

/// A complex number stored as mantissa * exp(log_scale).  Used for solution
/// values that over/underflow double range during long integrations; ratios
/// of two log_scaled values are always representable.
struct log_scaled {
    complex mantissa{0.0, 0.0};
    double log_scale = 0.0;

    /// Collapse to a plain complex; may overflow if log_scale is huge.
    complex value() const { return mantissa * std::exp(log_scale); }

    log_scaled& normalize() {
        double m = std::abs(mantissa);
        if (m > 0.0 && (m > 1e150 || m < 1e-150)) {
            double s = std::log(m);
            mantissa /= std::exp(s);
            log_scale += s;
        }
        return *this;
    }

    friend log_scaled operator*(const log_scaled& a, const log_scaled& b) {
        return log_scaled{a.mantissa * b.mantissa, a.log_scale + b.log_scale};
    }
    friend log_scaled operator/(const log_scaled& a, const log_scaled& b) {
        return log_scaled{a.mantissa / b.mantissa, a.log_scale - b.log_scale};
    }
    /// Ratio as a plain complex.
    complex ratio_to(const log_scaled& b) const {
        return mantissa / b.mantissa * std::exp(log_scale - b.log_scale);
    }
};

} // namespace darboux
