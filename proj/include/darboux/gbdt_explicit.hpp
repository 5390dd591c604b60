#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include "darboux/commute_double.hpp"
#include "darboux/gbdt.hpp"
#include "darboux/system.hpp"

namespace darboux {

namespace detail {

/// Sum of terms  c * x^k * exp(s x)  with exact arithmetic for products and
/// integrals from 0; the integral switches to a series for |s x| < 1 to dodge
/// the (e^{sx} - 1) cancellation.
template <class R>
struct poly_exp {
    using C = std::complex<R>;
    struct term {
        C c;
        int k;
        C s;
    };
    std::vector<term> terms;

    static poly_exp single(C c, int k, C s) { return poly_exp{{term{c, k, s}}}; }

    poly_exp operator+(const poly_exp& o) const {
        poly_exp r = *this;
        r.terms.insert(r.terms.end(), o.terms.begin(), o.terms.end());
        return r;
    }
    poly_exp operator*(const poly_exp& o) const {
        poly_exp r;
        for (const auto& a : terms)
            for (const auto& b : o.terms) r.terms.push_back({a.c * b.c, a.k + b.k, a.s + b.s});
        return r;
    }
    poly_exp scaled(C f) const {
        poly_exp r = *this;
        for (auto& t : r.terms) t.c *= f;
        return r;
    }
    /// Valid as the complex conjugate on the real axis.
    poly_exp conjugated() const {
        poly_exp r = *this;
        for (auto& t : r.terms) {
            t.c = std::conj(t.c);
            t.s = std::conj(t.s);
        }
        return r;
    }
    poly_exp derivative() const {
        poly_exp r;
        for (const auto& t : terms) {
            r.terms.push_back({t.c * t.s, t.k, t.s});
            if (t.k > 0) r.terms.push_back({t.c * R(t.k), t.k - 1, t.s});
        }
        return r;
    }

    C eval(R x) const {
        C acc(0);
        for (const auto& t : terms) acc += t.c * std::pow(x, R(t.k)) * std::exp(t.s * x);
        return acc;
    }

    static C int0_pow_exp(C s, int k, R x) {
        if (std::abs(s) * x < R(1)) {
            C acc(0), tm(1);
            for (int m = 0; m < 48; ++m) {
                acc += tm / R(m + k + 1);
                tm *= s * x / R(m + 1);
                if (std::abs(tm) < R(1e-30) * (std::abs(acc) + R(1e-300))) break;
            }
            return std::pow(x, R(k + 1)) * acc;
        }
        C e = std::exp(s * x);
        C I = (e - R(1)) / s;
        R xp = 1;
        for (int j = 1; j <= k; ++j) {
            xp *= x;
            I = (xp * e - R(j) * I) / s;
        }
        return I;
    }

    C integral0(R x) const {
        C acc(0);
        for (const auto& t : terms) acc += t.c * int0_pow_exp(t.s, t.k, x);
        return acc;
    }
};

/// Closed-form seed data (Lambda as poly-exp vectors) shared by the explicit
/// examples; everything downstream (S, q-tilde, transfer matrix) is assembled
/// at the requested precision R.
template <class R, int N>
struct explicit_core {
    using C = std::complex<R>;
    using MatN = Eigen::Matrix<C, N, N>;
    using VecN = Eigen::Matrix<C, N, 1>;
    using Mat2 = Eigen::Matrix<C, 2, 2>;

    MatN A;
    std::array<poly_exp<R>, N> L1, L2;
    std::array<std::array<poly_exp<R>, N>, N> S_igd; // integrands L2_i conj(L2_j)

    void finalize() {
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                S_igd[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                    L2[static_cast<size_t>(i)] * L2[static_cast<size_t>(j)].conjugated();
    }

    VecN L1_at(R x) const {
        VecN v;
        for (int i = 0; i < N; ++i) v(i) = L1[static_cast<size_t>(i)].eval(x);
        return v;
    }
    VecN L2_at(R x) const {
        VecN v;
        for (int i = 0; i < N; ++i) v(i) = L2[static_cast<size_t>(i)].eval(x);
        return v;
    }
    MatN S_at(R x) const {
        MatN s;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                s(i, j) = S_igd[static_cast<size_t>(i)][static_cast<size_t>(j)].integral0(x);
        return s;
    }

    std::pair<R, R> qtilde_at(R x) const {
        MatN Sinv = S_at(x).inverse();
        auto [qt, qtp] = gbdt_potential_value<MatN, VecN>(A, L1_at(x), L2_at(x), Sinv);
        return {static_cast<R>(qt), static_cast<R>(qtp)};
    }

    Mat2 transfer(C z, R x) const {
        VecN l1 = L1_at(x), l2 = L2_at(x);
        Eigen::Matrix<C, N, 2> L;
        L.col(0) = l1;
        L.col(1) = l2;
        MatN Sinv = S_at(x).inverse();
        MatN res = (z * MatN::Identity() - A).inverse();
        Mat2 J;
        J << C(0), C(1), C(-1), C(0);
        return Mat2::Identity() + J * (L.adjoint() * Sinv * res * L);
    }

    /// Rows (y, y') of the transformed solution matrix over the free line.
    std::pair<Eigen::Matrix<C, 1, 2>, Eigen::Matrix<C, 1, 2>> rows(C z, R x) const {
        VecN l2 = L2_at(x);
        MatN Sinv = S_at(x).inverse();
        C g = (l2.adjoint() * Sinv * l2)(0, 0);
        Mat2 wA = transfer(z, x);
        C w = std::sqrt(z);
        if (w.imag() < R(0)) w = -w;
        w *= x;
        C cs = std::cos(w);
        C snw;
        if (std::abs(w) < R(1e-4)) {
            C w2 = w * w;
            snw = C(x) * (C(1) - w2 / R(6) * (C(1) - w2 / R(20)));
        } else {
            snw = std::sin(w) / w * x;
        }
        Mat2 wf;
        wf << cs, snw, -z * snw, cs;
        Mat2 m = wA * wf;
        Eigen::Matrix<C, 1, 2> top, bot;
        top << C(1), C(0);
        bot << -g, C(1);
        return {top * m, bot * m};
    }
};

} // namespace detail

// --------------------------------------------------------------------------

/// Explicit GBDT example bundle: closed-form seed data, transformed potential,
/// entire solution pair and the closed-form singular Weyl function.  Values at
/// x below `precision_switch` are computed in extended precision, where the
/// near-degeneracy of S(x) would otherwise eat the double-precision budget.
struct ExplicitBundle {
    int n = 1;
    MatrixXc A;
    MatrixXc A_sqrt; // square root of A used in the closed forms (n = 2)
    std::function<MatrixXc(double)> Lambda;
    std::function<MatrixXc(double)> S;
    std::function<double(double)> det_S;
    Potential q_tilde;
    std::function<Matrix2c(complex, double)> transfer;
    std::function<complex(complex)> M_closed;
    FundamentalSystem system;
    std::string description;
    double precision_switch = 0.02;
};

namespace detail {

template <int N, class CoreD, class CoreL>
void wire_bundle(ExplicitBundle& b, std::shared_ptr<CoreD> cd, std::shared_ptr<CoreL> cl,
                 double cutoff, std::function<value_deriv(complex, double)> phi_fn,
                 std::function<value_deriv(complex, double)> theta_fn) {
    const double xsw = b.precision_switch;
    b.Lambda = [cd](double x) {
        MatrixXc L(N, 2);
        L.col(0) = cd->L1_at(x);
        L.col(1) = cd->L2_at(x);
        return L;
    };
    b.S = [cd](double x) { return MatrixXc(cd->S_at(x)); };
    b.det_S = [cd, cl, xsw](double x) {
        if (x < xsw) return static_cast<double>(cl->S_at(static_cast<long double>(x))
                                                    .determinant()
                                                    .real());
        return cd->S_at(x).determinant().real();
    };
    auto qv = [cd, cl, xsw](double x) {
        if (x < xsw) return static_cast<double>(cl->qtilde_at(static_cast<long double>(x)).first);
        return cd->qtilde_at(x).first;
    };
    auto qd = [cd, cl, xsw](double x) {
        if (x < xsw)
            return static_cast<double>(cl->qtilde_at(static_cast<long double>(x)).second);
        return cd->qtilde_at(x).second;
    };
    b.q_tilde = Potential::from_function(qv, 0.0, std::numeric_limits<double>::infinity(), qd,
                                         endpoint_class::limit_point, endpoint_class::limit_point,
                                         "gbdt-explicit")
                    .with_cutoff(cutoff);
    b.transfer = [cd](complex z, double x) { return Matrix2c(cd->transfer(z, x)); };

    FundamentalSystem sys;
    sys.q = b.q_tilde;
    sys.description = b.description;
    sys.phi = [phi_fn](complex z, const std::vector<double>& xs) {
        std::vector<value_deriv> out(xs.size());
        for (size_t i = 0; i < xs.size(); ++i) out[i] = phi_fn(z, xs[i]);
        return out;
    };
    sys.theta = [theta_fn](complex z, const std::vector<double>& xs) {
        std::vector<value_deriv> out(xs.size());
        for (size_t i = 0; i < xs.size(); ++i) out[i] = theta_fn(z, xs[i]);
        return out;
    };
    sys.phi_at = [phi_fn](double lam) {
        real_solution rs;
        rs.lambda = lam;
        rs.x_hi = std::numeric_limits<double>::infinity();
        rs.eval = [phi_fn, lam](double x) { return phi_fn(complex(lam, 0), x); };
        return rs;
    };
    sys.theta_at = [theta_fn](double lam) {
        real_solution rs;
        rs.lambda = lam;
        rs.x_hi = std::numeric_limits<double>::infinity();
        rs.eval = [theta_fn, lam](double x) { return theta_fn(complex(lam, 0), x); };
        return rs;
    };
    b.system = sys;
}

template <class R>
detail::explicit_core<R, 1> make_rank1_core(std::complex<R> A, R v1) {
    using C = std::complex<R>;
    detail::explicit_core<R, 1> core;
    core.A(0, 0) = A;
    C w = sqrt_upper(A);
    C iw = C(0, 1) * w;
    C half(R(0.5));
    // Lambda_2 = cos(w x) - v1 sin(w x)/w ; Lambda_1 = v1 cos(w x) + w sin(w x)
    core.L2[0] = poly_exp<R>::single(half - v1 / (C(2) * iw), 0, iw) +
                 poly_exp<R>::single(half + v1 / (C(2) * iw), 0, -iw);
    core.L1[0] = poly_exp<R>::single(C(v1) * half + w / C(0, 2), 0, iw) +
                 poly_exp<R>::single(C(v1) * half - w / C(0, 2), 0, -iw);
    core.finalize();
    return core;
}

template <class R>
detail::explicit_core<R, 2> make_jordan_core(std::complex<R> mu, R d) {
    using C = std::complex<R>;
    detail::explicit_core<R, 2> core;
    C omega = C(0, 1) * sqrt_upper(mu);
    C c1 = C(1) + d / omega;
    C c2 = C(1) - d / omega;
    C c3 = c1 / (C(2) * omega);
    C c4 = d / (C(2) * omega * omega * omega);
    C c5 = -c2 / (C(2) * omega);
    core.A << mu, C(1), C(0), mu;

    // p(x) e^{-omega x} = [c3 x + c4; c1],  r(x) e^{omega x} = [c5 x - c4; c2]
    auto pe = [&](int i) {
        if (i == 0)
            return poly_exp<R>::single(c3, 1, -omega) + poly_exp<R>::single(c4, 0, -omega);
        return poly_exp<R>::single(c1, 0, -omega);
    };
    auto re = [&](int i) {
        if (i == 0)
            return poly_exp<R>::single(c5, 1, omega) + poly_exp<R>::single(-c4, 0, omega);
        return poly_exp<R>::single(c2, 0, omega);
    };
    for (int i = 0; i < 2; ++i)
        core.L2[static_cast<size_t>(i)] = pe(i).scaled(C(0.5)) + re(i).scaled(C(0.5));
    // Lambda_1 = (i/2) Asqrt (p e^{-omega x} - r e^{omega x}),
    // Asqrt = -i omega I + (i/(2 omega)) [[0,1],[0,0]]
    C a00 = -C(0, 1) * omega, a01 = C(0, 1) / (C(2) * omega);
    C ih(0, 0.5);
    core.L1[0] = (pe(0).scaled(a00) + pe(1).scaled(a01)).scaled(ih) +
                 (re(0).scaled(a00) + re(1).scaled(a01)).scaled(-ih);
    core.L1[1] = pe(1).scaled(a00 * ih) + re(1).scaled(-a00 * ih);
    core.finalize();
    return core;
}

} // namespace detail

/// n = 1 explicit example: scalar generalized eigenvalue A (nonreal allowed),
/// real boundary parameter v1.  The transformed potential behaves like 2/x^2
/// at the origin and the singular Weyl function is
///   M(z) = -(z - A)(z - conj A) / (i sqrt(z) + v1).
inline ExplicitBundle explicit_rank_one(complex A, double v1, double cutoff = 40.0) {
    if (A == complex(0, 0)) throw config_error("explicit_rank_one: A must be nonzero");
    ExplicitBundle b;
    b.n = 1;
    b.A = MatrixXc::Constant(1, 1, A);
    b.A_sqrt = MatrixXc::Constant(1, 1, sqrt_upper(A));
    b.description = "explicit rank-one example (A=(" + std::to_string(A.real()) + "," +
                    std::to_string(A.imag()) + "), v1=" + std::to_string(v1) + ")";
    auto cd = std::make_shared<detail::explicit_core<double, 1>>(
        detail::make_rank1_core<double>(A, v1));
    auto cl = std::make_shared<detail::explicit_core<long double, 1>>(
        detail::make_rank1_core<long double>(std::complex<long double>(A.real(), A.imag()),
                                             static_cast<long double>(v1)));
    complex Ac = std::conj(A);
    auto phi_fn = [cd, Ac, v1](complex z, double x) {
        auto [y, dy] = cd->rows(z, x);
        Eigen::Matrix<complex, 2, 1> sel;
        sel << 1.0, -v1;
        return value_deriv{(y * sel)(0, 0) / (z - Ac), (dy * sel)(0, 0) / (z - Ac)};
    };
    auto theta_fn = [cd, A](complex z, double x) {
        auto [y, dy] = cd->rows(z, x);
        Eigen::Matrix<complex, 2, 1> sel;
        sel << 0.0, 1.0;
        return value_deriv{-(z - A) * (y * sel)(0, 0), -(z - A) * (dy * sel)(0, 0)};
    };
    detail::wire_bundle<1>(b, cd, cl, cutoff, phi_fn, theta_fn);
    b.M_closed = [A, Ac, v1](complex z) {
        return -(z - A) * (z - Ac) / (complex(0, 1) * sqrt_upper(z) + v1);
    };
    return b;
}

/// n = 2 explicit example: Jordan block with nonreal mu and real d.  The
/// transformed potential behaves like 12/x^2 at the origin, det S = x^6/45
/// near 0, and the singular Weyl function is
///   M(z) = -(z - mu)^2 (z - conj mu)^2 / (i sqrt(z) + d).
inline ExplicitBundle explicit_jordan_pair(complex mu, double d, double cutoff = 40.0) {
    if (mu.imag() == 0) throw config_error("explicit_jordan_pair: mu must be nonreal");
    ExplicitBundle b;
    b.n = 2;
    auto cd = std::make_shared<detail::explicit_core<double, 2>>(
        detail::make_jordan_core<double>(mu, d));
    auto cl = std::make_shared<detail::explicit_core<long double, 2>>(
        detail::make_jordan_core<long double>(std::complex<long double>(mu.real(), mu.imag()),
                                              static_cast<long double>(d)));
    b.A = MatrixXc(cd->A);
    complex omega = complex(0, 1) * sqrt_upper(mu);
    MatrixXc As(2, 2);
    As << -complex(0, 1) * omega, complex(0, 1) / (2.0 * omega), 0.0, -complex(0, 1) * omega;
    b.A_sqrt = As;
    b.description = "explicit Jordan-pair example (mu=(" + std::to_string(mu.real()) + "," +
                    std::to_string(mu.imag()) + "), d=" + std::to_string(d) + ")";
    complex muc = std::conj(mu);
    auto phi_fn = [cd, muc, d](complex z, double x) {
        auto [y, dy] = cd->rows(z, x);
        Eigen::Matrix<complex, 2, 1> sel;
        sel << 1.0, -d;
        complex f = (z - muc) * (z - muc);
        return value_deriv{(y * sel)(0, 0) / f, (dy * sel)(0, 0) / f};
    };
    auto theta_fn = [cd, mu](complex z, double x) {
        auto [y, dy] = cd->rows(z, x);
        Eigen::Matrix<complex, 2, 1> sel;
        sel << 0.0, 1.0;
        complex f = -(z - mu) * (z - mu);
        return value_deriv{f * (y * sel)(0, 0), f * (dy * sel)(0, 0)};
    };
    detail::wire_bundle<2>(b, cd, cl, cutoff, phi_fn, theta_fn);
    b.M_closed = [mu, muc, d](complex z) {
        complex a = (z - mu) * (z - mu);
        complex c = (z - muc) * (z - muc);
        return -a * c / (complex(0, 1) * sqrt_upper(z) + d);
    };
    return b;
}

// --------------------------------------------------------------------------

/// Pointwise comparison of the n = 1 transfer-matrix route against double
/// commutation on the same base system: the scalar seed A = lambda,
/// Lambda(0) = (-phi'(lambda,0), phi(lambda,0)), S(0) = 1/gamma reproduces
/// phi_gamma; with S(0) = 0 it reproduces (z - lambda) * phi_infinity.
struct equivalence_report {
    double lambda = 0;
    double gamma = 0;
    bool infinite = false;
    double max_discrepancy = 0;
    struct sample {
        complex z;
        double x;
        complex via_transfer, via_double_commutation;
    };
    std::vector<sample> samples;
};

inline equivalence_report gbdt_equals_double_commutation(
    const FundamentalSystem& base, double lambda, double gamma, bool infinite,
    const std::vector<complex>& zs, const std::vector<double>& xs, const ode_options& ode = {}) {
    equivalence_report rep;
    rep.lambda = lambda;
    rep.gamma = gamma;
    rep.infinite = infinite;

    auto seed_sol = base.phi_at(lambda);
    auto v0 = seed_sol.eval(base.q.lower());
    GBDTSeed seed;
    seed.n = 1;
    seed.A = MatrixXc::Constant(1, 1, complex(lambda, 0));
    seed.Lambda0.resize(1, 2);
    seed.Lambda0 << -v0.deriv, v0.value;
    seed.S0 = MatrixXc::Constant(1, 1, infinite ? 0.0 : 1.0 / gamma);

    double x_top = *std::max_element(xs.begin(), xs.end());
    auto st = propagate(seed, base.q, x_top + 1.0, ode);

    transform_options topt;
    auto dc = infinite ? commute_double_infinite(base, lambda, topt)
                       : commute_double(base, lambda, gamma, topt);

    for (complex z : zs) {
        auto bvals = base.phi(z, xs);
        auto dvals = dc.system.phi(z, xs);
        for (size_t i = 0; i < xs.size(); ++i) {
            Matrix2c wA = transfer_matrix(st, z, xs[i]);
            Eigen::Matrix<complex, 2, 1> col;
            col << bvals[i].value, bvals[i].deriv;
            complex via_gbdt = (wA * col)(0, 0);
            complex via_dc = dvals[i].value;
            if (infinite) via_dc *= (z - lambda);
            rep.samples.push_back({z, xs[i], via_gbdt, via_dc});
            rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(via_gbdt - via_dc));
        }
    }
    return rep;
}

} // namespace darboux
