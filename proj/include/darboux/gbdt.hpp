#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "darboux/branch.hpp"
#include "darboux/errors.hpp"
#include "darboux/ode.hpp"
#include "darboux/potential.hpp"

namespace darboux {

using Matrix2c = Eigen::Matrix2cd;
using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;
using RowVector2c = Eigen::Matrix<complex, 1, 2>;

/// Matrix seed of the generalized Backlund-Darboux transformation: an n x n
/// generalized eigenvalue A, initial data Lambda(0) (n x 2) and Hermitian
/// S(0) subject to the compatibility identity
///   A S(0) - S(0) A* = Lambda(0) J Lambda(0)*,   J = [[0,1],[-1,0]].
struct GBDTSeed {
    int n = 1;
    MatrixXc A;
    MatrixXc Lambda0; // n x 2
    MatrixXc S0;      // n x n

    static Matrix2c J() {
        Matrix2c j;
        j << 0, 1, -1, 0;
        return j;
    }
};

struct seed_diagnostics {
    double compat_residual = 0;    // ||A S0 - S0 A* - L0 J L0*||
    double hermiticity_residual = 0; // ||S0 - S0*||
    bool valid = false;
};

inline seed_diagnostics validate_seed(const GBDTSeed& seed, double tol = 1e-10) {
    if (seed.A.rows() != seed.n || seed.A.cols() != seed.n || seed.Lambda0.rows() != seed.n ||
        seed.Lambda0.cols() != 2 || seed.S0.rows() != seed.n || seed.S0.cols() != seed.n)
        throw config_error("gbdt seed: inconsistent matrix shapes");
    if (seed.n < 1 || seed.n > 8)
        throw config_error("gbdt seed: n must lie in [1, 8]");
    seed_diagnostics d;
    MatrixXc r = seed.A * seed.S0 - seed.S0 * seed.A.adjoint() -
                 seed.Lambda0 * GBDTSeed::J() * seed.Lambda0.adjoint();
    d.compat_residual = r.norm();
    d.hermiticity_residual = (seed.S0 - seed.S0.adjoint()).norm();
    double scale = std::max({1.0, seed.A.norm() * seed.S0.norm(), seed.Lambda0.squaredNorm()});
    d.valid = d.compat_residual <= tol * scale && d.hermiticity_residual <= tol * scale;
    return d;
}

/// Propagated GBDT data: Lambda(x) solving
///   Lambda_1' = A Lambda_2 - Lambda_2 q,   Lambda_2' = -Lambda_1,
/// and S(x) = S(0) + int_0^x Lambda_2 Lambda_2^*.  S stays exactly Hermitian
/// (lower triangle integrated, diagonal increments are |.|^2).  Dense
/// evaluation between accepted steps is quintic, consistent with the
/// integrator accuracy.
class GBDTState {
public:
    const GBDTSeed& seed() const { return seed_; }
    int n() const { return seed_.n; }
    double x_hi() const { return xs_.back(); }
    bool free_background() const { return free_q_; }

    void at(double x, MatrixXc& Lambda, MatrixXc& S) const {
        if (x < xs_.front() - 1e-12 || x > xs_.back() * (1 + 1e-12) + 1e-12)
            throw numerical_error("gbdt", "state evaluation outside propagated range at x=" +
                                              std::to_string(x));
        x = std::clamp(x, xs_.front(), xs_.back());
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        size_t i = static_cast<size_t>(it - xs_.begin());
        if (i == 0) i = 1;
        if (i >= xs_.size()) i = xs_.size() - 1;
        const size_t m = ys_[0].size();
        state_vec y(m);
        for (size_t k = 0; k < m; ++k) {
            auto [v, dv] = detail::two_point_quintic(x, xs_[i - 1], xs_[i], ys_[i - 1][k],
                                                     dys_[i - 1][k], ddys_[i - 1][k], ys_[i][k],
                                                     dys_[i][k], ddys_[i][k]);
            (void)dv;
            y[k] = v;
        }
        unpack(y, seed_.n, Lambda, S);
    }

    MatrixXc Lambda_at(double x) const {
        MatrixXc L, S;
        at(x, L, S);
        return L;
    }
    MatrixXc S_at(double x) const {
        MatrixXc L, S;
        at(x, L, S);
        return S;
    }

    /// || A S(x) - S(x) A* - Lambda(x) J Lambda(x)* ||
    double compat_residual(double x) const {
        MatrixXc L, S;
        at(x, L, S);
        return (seed_.A * S - S * seed_.A.adjoint() - L * GBDTSeed::J() * L.adjoint()).norm();
    }

    /// Smallest eigenvalue of the Hermitian S(x); positive for a regular state.
    double min_eigen_S(double x) const {
        MatrixXc L, S;
        at(x, L, S);
        Eigen::SelfAdjointEigenSolver<MatrixXc> es(S);
        return es.eigenvalues().minCoeff();
    }

    const std::vector<complex>& eigs_A() const { return eigs_A_; }

    static void unpack(const state_vec& y, int n, MatrixXc& Lambda, MatrixXc& S) {
        Lambda.resize(n, 2);
        S.resize(n, n);
        size_t p = 0;
        for (int i = 0; i < n; ++i) Lambda(i, 0) = y[p++];
        for (int i = 0; i < n; ++i) Lambda(i, 1) = y[p++];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) {
                S(i, j) = y[p];
                if (j < i) S(j, i) = std::conj(y[p]);
                ++p;
            }
        for (int i = 0; i < n; ++i) S(i, i) = complex(S(i, i).real(), 0.0);
    }

    friend GBDTState propagate(const GBDTSeed&, const Potential&, double, const ode_options&);

private:
    GBDTSeed seed_;
    bool free_q_ = false;
    std::vector<double> xs_;
    std::vector<state_vec> ys_, dys_, ddys_;
    std::vector<complex> eigs_A_;
};

/// Integrate the seed data over [0, x_hi] against the background potential q
/// (which must be regular at 0; the free line is the common case).
inline GBDTState propagate(const GBDTSeed& seed, const Potential& q, double x_hi,
                           const ode_options& opt = {}) {
    auto d = validate_seed(seed);
    if (!d.valid)
        throw numerical_error("gbdt", "seed rejected: compatibility residual " +
                                          std::to_string(d.compat_residual) +
                                          ", hermiticity residual " +
                                          std::to_string(d.hermiticity_residual));
    const int n = seed.n;
    GBDTState st;
    st.seed_ = seed;
    st.free_q_ = true;
    for (double xp : {0.37, 1.93, 11.21}) {
        if (xp < x_hi && q.in_domain(xp) && q(xp) != 0.0) st.free_q_ = false;
    }

    const size_t m = static_cast<size_t>(2 * n + n * (n + 1) / 2);
    state_vec y(m);
    size_t p = 0;
    for (int i = 0; i < n; ++i) y[p++] = seed.Lambda0(i, 0);
    for (int i = 0; i < n; ++i) y[p++] = seed.Lambda0(i, 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) y[p++] = seed.S0(i, j);

    auto rhs = [&seed, &q, n](double x, const state_vec& s, state_vec& ds) {
        double qi = q(x);
        // Lambda1' = A Lambda2 - Lambda2 q ; Lambda2' = -Lambda1
        for (int i = 0; i < n; ++i) {
            complex acc = 0;
            for (int j = 0; j < n; ++j) acc += seed.A(i, j) * s[static_cast<size_t>(n + j)];
            ds[static_cast<size_t>(i)] = acc - qi * s[static_cast<size_t>(n + i)];
            ds[static_cast<size_t>(n + i)] = -s[static_cast<size_t>(i)];
        }
        size_t p2 = static_cast<size_t>(2 * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j)
                ds[p2++] = s[static_cast<size_t>(n + i)] * std::conj(s[static_cast<size_t>(n + j)]);
    };

    // second derivatives for the dense representation
    auto second = [&seed, &q, n](double x, const state_vec& s, const state_vec& ds) {
        state_vec dd(s.size());
        double qi = q(x);
        double dqi = q.derivative(x);
        for (int i = 0; i < n; ++i) {
            complex acc = 0;
            for (int j = 0; j < n; ++j) acc += seed.A(i, j) * ds[static_cast<size_t>(n + j)];
            dd[static_cast<size_t>(i)] =
                acc - dqi * s[static_cast<size_t>(n + i)] - qi * ds[static_cast<size_t>(n + i)];
            dd[static_cast<size_t>(n + i)] = -ds[static_cast<size_t>(i)];
        }
        size_t p2 = static_cast<size_t>(2 * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) {
                dd[p2++] = ds[static_cast<size_t>(n + i)] * std::conj(s[static_cast<size_t>(n + j)]) +
                           s[static_cast<size_t>(n + i)] * std::conj(ds[static_cast<size_t>(n + j)]);
            }
        return dd;
    };

    auto record = [&](double x, const state_vec& s, const state_vec& ds) {
        st.xs_.push_back(x);
        st.ys_.push_back(s);
        st.dys_.push_back(ds);
        st.ddys_.push_back(second(x, s, ds));
    };
    integrate_adaptive(rhs, 0.0, x_hi, y, opt, {}, {}, record);

    Eigen::ComplexEigenSolver<MatrixXc> es(seed.A);
    for (int i = 0; i < n; ++i) st.eigs_A_.push_back(es.eigenvalues()(i));
    return st;
}

namespace detail {

inline Eigen::LLT<MatrixXc> cholesky_S(const MatrixXc& S, double x) {
    Eigen::LLT<MatrixXc> llt(S);
    if (llt.info() != Eigen::Success)
        throw numerical_error("gbdt", "S(x) not positive definite at x=" + std::to_string(x) +
                                          " (singular transform)");
    return llt;
}

} // namespace detail

/// Transfer matrix  w_A(z,x) = I_2 + J Lambda(x)* S(x)^{-1} (z I - A)^{-1} Lambda(x).
inline Matrix2c transfer_matrix(const GBDTState& st, complex z, double x) {
    for (complex e : st.eigs_A())
        if (std::abs(z - e) < 1e-8)
            throw numerical_error("gbdt", "z within 1e-8 of an eigenvalue of A");
    MatrixXc L, S;
    st.at(x, L, S);
    auto llt = detail::cholesky_S(S, x);
    MatrixXc Sinv_L = llt.solve(L);
    double cond = S.cwiseAbs().sum() * llt.solve(MatrixXc::Identity(st.n(), st.n())).cwiseAbs().sum();
    if (cond > 1e12)
        throw numerical_error("gbdt",
                              "S(x) ill-conditioned (cond > 1e12) at x=" + std::to_string(x));
    MatrixXc R = (z * MatrixXc::Identity(st.n(), st.n()) - st.seed().A).partialPivLu().solve(L);
    Matrix2c w = Matrix2c::Identity() + GBDTSeed::J() * (Sinv_L.adjoint() * R);
    return w;
}

/// Background 2x2 solution matrix for q == 0:
/// w(z,x) = [[cos, sin/sqrt(z)], [-sqrt(z) sin, cos]](sqrt(z) x), entire in z.
inline Matrix2c free_background_matrix(complex z, double x) {
    complex w = sqrt_upper(z) * x;
    complex cs = std::cos(w);
    complex snw; // sin(w)/w * x = sin(sqrt z x)/sqrt z
    if (std::abs(w) < 1e-4) {
        complex w2 = w * w;
        snw = x * (1.0 - w2 / 6.0 * (1.0 - w2 / 20.0));
    } else {
        snw = std::sin(w) / w * x;
    }
    Matrix2c m;
    m << cs, snw, -z * snw, cs;
    return m;
}

/// Row solutions (ytilde, ytilde') of the transformed equation over the free
/// background; each column of ytilde solves -u'' + qtilde u = z u.
struct transformed_rows {
    RowVector2c y, dy;
};

inline transformed_rows transformed_solutions(const GBDTState& st, complex z, double x) {
    if (!st.free_background())
        throw numerical_error("gbdt",
                              "transformed solutions require a free background potential");
    MatrixXc L, S;
    st.at(x, L, S);
    auto llt = detail::cholesky_S(S, x);
    MatrixXc Sinv_L = llt.solve(L);
    MatrixXc R = (z * MatrixXc::Identity(st.n(), st.n()) - st.seed().A).partialPivLu().solve(L);
    Matrix2c wA = Matrix2c::Identity() + GBDTSeed::J() * (Sinv_L.adjoint() * R);
    Matrix2c w = free_background_matrix(z, x);
    complex g = (L.col(1).adjoint() * llt.solve(L.col(1)))(0, 0);
    RowVector2c top, bot;
    top << 1, 0;
    bot << -g, 1;
    transformed_rows out;
    out.y = top * (wA * w);
    out.dy = bot * (wA * w);
    return out;
}

/// q-tilde and its derivative from (A, Lambda, S) over the free background:
///   qtilde = 2 ((Lambda_2* S^-1 Lambda_2)^2 + 2 Re(Lambda_1* S^-1 Lambda_2)).
template <class Mat, class Vec>
std::pair<double, double> gbdt_potential_value(const Mat& A, const Vec& L1, const Vec& L2,
                                               const Mat& Sinv) {
    using R = typename Vec::Scalar::value_type;
    Vec a = Sinv * L1, b = Sinv * L2;
    R g = (L2.adjoint() * b)(0, 0).real();
    R p = (L1.adjoint() * b)(0, 0).real();
    R h = 2 * p;
    R qt = 2 * (g * g + h);
    // h' = 2 Re(L2* A* b) - g h - 2 L1* a ;  g' = -h - g^2
    R t1 = ((A * L2).adjoint() * b)(0, 0).real();
    R t2 = (L1.adjoint() * a)(0, 0).real();
    R hp = 2 * t1 - g * h - 2 * t2;
    R gp = -h - g * g;
    R qtp = 2 * (2 * g * gp + hp);
    return {static_cast<double>(qt), static_cast<double>(qtp)};
}

/// The transformed potential as an evaluable object (free background only).
/// Evaluation below x ~ 1e-2 can hit the ill-conditioning of S and throws;
/// small-x behavior is the closed-form bundles' business.
inline Potential transformed_potential(const GBDTState& st) {
    if (!st.free_background())
        throw numerical_error("gbdt", "transformed potential requires a free background");
    auto stp = std::make_shared<GBDTState>(st);
    auto val = [stp](double x) {
        MatrixXc L, S;
        stp->at(x, L, S);
        auto llt = detail::cholesky_S(S, x);
        MatrixXc Sinv = llt.solve(MatrixXc::Identity(stp->n(), stp->n()));
        auto [qt, qtp] = gbdt_potential_value<MatrixXc, VectorXc>(stp->seed().A, L.col(0),
                                                                  L.col(1), Sinv);
        (void)qtp;
        return qt;
    };
    auto dval = [stp](double x) {
        MatrixXc L, S;
        stp->at(x, L, S);
        auto llt = detail::cholesky_S(S, x);
        MatrixXc Sinv = llt.solve(MatrixXc::Identity(stp->n(), stp->n()));
        auto [qt, qtp] = gbdt_potential_value<MatrixXc, VectorXc>(stp->seed().A, L.col(0),
                                                                  L.col(1), Sinv);
        (void)qt;
        return qtp;
    };
    return Potential::from_function(val, 0.0, st.x_hi(), dval, endpoint_class::limit_point,
                                    endpoint_class::limit_point, "gbdt")
        .with_cutoff(std::min(st.x_hi() - 1.0, 40.0));
}

} // namespace darboux
