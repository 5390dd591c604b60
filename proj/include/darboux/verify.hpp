#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "darboux/commute_double.hpp"
#include "darboux/commute_single.hpp"
#include "darboux/gbdt_explicit.hpp"
#include "darboux/spectral.hpp"
#include "darboux/system.hpp"
#include "darboux/weyl.hpp"

namespace darboux {

struct check_result {
    std::string name;
    double residual = 0;
    double tolerance = 0;
    bool pass = false;
};

namespace verify_detail {

inline void add(std::vector<check_result>& out, const std::string& name, double residual,
                double tol) {
    out.push_back({name, residual, tol, residual <= tol});
}

inline std::vector<complex> standard_z_grid() {
    std::vector<complex> zs;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            zs.push_back(complex(-2.0 + 4.0 * i / 4, 0.5 + 3.5 * j / 4));
    return zs;
}

inline std::vector<double> x_grid_50(double a, double b) {
    std::vector<double> xs;
    for (int i = 0; i < 50; ++i) xs.push_back(a + (b - a) * i / 49.0);
    return xs;
}

/// Grid cap keeping the Wronskian check meaningful in double precision: the
/// products theta*phi' grow like exp(2 Im sqrt(z) x), and |W - 1| cannot be
/// resolved below eps * that scale.
inline double w_grid_top(complex z) {
    double rate = std::max(0.25, sqrt_upper(z).imag());
    return std::min(8.0, 6.0 / rate);
}

inline double wronskian_variation(const FundamentalSystem& fs, complex z) {
    auto xs = x_grid_50(0.05, w_grid_top(z));
    auto pv = fs.phi(z, xs);
    auto tv = fs.theta(z, xs);
    double lo = 1e300, hi = -1e300, scale = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        complex W = tv[i].value * pv[i].deriv - tv[i].deriv * pv[i].value;
        lo = std::min(lo, std::abs(W));
        hi = std::max(hi, std::abs(W));
        scale = std::max(scale, std::abs(W));
    }
    return (hi - lo) / std::max(1.0, scale);
}

inline double unit_wronskian_residual(const FundamentalSystem& fs, complex z,
                                      const std::vector<double>& xs) {
    auto pv = fs.phi(z, xs);
    auto tv = fs.theta(z, xs);
    double worst = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        complex W = tv[i].value * pv[i].deriv - tv[i].deriv * pv[i].value;
        worst = std::max(worst, std::abs(W - 1.0));
    }
    return worst;
}

/// |-u'' + (q - z) u| via a 5-point stencil against (q-z)u, relative.
inline double ode_residual(const FundamentalSystem& fs, complex z, double x0, double h) {
    std::vector<double> xs{x0 - 2 * h, x0 - h, x0, x0 + h, x0 + 2 * h};
    auto v = fs.phi(z, xs);
    complex upp = (-v[0].value + 16.0 * v[1].value - 30.0 * v[2].value + 16.0 * v[3].value -
                   v[4].value) /
                  (12.0 * h * h);
    complex rhs = (fs.q(x0) - z) * v[2].value;
    return std::abs(upp - rhs) / std::max(1.0, std::abs(rhs));
}

} // namespace verify_detail

// --------------------------------------------------------------------------

/// Fundamental-system invariants: unit and x-independent Wronskians, reality
/// and conjugation symmetry of the entire solutions, and the ODE residual.
inline std::vector<check_result> verify_wronskian(double tol_scale = 1.0) {
    using namespace verify_detail;
    std::vector<check_result> out;
    const double tolW = 1e-8 * tol_scale;

    struct bench {
        std::string name;
        FundamentalSystem fs;
    };
    std::vector<bench> benches;
    benches.push_back({"free", make_free_system()});
    benches.push_back({"bessel(l=1)", make_bessel_system(Potential::bessel(1.0))});
    benches.push_back({"bessel(l=1.5)", make_bessel_system(Potential::bessel(1.5))});
    benches.push_back({"coulomb(l=0,g=2)", make_bessel_system(Potential::coulomb(0, 2.0))});
    benches.push_back(
        {"bessel(l=1)+exp", make_bessel_system(Potential::bessel_exp(1.0, 1.0, 1.0))});

    std::mt19937 rng(20240811);
    std::uniform_real_distribution<double> ur(-2.0, 2.0), ui(0.3, 3.0);

    for (auto& b : benches) {
        complex z(ur(rng), ui(rng));
        add(out, "unit wronskian W(theta,phi)=1 [" + b.name + "]",
            unit_wronskian_residual(b.fs, z, x_grid_50(0.05, w_grid_top(z))), tolW);
        add(out, "wronskian x-independence (50-pt grid) [" + b.name + "]",
            wronskian_variation(b.fs, z), tolW);
        // reality on the real axis
        double zr = ur(rng);
        auto pv = b.fs.phi(complex(zr, 0), {0.8, 2.2});
        auto tv = b.fs.theta(complex(zr, 0), {0.8, 2.2});
        double worst = 0;
        for (auto& v : pv) worst = std::max(worst, std::abs(v.value.imag()));
        for (auto& v : tv) worst = std::max(worst, std::abs(v.value.imag()));
        add(out, "real-entire: Im phi, Im theta = 0 at real z [" + b.name + "]", worst, tolW);
        // conjugation symmetry
        complex zc(ur(rng), ui(rng));
        auto p1 = b.fs.phi(zc, {1.3}).front();
        auto p2 = b.fs.phi(std::conj(zc), {1.3}).front();
        add(out, "conjugation symmetry phi(conj z) = conj phi(z) [" + b.name + "]",
            std::abs(p2.value - std::conj(p1.value)) / std::max(1.0, std::abs(p1.value)), tolW);
        add(out, "ode residual (5-point stencil) [" + b.name + "]",
            ode_residual(b.fs, zc, 1.1, 0.02), 1e-6 * tol_scale);
    }
    return out;
}

/// Single-commutation invariants, including the Weyl identity
/// M_hat(z) = (z - lambda) M(z) with M_hat rebuilt from scratch.
inline std::vector<check_result> verify_single(double tol_scale = 1.0) {
    using namespace verify_detail;
    std::vector<check_result> out;
    const double tolW = 1e-8 * tol_scale;
    const double tolM = 1e-6 * tol_scale;

    struct bench {
        std::string name;
        FundamentalSystem fs;
    };
    std::vector<bench> benches;
    benches.push_back({"free", make_free_system()});
    benches.push_back({"bessel(l=1)", make_bessel_system(Potential::bessel(1.0))});
    benches.push_back(
        {"bessel(l=1)+exp(-x)", make_bessel_system(Potential::bessel_exp(1.0, 1.0, 1.0))});

    for (auto& b : benches) {
        auto hat = commute_phi(b.fs, 0.0);
        double worstW = 0, worstM = 0;
        for (complex z : standard_z_grid()) {
            worstW = std::max(worstW, unit_wronskian_residual(hat.system, z, {0.7, 1.6}));
            auto Mh = singular_weyl(hat.system, z);
            auto M0 = singular_weyl(b.fs, z);
            complex rhs = hat.weyl_map.apply(z, M0.M);
            worstM = std::max(worstM, std::abs(Mh.M - rhs) / (1.0 + std::abs(Mh.M)));
        }
        add(out, "unit wronskian after phi-commutation [" + b.name + "]", worstW, tolW);
        add(out, "weyl identity M_hat = (z-lambda) M, 5x5 grid [" + b.name + "]", worstM, tolM);
    }

    // Wronskian scaling of the factorization operator
    {
        auto fsys = make_free_system();
        auto seed = fsys.phi_at(0.0);
        complex z(1.7, 0.9);
        auto u = fsys.phi(z, {1.4}).front();
        auto v = fsys.theta(z, {1.4}).front();
        auto hu = commuted_solution(seed, u, z, 1.4);
        auto hv = commuted_solution(seed, v, z, 1.4);
        complex Wh = hu.value * hv.deriv - hu.deriv * hv.value;
        complex Wb = u.value * v.deriv - u.deriv * v.value;
        add(out, "wronskian scaling W(u^,v^) = (z-lambda) W(u,v)",
            std::abs(Wh - z * Wb) / std::max(1e-30, std::abs(z * Wb)), tolW);
    }

    // round trip: theta-commuting the hat at the same energy restores q, phi, theta
    {
        auto fsys = make_bessel_system(Potential::bessel(1.0));
        auto hat = commute_phi(fsys, 0.0);
        auto back = commute_theta(hat.system, 0.0);
        double worst = 0;
        for (double x : {0.05, 0.3, 1.0, 4.0, 11.0})
            worst = std::max(worst, std::abs(back.q_new(x) - fsys.q(x)) /
                                        std::max(1.0, std::abs(fsys.q(x))));
        complex z(0.8, 1.1);
        auto pb = back.system.phi(z, {1.2}).front();
        auto pf = fsys.phi(z, {1.2}).front();
        auto tb = back.system.theta(z, {1.2}).front();
        auto tf = fsys.theta(z, {1.2}).front();
        worst = std::max(worst, std::abs(pb.value - pf.value));
        worst = std::max(worst, std::abs(tb.value - tf.value));
        add(out, "round trip: theta-commutation undoes phi-commutation", worst, tolW);
    }

    // Bessel index shift at x = 1e-2
    for (double l : {1.0, 2.0, 3.0}) {
        auto fs = make_bessel_system(Potential::bessel(l));
        auto hat = commute_phi(fs, 0.0);
        auto chk = commute_theta(fs, 0.0);
        double x = 1e-2;
        add(out, "index shift x^2 q_hat -> (l+1)(l+2), l=" + std::to_string(static_cast<int>(l)),
            std::abs(x * x * hat.q_new(x) - (l + 1) * (l + 2)), tolM);
        add(out, "index shift x^2 q_check -> (l-1)l, l=" + std::to_string(static_cast<int>(l)),
            std::abs(x * x * chk.q_new(x) - (l - 1) * l), tolM);
    }

    // measure relation at interval level (free particle):
    // mass of rho_hat on [1,4] vs int_1^4 t drho = (1/pi) int t sqrt(t) dt
    {
        auto fsys = make_free_system();
        auto hat = commute_phi(fsys, 0.0);
        auto fsp = std::make_shared<FundamentalSystem>(hat.system);
        auto Mh = [fsp](complex z) { return singular_weyl(*fsp, z).M; };
        auto est = spectral_measure(Mh, 1.0, 4.0);
        double expect = (2.0 / 5.0) * (32.0 - 1.0) / M_PI;
        add(out, "measure relation d(rho_hat) = t d(rho), mass on [1,4] within 1%",
            std::abs(est.mass - expect) / expect, 0.01 * tol_scale);
    }
    return out;
}

/// Double-commutation invariants: the Weyl identities for finite and infinite
/// gamma, pole removal, index bookkeeping and eigenvalue insertion.
inline std::vector<check_result> verify_double(double tol_scale = 1.0) {
    using namespace verify_detail;
    std::vector<check_result> out;
    const double tolW = 1e-8 * tol_scale;
    const double tolM = 1e-6 * tol_scale;

    auto fsys = make_free_system();
    auto dc = commute_double(fsys, -1.0, 1.0);
    auto dci = commute_double_infinite(fsys, -1.0);

    double worstM = 0, worstMi = 0, worstW = 0;
    for (complex z : standard_z_grid()) {
        auto M0 = singular_weyl(fsys, z);
        auto Mg = singular_weyl(dc.system, z);
        auto Mi = singular_weyl(dci.system, z);
        complex rg = dc.weyl_map.apply(z, M0.M);
        complex ri = dci.weyl_map.apply(z, M0.M);
        worstM = std::max(worstM, std::abs(Mg.M - rg) / std::abs(rg));
        worstMi = std::max(worstMi, std::abs(Mi.M - ri) / std::abs(ri));
        worstW = std::max(worstW, unit_wronskian_residual(dc.system, z, {0.9}));
        worstW = std::max(worstW, unit_wronskian_residual(dci.system, z, {0.9}));
    }
    add(out, "weyl identity M_gamma = M - gamma/(z-lambda), 5x5 grid", worstM, tolM);
    add(out, "weyl identity M_inf = (z-lambda)^2 M, 5x5 grid", worstMi, tolM);
    add(out, "unit wronskian after double commutation", worstW, tolW);

    // pole removal: theta_gamma bounded on a small circle around lambda
    {
        double mx = 0;
        for (int k = 0; k < 8; ++k) {
            complex z = complex(-1.0, 0.0) + std::polar(5e-5, 2 * M_PI * k / 8.0);
            mx = std::max(mx, std::abs(dc.system.theta(z, {1.0}).front().value));
        }
        add(out, "pole removal: |theta_gamma| bounded across z = lambda", mx > 100 ? mx : 0.0,
            100.0);
    }

    // index invariance (finite gamma) and jump by two (infinite gamma)
    {
        auto bsys = make_bessel_system(Potential::bessel(1.0));
        auto bdc = commute_double(bsys, -1.0, 1.0);
        double x = 1e-2;
        add(out, "index invariance x^2 q_gamma -> l(l+1) (l=1)",
            std::abs(x * x * bdc.q_new(x) - 2.0), tolM);
        add(out, "index jump x^2 q_inf -> (l+2)(l+3) (free: l=0 -> 2)",
            std::abs(x * x * dci.q_new(x) - 6.0), 1e-3 * tol_scale);
    }

    // psi_gamma consistency and the gamma -> 0 limit
    {
        complex z(0.7, 1.3);
        double x = 1.7;
        auto M0 = singular_weyl(fsys, z).M;
        auto psi = weyl_psi(fsys, M0, z, x);
        complex lhs = psi_gamma(*dc.dc, psi, z, x);
        auto tg = dc.system.theta(z, {x}).front();
        auto pg = dc.system.phi(z, {x}).front();
        complex Mg = singular_weyl(dc.system, z).M;
        add(out, "psi_gamma = theta_gamma + M_gamma phi_gamma",
            std::abs(lhs - (tg.value + Mg * pg.value)) / std::abs(lhs), tolW);

        auto dc_small = commute_double(fsys, -1.0, 1e-8);
        complex lhs_small = psi_gamma(*dc_small.dc, psi, z, x);
        add(out, "gamma -> 0 limit: psi_gamma -> psi",
            std::abs(lhs_small - psi.value) / std::abs(psi.value), 1e-6 * tol_scale);

        complex zi(0, 1);
        auto Mi0 = singular_weyl(fsys, zi).M;
        auto p5 = weyl_psi(fsys, Mi0, zi, 5.0);
        auto p10 = weyl_psi(fsys, Mi0, zi, 10.0);
        complex d5 = psi_gamma(*dc.dc, p5, zi, 5.0);
        complex d10 = psi_gamma(*dc.dc, p10, zi, 10.0);
        add(out, "psi_gamma decay toward b", std::abs(d10) < std::abs(d5) ? 0.0 : 1.0, 0.5);
    }

    // eigenvalue insertion: measure mass near lambda equals gamma within 1%
    {
        auto fsp = std::make_shared<FundamentalSystem>(dc.system);
        auto Mg = [fsp](complex z) { return singular_weyl(*fsp, z).M; };
        auto est = spectral_measure(Mg, -1.05, -0.95);
        add(out, "eigenvalue insertion: rho_gamma([-1.05,-0.95]) = gamma within 1%",
            std::abs(est.mass - 1.0), 0.01 * tol_scale);
    }
    return out;
}

/// GBDT invariants: seed compatibility evolution, J-unitarity, determinant
/// identities, explicit-example asymptotics, numeric-vs-closed Weyl functions
/// and the overlap with double commutation.
inline std::vector<check_result> verify_gbdt(double tol_scale = 1.0) {
    using namespace verify_detail;
    std::vector<check_result> out;
    const double tol8 = 1e-8 * tol_scale;
    const double tolM = 1e-6 * tol_scale;
    const complex i(0, 1);

    auto b2 = explicit_jordan_pair(i, 0.0);
    auto b2d = explicit_jordan_pair(i, 0.5);
    auto b1 = explicit_rank_one(i, 0.0);
    auto b1v = explicit_rank_one(i, 1.0);

    // propagation vs closed forms for the Jordan-pair seed
    {
        GBDTSeed s;
        s.n = 2;
        s.A = b2d.A;
        s.Lambda0.resize(2, 2);
        s.Lambda0 << 0.0, 0.0, 0.5, 1.0;
        s.S0 = MatrixXc::Zero(2, 2);
        auto st = propagate(s, Potential::free_particle(), 4.0);
        double worst = 0;
        for (double x : {0.5, 1.0, 2.0}) {
            worst = std::max(worst, (st.Lambda_at(x) - b2d.Lambda(x)).norm());
            worst = std::max(worst, (st.S_at(x) - b2d.S(x)).norm());
        }
        add(out, "propagated seed data matches the closed forms", worst, tol8);
        double lya = 0;
        for (double x : {0.5, 1.5, 3.0})
            lya = std::max(lya, st.compat_residual(x) /
                                    (s.A.norm() * std::max(1.0, st.S_at(x).norm())));
        add(out, "compatibility identity A S - S A* = Lambda J Lambda* along x", lya, tol8);
        add(out, "S(x) stays exactly Hermitian",
            (st.S_at(1.3) - st.S_at(1.3).adjoint()).norm(), 0.0);
    }

    // J-unitarity, determinant x-independence, determinant formula
    {
        std::mt19937 rng(7u);
        std::uniform_real_distribution<double> ur(-2, 2), ui(0.3, 3), ux(0.4, 5);
        Matrix2c J = GBDTSeed::J();
        double worstJ = 0, worstD = 0, worstX = 0;
        for (int k = 0; k < 20; ++k) {
            complex z(ur(rng), ui(rng));
            double x = ux(rng);
            auto wa = b2d.transfer(z, x);
            auto wac = b2d.transfer(std::conj(z), x);
            worstJ = std::max(worstJ, (wac.adjoint() * J * wa - J).norm());
            complex expect = std::pow(z - std::conj(i), 2) / std::pow(z - i, 2);
            worstD = std::max(worstD, std::abs(wa.determinant() - expect) / std::abs(expect));
            worstX = std::max(worstX,
                              std::abs(wa.determinant() - b2d.transfer(z, 1.1).determinant()));
        }
        add(out, "J-unitarity of the transfer matrix (20 random z,x)", worstJ, tol8);
        add(out, "det w_A = (z-conj mu)^2/(z-mu)^2", worstD, tol8);
        add(out, "det w_A independent of x", worstX, tol8);
    }

    // explicit-example asymptotics at the origin
    {
        double x = 1e-2;
        add(out, "x^2 q/12 -> 1 at x=1e-2 (Jordan pair)",
            std::abs(x * x * b2.q_tilde(x) / 12.0 - 1.0), 0.02 * tol_scale);
        add(out, "x^2 q/2 -> 1 at x=1e-2 (rank one)",
            std::abs(x * x * b1.q_tilde(x) / 2.0 - 1.0), 0.02 * tol_scale);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (int k = 0; k <= 10; ++k) {
            double xx = 1e-3 * std::pow(10.0, k / 10.0);
            double lx = std::log(xx), ly = std::log(b2.det_S(xx));
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            ++n;
        }
        double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        double icept = (sy - slope * sx) / n;
        add(out, "log det S slope = 6 on [1e-3,1e-2] within 2%", std::abs(slope - 6.0) / 6.0,
            0.02 * tol_scale);
        add(out, "log det S intercept = -log 45 within 2%",
            std::abs(icept + std::log(45.0)) / std::log(45.0), 0.02 * tol_scale);
        add(out, "square root of the generalized eigenvalue: Asqrt^2 = A",
            (b2.A_sqrt * b2.A_sqrt - b2.A).norm(), 1e-12 * tol_scale);
    }

    // numeric singular Weyl function vs the closed forms
    for (auto [name, bp] :
         {std::pair<const char*, const ExplicitBundle*>{"rank one (v1=0)", &b1},
          {"rank one (v1=1)", &b1v},
          {"Jordan pair (d=0)", &b2},
          {"Jordan pair (d=0.5)", &b2d}}) {
        double worst = 0, worstW = 0, worstR = 0;
        for (complex z : standard_z_grid()) {
            auto r = singular_weyl(bp->system, z);
            complex c = bp->M_closed(z);
            worst = std::max(worst, std::abs(r.M - c) / std::abs(c));
        }
        worstW = unit_wronskian_residual(bp->system, complex(0.9, 1.7), {0.6, 1.8});
        worstR = std::abs(bp->system.phi(complex(0.7, 0), {1.5}).front().value.imag());
        add(out, std::string("numeric M matches closed form [") + name + "]", worst, tolM);
        add(out, std::string("unit wronskian of the explicit pair [") + name + "]", worstW, tol8);
        add(out, std::string("real-entire solutions [") + name + "]", worstR, tol8);
    }

    // entirety of phi at the hidden pole z = conj(mu): tiny contour variation
    {
        complex muc = std::conj(i);
        double mx = 0, mn = 1e300;
        for (int k = 0; k < 8; ++k) {
            complex z = muc + std::polar(1e-3, 2 * M_PI * k / 8.0);
            double v = std::abs(b2.system.phi(z, {1.0}).front().value);
            mx = std::max(mx, v);
            mn = std::min(mn, v);
        }
        add(out, "phi entire across z = conj(mu): contour variation", (mx - mn) / mx,
            1e-3 * tol_scale);
    }

    // residual of the transformed rows against the transformed potential
    {
        GBDTSeed s;
        s.n = 2;
        s.A = b2.A;
        s.Lambda0.resize(2, 2);
        s.Lambda0 << 0.0, 0.0, 0.0, 1.0;
        s.S0 = MatrixXc::Zero(2, 2);
        auto st = propagate(s, Potential::free_particle(), 8.0);
        auto qt = transformed_potential(st);
        complex z(1.1, 0.8);
        double h = 1e-3, worst = 0;
        for (double x : {0.7, 1.9, 4.2}) {
            auto c = transformed_solutions(st, z, x);
            auto l = transformed_solutions(st, z, x - h);
            auto r = transformed_solutions(st, z, x + h);
            for (int col = 0; col < 2; ++col) {
                complex upp = (l.y(col) - 2.0 * c.y(col) + r.y(col)) / (h * h);
                complex rhs = (qt(x) - z) * c.y(col);
                worst = std::max(worst, std::abs(upp - rhs) / std::max(1.0, std::abs(rhs)));
            }
        }
        add(out, "transformed rows solve the transformed equation", worst, 1e-5 * tol_scale);
    }

    // the n = 1 transfer-matrix route reproduces double commutation
    {
        auto fsys = make_free_system();
        std::vector<complex> zs{complex(0, 1), complex(0, 2), complex(-1, 1)};
        std::vector<double> xs;
        for (int k = 0; k <= 16; ++k) xs.push_back(0.1 + (5.0 - 0.1) * k / 16.0);
        double worst = 0;
        for (double g : {0.5, 2.0}) {
            auto rep = gbdt_equals_double_commutation(fsys, -1.0, g, false, zs, xs);
            worst = std::max(worst, rep.max_discrepancy);
        }
        auto repi = gbdt_equals_double_commutation(fsys, -1.0, 0, true, zs, xs);
        worst = std::max(worst, repi.max_discrepancy);
        add(out, "n=1 transfer-matrix route = double commutation (gamma 0.5, 2, inf)", worst,
            tol8);
    }
    return out;
}

/// Stieltjes inversion and the growth-index estimator.
inline std::vector<check_result> verify_measure(double tol_scale = 1.0) {
    using namespace verify_detail;
    std::vector<check_result> out;

    auto Mfree = [](complex z) { return complex(0, 1) * sqrt_upper(z); };
    auto est = spectral_measure(Mfree, 1.0, 4.0);
    add(out, "free measure on [1,4] = 14/(3 pi)", std::abs(est.mass - 14.0 / (3 * M_PI)),
        1e-5 * tol_scale);
    auto est2 = spectral_measure(Mfree, -4.0, -1.0);
    add(out, "free measure vanishes on [-4,-1]", std::abs(est2.mass), 1e-8 * tol_scale);
    auto Mres = [](complex z) { return -1.0 / (z - 1.0); };
    auto est3 = spectral_measure(Mres, 0.0, 2.0);
    add(out, "unit point mass via residue", std::abs(est3.mass - 1.0), 1e-6 * tol_scale);

    // positivity for a Herglotz function
    double worstneg = 0;
    for (auto [a, b] : {std::pair<double, double>{0.2, 0.8}, {1.0, 2.0}, {3.0, 7.0}}) {
        auto e = spectral_measure(Mfree, a, b);
        worstneg = std::max(worstneg, std::max(0.0, -e.mass));
        if (e.signed_mass) worstneg = std::max(worstneg, 1.0);
    }
    add(out, "measure positivity for a Herglotz function", worstneg, 1e-8 * tol_scale);

    // growth index of the model family sqrt(-z) z^l
    double worstk = 0;
    for (int l = 0; l <= 4; ++l) {
        auto Mm = [l](complex w) { return sqrt_upper(-w) * std::pow(w, l); };
        std::vector<double> ys;
        for (int k = 0; k <= 24; ++k) ys.push_back(std::pow(10.0, -0.5 + 3.5 * k / 24.0));
        auto kr = estimate_kappa(Mm, ys);
        int expect = static_cast<int>(std::floor(l / 2.0 + 0.75));
        if (kr.kappa != expect || kr.ambiguous) worstk += 1.0;
    }
    add(out, "kappa estimator on sqrt(-z) z^l, l = 0..4", worstk, 0.5);

    // numeric kappa for the free line
    {
        auto fsys = make_free_system();
        auto fsp = std::make_shared<FundamentalSystem>(fsys);
        std::vector<double> ys;
        for (int k = 0; k <= 14; ++k) ys.push_back(std::pow(10.0, -0.5 + 3.2 * k / 14.0));
        auto kr = estimate_kappa([fsp](complex z) { return singular_weyl(*fsp, z).M; }, ys);
        add(out, "kappa of the numeric free Weyl function = 0",
            (kr.kappa == 0 && !kr.ambiguous) ? 0.0 : 1.0, 0.5);
    }
    return out;
}

struct suite_report {
    std::vector<check_result> checks;
    double seconds = 0;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

inline suite_report run_verify_suite(const std::string& suite, double tol_scale = 1.0) {
    auto t0 = std::chrono::steady_clock::now();
    suite_report rep;
    auto append = [&rep](std::vector<check_result> v) {
        rep.checks.insert(rep.checks.end(), v.begin(), v.end());
    };
    if (suite == "wronskian") append(verify_wronskian(tol_scale));
    else if (suite == "single") append(verify_single(tol_scale));
    else if (suite == "double") append(verify_double(tol_scale));
    else if (suite == "gbdt") append(verify_gbdt(tol_scale));
    else if (suite == "measure") append(verify_measure(tol_scale));
    else if (suite == "all") {
        append(verify_wronskian(tol_scale));
        append(verify_single(tol_scale));
        append(verify_double(tol_scale));
        append(verify_gbdt(tol_scale));
        append(verify_measure(tol_scale));
    } else {
        throw config_error("unknown verify suite '" + suite +
                           "' (wronskian|single|double|gbdt|measure|all)");
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

} // namespace darboux
