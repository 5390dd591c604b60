#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "darboux/potential.hpp"

using namespace darboux;
using Catch::Approx;

TEST_CASE("bessel potential values") {
    auto q0 = Potential::bessel(0.0);
    CHECK(q0(0.3) == 0.0);
    CHECK(q0(7.0) == 0.0);

    auto q1 = Potential::bessel(1.0);
    CHECK(q1(2.0) == Approx(0.5).margin(1e-15));

    auto q1c = Potential::bessel(1.0, [](double x) { return -1.0 / x; });
    CHECK(q1c(1.0) == Approx(1.0).margin(1e-15)); // 2/1 - 1

    CHECK_THROWS_AS(Potential::bessel(-0.6), config_error);
}

TEST_CASE("coulomb potential values") {
    auto f = Potential::coulomb(0, 0.0);
    CHECK(f(1.7) == 0.0);
    auto q = Potential::coulomb(0, 2.0);
    CHECK(q(1.0) == Approx(-2.0));
    auto q2 = Potential::coulomb(1, 1.0);
    CHECK(q2(2.0) == Approx(0.0).margin(1e-15)); // 0.5 - 0.5
    CHECK_THROWS_AS(Potential::coulomb(-1, 1.0), config_error);
}

TEST_CASE("tabulated potentials interpolate and refuse extrapolation") {
    auto flat = Potential::tabulated({{1, 0}, {2, 0}});
    CHECK(flat(1.5) == Approx(0.0).margin(1e-15));

    auto lin = Potential::tabulated({{1, 1}, {2, 3}}, Potential::interpolation::linear);
    CHECK(lin(1.5) == Approx(2.0));

    // three samples of x^2: the cubic interpolant reproduces the parabola
    auto cub = Potential::tabulated({{1, 1}, {2, 4}, {3, 9}});
    CHECK(cub(2.5) == Approx(6.25).margin(1e-12));

    CHECK_THROWS_AS(Potential::tabulated({{2, 1}, {1, 0}}), config_error);
    CHECK_THROWS_AS(cub(0.5), numerical_error);
    CHECK_THROWS_AS(cub(3.5), numerical_error);
}

TEST_CASE("cubic tabulated stays exact on polynomial data with many nodes") {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= 8; ++i) {
        double x = 0.5 + 0.25 * i;
        pts.emplace_back(x, x * x * x - 2 * x);
    }
    auto q = Potential::tabulated(pts);
    for (double x : {0.6, 1.11, 1.9, 2.44})
        CHECK(q(x) == Approx(x * x * x - 2 * x).margin(1e-10));
}

TEST_CASE("potential arithmetic identities hold on random draws") {
    std::mt19937 rng(123);
    std::uniform_real_distribution<double> ul(-0.5, 4.0), ux(1e-3, 30.0), ug(-3.0, 3.0);
    for (int k = 0; k < 200; ++k) {
        double l = ul(rng), x = ux(rng);
        auto q = Potential::bessel(l);
        CHECK(q(x) * x * x == Approx(l * (l + 1)).margin(1e-12 * (1 + std::abs(l * (l + 1)))));
        int li = static_cast<int>(std::floor(std::abs(l)));
        double g = ug(rng);
        auto qc = Potential::coulomb(li, g);
        auto qb = Potential::bessel(static_cast<double>(li));
        CHECK(qc(x) == Approx(qb(x) - g / x).margin(1e-12 * (1 + std::abs(qc(x)))));
        CHECK(std::isfinite(qc(x)));
    }
}

TEST_CASE("domain bookkeeping") {
    auto q = Potential::bessel(1.0);
    CHECK_THROWS_AS(q(-1.0), numerical_error);
    CHECK_THROWS_AS(q(0.0), numerical_error); // singular endpoint not evaluable
    CHECK(Potential::free_particle()(0.0) == 0.0); // regular endpoint is
    CHECK(q.class_at_lower() == endpoint_class::limit_point);
    CHECK(Potential::bessel(0.2).class_at_lower() == endpoint_class::limit_circle);
    CHECK(q.cutoff() == Approx(40.0));
    CHECK(q.with_cutoff(25.0).cutoff() == Approx(25.0));
}
