#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <span>

#include "pointfield/quadrature.hpp"

using namespace pointfield;

namespace {

double integrate1(double (*f)(double), double lo, double hi,
                  double rel_tol = 1e-10) {
    const std::array<double, 1> a{lo}, b{hi};
    return integrate_box([&](std::span<const double> x) { return f(x[0]); },
                         std::span<const double>(a),
                         std::span<const double>(b), rel_tol);
}

}  // namespace

TEST_CASE("polynomials up to the rule's degree are exact") {
    // 8-point Gauss-Legendre is exact through degree 15.
    const std::array<double, 1> lo{-1.0}, hi{2.0};
    for (int deg = 0; deg <= 15; ++deg) {
        const double got = integrate_box(
            [&](std::span<const double> x) { return std::pow(x[0], deg); },
            std::span<const double>(lo), std::span<const double>(hi), 1e-13);
        const double want =
            (std::pow(2.0, deg + 1) - std::pow(-1.0, deg + 1)) / (deg + 1);
        CHECK(got == Catch::Approx(want).margin(1e-12).epsilon(1e-12));
    }
}

TEST_CASE("exponential over the unit interval") {
    const double got = integrate1([](double x) { return std::exp(x); }, 0, 1);
    CHECK(got == Catch::Approx(1.718281828459045).epsilon(1e-12));
}

TEST_CASE("separable 2d integrand") {
    // int_0^1 sin(x) dx * int_0^2 cos(y) dy = (1 - cos 1) * sin 2.
    const std::array<double, 2> lo{0.0, 0.0}, hi{1.0, 2.0};
    const double got = integrate_box(
        [](std::span<const double> x) {
            return std::sin(x[0]) * std::cos(x[1]);
        },
        std::span<const double>(lo), std::span<const double>(hi), 1e-11);
    CHECK(got == Catch::Approx(0.4180019303917998).epsilon(1e-10));
}

TEST_CASE("gaussian over a 3d box") {
    // prod_k int_{-1}^{1} e^{-x^2} dx = (sqrt(pi) erf(1))^3.
    const std::array<double, 3> lo{-1.0, -1.0, -1.0}, hi{1.0, 1.0, 1.0};
    const double got = integrate_box(
        [](std::span<const double> x) {
            return std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
        },
        std::span<const double>(lo), std::span<const double>(hi), 1e-10);
    const double one_axis = std::sqrt(std::acos(-1.0)) * std::erf(1.0);
    CHECK(got == Catch::Approx(one_axis * one_axis * one_axis).epsilon(1e-9));
}

TEST_CASE("kinked integrand still converges") {
    const double got =
        integrate1([](double x) { return std::abs(x - 0.3); }, 0, 1, 1e-9);
    // int_0^1 |x - 0.3| dx = (0.3^2 + 0.7^2) / 2 = 0.29.
    CHECK(got == Catch::Approx(0.29).epsilon(1e-8));
}

TEST_CASE("non-integrable singularity raises with diagnostics") {
    const std::array<double, 1> lo{0.0}, hi{1.0};
    try {
        integrate_box([](std::span<const double> x) { return 1.0 / x[0]; },
                      std::span<const double>(lo), std::span<const double>(hi),
                      1e-10);
        FAIL("expected QuadratureError");
    } catch (const QuadratureError& e) {
        CHECK(e.achieved > e.requested);
        CHECK(e.requested == 1e-10);
    }
}

TEST_CASE("estimate variant reports instead of throwing") {
    const std::array<double, 1> lo{0.0}, hi{1.0};
    const auto res = integrate_box_estimate(
        [](std::span<const double> x) { return 1.0 / std::sqrt(x[0]); },
        std::span<const double>(lo), std::span<const double>(hi), 1e-12,
        100000);
    CHECK_FALSE(res.converged);
    CHECK(res.panels_per_axis >= 2);

    const auto ok = integrate_box_estimate(
        [](std::span<const double> x) { return x[0] * x[0]; },
        std::span<const double>(lo), std::span<const double>(hi), 1e-12);
    CHECK(ok.converged);
    CHECK(ok.value == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
}
