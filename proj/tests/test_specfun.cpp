#include <doctest.h>

#include "dispwave/errors.hpp"
#include "dispwave/specfun.hpp"

#include <cmath>

using namespace dispwave;
using namespace dispwave::specfun;

TEST_SUITE("specfun")
{
    TEST_CASE("j0 basic values")
    {
        CHECK(bessel_j0(0.0) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(std::abs(bessel_j0(2.4048255577)) <= 1e-8);
        const double x = 50.0;
        CHECK(std::abs(bessel_j0(x) - std::sqrt(2.0 / (pi * x)) * std::cos(x - pi / 4)) <= 1e-3);
        CHECK_THROWS_AS(bessel_j0(std::nan("")), Error);
    }

    TEST_CASE("j0 and y0 against the standard library")
    {
        for (double x = 0.05; x < 80.0; x *= 1.07)
        {
            const double j = std::cyl_bessel_j(0.0, x);
            const double y = std::cyl_neumann(0.0, x);
            CAPTURE(x);
            CHECK(std::abs(bessel_j0(x) - j) <= 1e-10 * std::max(1.0, std::abs(j)) + 1e-14);
            CHECK(std::abs(bessel_y0(x) - y) <= 1e-9 * std::max(1.0, std::abs(y)) + 1e-14);
        }
    }

    TEST_CASE("y0 small argument law and domain")
    {
        for (double x : {1e-4, 1e-6, 1e-8})
            CHECK(std::abs(bessel_y0(x) - (2.0 / pi) * (std::log(x / 2) + euler_gamma)) < 10 * x);
        CHECK(bessel_y0(1e-8) < -10.0);
        CHECK_THROWS_AS(bessel_y0(0.0), Error);
        CHECK_THROWS_AS(bessel_y0(-1.0), Error);
    }

    TEST_CASE("wronskian")
    {
        for (double x : {0.5, 1.0, 5.0})
        {
            const double h = 1e-3;
            auto d = [&](double (*f)(double)) {
                return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
            };
            const double dj = d(bessel_j0);
            const double dy = d(bessel_y0);
            CHECK(std::abs(bessel_j0(x) * dy - dj * bessel_y0(x) - 2.0 / (pi * x)) <= 1e-8);
        }
    }

    TEST_CASE("hankel branches")
    {
        for (double rho = 1e-3; rho <= 50.0; rho *= 1.3)
        {
            const auto diff = hankel0(HankelBranch::plus, rho) - hankel0(HankelBranch::minus, rho);
            CHECK(std::abs(diff - 2.0 * bessel_j0(rho)) <= 1e-8);
            CHECK(std::abs(-std::conj(hankel0(HankelBranch::plus, rho)) - hankel0(HankelBranch::minus, rho)) <= 1e-15);
        }
        CHECK(std::abs(std::abs(hankel0(HankelBranch::plus, 20.0)) - std::sqrt(2.0 / (pi * 20.0))) <=
              0.02 * std::sqrt(2.0 / (pi * 20.0)));
        CHECK_THROWS_AS(hankel0(HankelBranch::plus, 0.0), Error);
    }

    TEST_CASE("hankel small argument law with fitted constant")
    {
        auto ratio = [](double rho) {
            const cplx lead = 1.0 + cplx{0.0, 2.0 / pi} * (std::log(rho / 2) + euler_gamma);
            return std::abs(hankel0(HankelBranch::plus, rho) - lead) / (rho * rho * (1 + std::abs(std::log(rho))));
        };
        const double c = ratio(0.08);
        for (double rho = 0.04; rho > 1e-4; rho /= 2)
        {
            CAPTURE(rho);
            CHECK(ratio(rho) <= 1.5 * c);
            CHECK(ratio(rho) >= 0.25 * c);
        }
    }

    TEST_CASE("hankel integral representation")
    {
        CHECK(std::abs(hankel_ft_check(HankelBranch::plus, 2.0) - hankel0(HankelBranch::plus, 2.0)) <= 1e-4);
        for (double rho : {0.5, 8.0})
            CHECK(std::abs(hankel_ft_check(HankelBranch::plus, rho) - hankel0(HankelBranch::plus, rho)) <= 1e-4);
        const auto m = hankel_ft_check(HankelBranch::minus, 2.0);
        const auto p = hankel_ft_check(HankelBranch::plus, 2.0);
        CHECK(std::abs(m.imag() - p.imag()) <= 1e-4);
        CHECK(std::abs(m - hankel0(HankelBranch::minus, 2.0)) <= 1e-4);
    }

    TEST_CASE("hankel integral on a log grid, both schemes")
    {
        for (auto scheme : {QuadratureSpec::Scheme::gauss_legendre_panels, QuadratureSpec::Scheme::tanh_sinh})
        {
            QuadratureSpec q;
            q.scheme = scheme;
            for (int k = 0; k < 20; ++k)
            {
                const double rho = 0.3 * std::pow(20.0 / 0.3, k / 19.0);
                CAPTURE(rho);
                for (auto b : {HankelBranch::plus, HankelBranch::minus})
                    CHECK(std::abs(hankel_ft_check(b, rho, q) - hankel0(b, rho)) <= 1e-4);
            }
        }
    }

    TEST_CASE("quadrature spec validation")
    {
        QuadratureSpec q;
        q.node_count = 4;
        CHECK_THROWS_AS(hankel_ft_check(HankelBranch::plus, 1.0, q), Error);
        q = {};
        q.truncation = 1.0;
        CHECK_THROWS_AS(hankel_ft_check(HankelBranch::plus, 1.0, q), Error);
        CHECK_THROWS_AS(hankel_ft_check(HankelBranch::plus, -1.0), Error);
    }

    TEST_CASE("sine and cosine integrals")
    {
        // Reference values from standard tables.
        auto a = sine_cosine_integrals(1.0);
        CHECK(a.si == doctest::Approx(0.946083070367183).epsilon(1e-13));
        CHECK(a.ci == doctest::Approx(0.337403922900968).epsilon(1e-13));
        auto b = sine_cosine_integrals(10.0);
        CHECK(b.si == doctest::Approx(1.658347594218874).epsilon(1e-13));
        CHECK(b.ci == doctest::Approx(-0.045456433004455).epsilon(1e-12));
    }

    TEST_CASE("gauss legendre integrates polynomials")
    {
        const auto& g = gauss_legendre(10);
        double s = 0.0;
        for (int i = 0; i < 10; ++i)
            s += g.weights[i] * std::pow(g.nodes[i], 18);
        CHECK(s == doctest::Approx(2.0 / 19.0).epsilon(1e-14));
    }
}
