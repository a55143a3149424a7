#include <doctest.h>

#include "dispwave/errors.hpp"
#include "dispwave/freewave.hpp"

#include <cmath>

using namespace dispwave;
using namespace dispwave::freewave;
using specfun::pi;

namespace
{
    // Gaussian of width a/8.5, cut to zero where it drops below 1e-16.
    double bump(Point p, Point c, double a)
    {
        const double s = (std::pow(p.x - c.x, 2) + std::pow(p.y - c.y, 2)) / (a * a);
        return s < 1.0 ? std::exp(-0.5 * 72.25 * s) : 0.0;
    }

    Field sample(const Grid2D& g, auto&& fn)
    {
        Field f(static_cast<Eigen::Index>(g.size()));
        for (std::size_t i = 0; i < g.size(); ++i)
            f[static_cast<Eigen::Index>(i)] = fn(g.node(i));
        return f;
    }

    double rel_l2(const Field& a, const Field& b) { return (a - b).norm() / b.norm(); }

    // (1/2pi) int L(t, r) e^{i lambda t} dt over [-span, span].
    cplx inverse_transform_L(double lambda, double r, double span)
    {
        cplx acc = 0.0;
        const cplx I{0.0, 1.0};
        std::vector<double> x, w;
        for (double a = -span; a < r - 1e-12; a += std::min(0.25, r - a))
            specfun::append_gauss_panel(a, std::min(a + 0.25, r), 16, x, w);
        for (std::size_t i = 0; i < x.size(); ++i)
            acc += w[i] * cone_L_kernel(x[i], r) * std::exp(I * (lambda * x[i]));
        // Cone singularity: t = r cosh u on [r, 2r].
        x.clear();
        w.clear();
        const double u1 = std::acosh(2.0);
        for (int p = 0; p < 8; ++p)
            specfun::append_gauss_panel(u1 * p / 8, u1 * (p + 1) / 8, 16, x, w);
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            const double t = r * std::cosh(x[i]);
            const double jac = r * std::sinh(x[i]);
            const double smooth = cone_L_kernel(t, r) - 1.0 / std::sqrt(t * t - r * r);
            acc += w[i] * (1.0 + jac * smooth) * std::exp(I * (lambda * t));
        }
        x.clear();
        w.clear();
        for (double a = 2 * r; a < span; a += 0.25)
            specfun::append_gauss_panel(a, std::min(a + 0.25, span), 16, x, w);
        for (std::size_t i = 0; i < x.size(); ++i)
            acc += w[i] * cone_L_kernel(x[i], r) * std::exp(I * (lambda * x[i]));
        return acc / (2.0 * pi);
    }
} // namespace

TEST_SUITE("freewave")
{
    TEST_CASE("sine kernel values")
    {
        CHECK(sine_kernel(1.0, 2.0) == 0.0);
        CHECK(sine_kernel(2.0, 0.0) == doctest::Approx(1.0 / (4.0 * pi)).epsilon(1e-14));
        const auto before = grazing_count();
        CHECK(sine_kernel(1.5, 1.5) == 0.0);
        CHECK(grazing_count() == before + 1);
        CHECK(sample_sine_kernel(0.5, 1.0).value == 0.0);
    }

    TEST_CASE("sine kernel disk integral")
    {
        for (double t : {0.5, 1.0, 3.0})
        {
            // r = t sin(theta) turns 2 pi int r K dr into t int sin(theta) d theta.
            std::vector<double> x, w;
            specfun::append_gauss_panel(0.0, 0.5 * pi, 24, x, w);
            double acc = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
            {
                const double r = t * std::sin(x[i]);
                acc += w[i] * 2.0 * pi * r * sine_kernel(t, r) * t * std::cos(x[i]);
            }
            CHECK(std::abs(acc - t) <= 1e-6);
        }
    }

    TEST_CASE("free sine on constant data")
    {
        const double t = 1.0;
        const auto src = make_grid(3.0, 96);
        const auto f = sample(src, [](Point p) { return std::hypot(p.x, p.y) < 2.6 ? 1.0 : 0.0; });
        const auto obs = make_grid(0.5, 8);
        const Field out = free_sine_apply(t, src, f, obs);
        for (Eigen::Index i = 0; i < out.size(); ++i)
            CHECK(std::abs(out[i] - t) <= 1e-3 * t);
        CHECK(free_sine_apply(0.0, src, f, obs).norm() == 0.0);
    }

    TEST_CASE("free sine linearity, support, symmetry")
    {
        const auto src = make_grid(2.0, 48);
        const auto f = sample(src, [](Point p) { return bump(p, {0.3, 0.0}, 1.2); });
        const auto g = sample(src, [](Point p) { return bump(p, {-0.4, 0.2}, 1.0) * (1 + p.x); });
        const auto obs = make_grid(3.0, 24);
        const Field a = free_sine_apply(0.7, src, 2.0 * f - 3.0 * g, obs);
        const Field b = 2.0 * free_sine_apply(0.7, src, f, obs) - 3.0 * free_sine_apply(0.7, src, g, obs);
        CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-13 * b.cwiseAbs().maxCoeff());

        const double t = 1.0;
        const Field s = free_sine_apply(t, src, f, obs);
        const double reach = 4.0 * src.cell_width() * std::sqrt(2.0);
        for (std::size_t i = 0; i < obs.size(); ++i)
        {
            const Point x = obs.node(i);
            if (std::hypot(x.x - 0.3, x.y) - 1.2 > t + reach)
                CHECK(std::abs(s[static_cast<Eigen::Index>(i)]) < 1e-8 * f.cwiseAbs().maxCoeff());
        }

        const auto small = make_grid(1.0, 10);
        Eigen::MatrixXd m(small.size(), small.size());
        for (std::size_t j = 0; j < small.size(); ++j)
        {
            Field e = Field::Zero(static_cast<Eigen::Index>(small.size()));
            e[static_cast<Eigen::Index>(j)] = 1.0;
            m.col(static_cast<Eigen::Index>(j)) = free_sine_apply(0.8, small, e, small);
        }
        CHECK((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * m.cwiseAbs().maxCoeff());
    }

    TEST_CASE("free cosine")
    {
        const auto src = make_grid(4.0, 96);
        // Plateau of height 2 rolling off smoothly between radius 2 and 3.5.
        const auto f = sample(src, [](Point p) {
            const double r = std::hypot(p.x, p.y);
            return 2.0 * (1.0 - specfun::smooth_step((r - 2.0) / 1.5));
        });
        const auto grad = finite_difference_gradient(src, f);
        const auto obs = make_grid(0.4, 8);
        const Field c = free_cosine_apply(1.0, src, f, grad, obs);
        for (Eigen::Index i = 0; i < c.size(); ++i)
            CHECK(std::abs(c[i] - 2.0) <= 2e-3);

        const auto src2 = make_grid(2.0, 128);
        const auto b = sample(src2, [](Point p) { return bump(p, {0.1, -0.2}, 1.6); });
        const auto gb = finite_difference_gradient(src2, b);
        const auto obs2 = make_grid(2.0, 16);
        const Field at0 = free_cosine_apply(0.0, src2, b, gb, src2);
        CHECK(rel_l2(at0, b) <= 1e-12);

        const double dt = 1e-3;
        const Field deriv =
            (free_sine_apply(1.0 + dt, src2, b, obs2) - free_sine_apply(1.0 - dt, src2, b, obs2)) / (2 * dt);
        const Field cos1 = free_cosine_apply(1.0, src2, b, gb, obs2);
        CHECK(rel_l2(cos1, deriv) <= 1e-3);

        const auto edge = sample(src2, [](Point) { return 1.0; });
        Warnings::instance().drain();
        free_cosine_apply(0.5, src2, edge, finite_difference_gradient(src2, edge), make_grid(0.5, 8));
        CHECK(Warnings::instance().count("truncation") == 1);
        Warnings::instance().drain();
    }

    TEST_CASE("free resolvent kernel")
    {
        CHECK(resolvent_kernel_free(1e-6, 1e-3).imag() == doctest::Approx(0.25).epsilon(1e-9));
        for (double l : {0.5, 2.0, 7.0})
            for (double r : {0.3, 1.0})
                CHECK(std::abs(resolvent_kernel_free(-l, r) - std::conj(resolvent_kernel_free(l, r))) <= 1e-15);
        CHECK(std::abs(resolvent_kernel_free(1.0, 1.0).real() + specfun::bessel_y0(1.0) / 4) <= 1e-10);
        CHECK_THROWS_AS(resolvent_kernel_free(1.0, 0.0), Error);
        CHECK_THROWS_AS(resolvent_kernel_free(0.0, 1.0), Error);
    }

    TEST_CASE("eta and cutoff")
    {
        CHECK(eta(0.85, 0.1) == 0.0);
        CHECK(eta(1.15, 0.1) == 1.0);
        CHECK(eta(1.0, 0.1) == doctest::Approx(0.5));
        CHECK(cutoff_h(0.5) == 1.0);
        CHECK(cutoff_h(-2.5) == 0.0);
    }

    TEST_CASE("low energy transform has a 1/t tail on t > 0 only")
    {
        CHECK(std::abs(low_energy_transform(40.0) - 1.0 / 40.0) <= 1e-5);
        CHECK(std::abs(low_energy_transform(-40.0)) <= 1e-4);
        for (double t : {100.0, 120.0})
        {
            CHECK(std::abs(low_energy_transform(t) - 1.0 / t) <= 1e-7);
            CHECK(std::abs(low_energy_transform(-t)) <= 1e-7);
        }
    }

    TEST_CASE("cone L kernel")
    {
        const ConeKernelParams params;
        double c = 0.0;
        for (double r : {1e-3, 0.1, 1.0, 10.0, 50.0})
        {
            const double v = cone_L_abs_integral(r, 0.0, params.t_max, params);
            c = std::max(c, v / (1.0 + std::abs(std::log(r))));
        }
        CHECK(c <= 10.0);

        for (double r : {0.5, 3.0})
            for (double t = 0.0; t < std::min(r, 1.0 - params.epsilon); t += 0.05)
                CHECK(cone_L_kernel(t, r, params) - ghat(t, params) == doctest::Approx(0.0));

        const double tail20 = cone_L_abs_integral(1.0, 20.0, 400.0, params);
        const double tail40 = cone_L_abs_integral(1.0, 40.0, 400.0, params);
        CHECK(tail40 / tail20 <= 0.3);

        ConeKernelParams bad;
        bad.epsilon = 0.3;
        CHECK_THROWS_AS(ghat(1.0, bad), Error);
    }

    TEST_CASE("L reproduces the free resolvent with the low energy profile")
    {
        for (double r : {0.5, 1.0})
            for (double lambda : {0.5, 1.0, 2.0, 3.5, 5.0})
            {
                const cplx lhs = resolvent_kernel_free(lambda, r);
                const cplx rhs = inverse_transform_L(lambda, r, 120.0) + low_energy_profile(lambda);
                CAPTURE(r);
                CAPTURE(lambda);
                CHECK(std::abs(lhs - rhs) <= 1e-3);
            }
    }
}
