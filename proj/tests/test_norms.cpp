#include <doctest.h>

#include "dispwave/errors.hpp"
#include "dispwave/evolution.hpp"
#include "dispwave/norms.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace dispwave;

namespace
{
    Field sample(const Grid2D& g, const Profile& p)
    {
        Field f(static_cast<Eigen::Index>(g.size()));
        for (std::size_t i = 0; i < g.size(); ++i)
            f[static_cast<Eigen::Index>(i)] = p(g.node(i));
        return f;
    }

    Profile unit_disk()
    {
        return [](Point p) { return p.x * p.x + p.y * p.y <= 1.0 ? 1.0 : 0.0; };
    }

    const Exponent inf = Exponent::infinity();
} // namespace

TEST_SUITE("norms")
{
    TEST_CASE("exponents")
    {
        CHECK(inf.infinite());
        CHECK(inf.inverse() == 0.0);
        CHECK(Exponent(4.0).inverse() == 0.25);
        CHECK(Exponent(std::numeric_limits<double>::infinity()).infinite());
        CHECK_THROWS_AS(Exponent(0.5), Error);
        CHECK_THROWS_AS(inf.value(), Error);
        CHECK(inf.to_string() == "inf");
    }

    TEST_CASE("reversed norm")
    {
        const auto grid = make_grid(1.0, 8);
        const auto times = uniform_times(0.1, 9);
        const Field g = sample(grid, profiles::gaussian(1.0, 0.6));
        std::vector<double> h;
        for (double t : times)
            h.push_back(std::cos(3.0 * t) + 0.2);
        const auto field = separable_field(grid, g, times, h);

        CHECK(reversed_norm(WaveField(grid, times, Eigen::MatrixXd::Zero(64, 10)), Exponent(2.0), inf) == 0.0);

        for (auto [q, r] : {std::pair{Exponent(3.0), Exponent(5.0)}, std::pair{inf, Exponent(2.0)},
                            std::pair{Exponent(1.5), inf}})
        {
            double gq = 0.0, hr = 0.0;
            for (std::size_t i = 0; i < grid.size(); ++i)
            {
                const double v = std::abs(g[static_cast<Eigen::Index>(i)]);
                gq = q.infinite() ? std::max(gq, v) : gq + grid.weight(i) * std::pow(v, q.value());
            }
            for (double v : h)
                hr = r.infinite() ? std::max(hr, std::abs(v)) : hr + 0.1 * std::pow(std::abs(v), r.value());
            if (!q.infinite())
                gq = std::pow(gq, 1.0 / q.value());
            if (!r.infinite())
                hr = std::pow(hr, 1.0 / r.value());
            CHECK(reversed_norm(field, q, r) == doctest::Approx(gq * hr).epsilon(1e-12));
        }

        double full = 0.0;
        for (Eigen::Index i = 0; i < field.values().rows(); ++i)
            for (Eigen::Index j = 0; j < field.values().cols(); ++j)
                full += grid.weight(static_cast<std::size_t>(i)) * 0.1 * std::pow(std::abs(field.values()(i, j)), 3.0);
        CHECK(reversed_norm(field, Exponent(3.0), Exponent(3.0)) == doctest::Approx(std::cbrt(full)).epsilon(1e-12));

        const WaveField scaled(grid, times, -2.5 * field.values());
        CHECK(reversed_norm(scaled, Exponent(8.0), Exponent(12.0)) ==
              doctest::Approx(2.5 * reversed_norm(field, Exponent(8.0), Exponent(12.0))).epsilon(1e-12));

        const WaveField dominated(grid, times, 0.5 * field.values().cwiseAbs());
        CHECK(reversed_norm(dominated, Exponent(2.0), Exponent(4.0)) <=
              reversed_norm(field, Exponent(2.0), Exponent(4.0)));
    }

    TEST_CASE("Kato norms")
    {
        const auto grid = make_grid(1.5, 60);
        CHECK(kato_norm(grid, Field::Zero(static_cast<Eigen::Index>(grid.size())), 1.0) == 0.0);
        const Field disk = sample(grid, unit_disk());
        CHECK(kato_norm(grid, disk, 1.0) == doctest::Approx(std::numbers::pi / 2.0).epsilon(0.02));

        const auto wide = make_grid(2.0, 40);
        const Field bump = sample(wide, profiles::bump(1.0, 0.8));
        const Field shifted = sample(wide, profiles::bump(1.0, 0.8, {0.3, -0.2}));
        CHECK(kato_norm(wide, shifted, 2.0) == doctest::Approx(kato_norm(wide, bump, 2.0)).epsilon(1e-10));

        const auto zero = kato_tilde_norms(PotentialSpec::sample(profiles::zero(), grid));
        CHECK(zero.half == 0.0);
        CHECK(zero.log == 0.0);
        const auto pot = PotentialSpec::sample(unit_disk(), grid);
        const auto tilde = kato_tilde_norms(pot);
        CHECK(tilde.half == doctest::Approx(4.0 * std::numbers::pi / 3.0).epsilon(0.02));
        const auto twice = kato_tilde_norms(pot.scaled(2.0));
        CHECK(twice.half == doctest::Approx(2.0 * tilde.half).epsilon(1e-14));
        CHECK(twice.log == doctest::Approx(2.0 * tilde.log).epsilon(1e-14));
    }

    TEST_CASE("weighted sup")
    {
        const auto grid = make_grid(4.0, 32);
        const Field inner = sample(grid, profiles::bump(2.0, 1.0));
        CHECK(weighted_sup(grid, inner, 2.0) == inner.cwiseAbs().maxCoeff());
        const Field f = sample(grid, profiles::gaussian(-1.0, 3.0, {2.0, 1.0}));
        CHECK(weighted_sup(grid, f, 0.0) == f.cwiseAbs().maxCoeff());
        const double w0 = weighted_sup(grid, f, 0.0), w1 = weighted_sup(grid, f, 1.0), w2 = weighted_sup(grid, f, 2.0);
        CHECK(w1 <= w0);
        CHECK(w2 <= w1);
        CHECK(w2 < w0);
    }

    TEST_CASE("decay fit")
    {
        std::vector<double> t, power, constant;
        for (int k = 0; k < 20; ++k)
        {
            t.push_back(2.0 + k);
            power.push_back(3.0 / std::sqrt(t.back()));
            constant.push_back(0.7);
        }
        const auto fit = decay_fit(t, power, 2.0, 21.0);
        CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-10));
        CHECK(fit.r_squared == doctest::Approx(1.0));
        CHECK(fit.samples == 20);
        CHECK(decay_fit(t, constant, 2.0, 21.0).slope == doctest::Approx(0.0).epsilon(1e-12));

        auto bad = power;
        bad[5] = 0.0;
        CHECK_THROWS_AS(decay_fit(t, bad, 2.0, 21.0), Error);
        CHECK_THROWS_AS(decay_fit(t, power, 2.0, 5.0), Error);
    }

    TEST_CASE("kernel time integral")
    {
        const auto grid = make_grid(1.0, 8);
        const auto pot = PotentialSpec::sample(profiles::zero(), grid);
        const auto bank = build_sine_bank(pot, grid, grid, make_spectral_grid(12.0, 256, 6), uniform_times(0.1, 20));
        CHECK(kernel_time_integral(bank, 0.5, 0.5).isZero(0.0));
        const Eigen::MatrixXd whole = kernel_time_integral(bank, 0.0, 2.0);
        const Eigen::MatrixXd parts = kernel_time_integral(bank, 0.0, 0.7) + kernel_time_integral(bank, 0.7, 2.0);
        CHECK((whole - parts).cwiseAbs().maxCoeff() <= 1e-12 * whole.cwiseAbs().maxCoeff());
        CHECK_THROWS_AS(kernel_time_integral(bank, 0.0, 2.05), Error);
    }

    TEST_CASE("admissible regions")
    {
        CHECK(admissible_reversed(0.125, 0.5));
        CHECK_FALSE(admissible_reversed(0.25, 0.5));
        CHECK(admissible_reversed(0.0, 0.0));

        CHECK(admissible_direct(0.125, 0.125));
        CHECK_FALSE(admissible_direct(0.0, 0.0));
        CHECK_FALSE(admissible_direct(0.5, 0.5));
        CHECK(admissible_direct(0.2, 0.1));
        CHECK_THROWS_AS(admissible_direct(1.5, 0.0), Error);

        const auto ok = admissible_theorem11({inf, inf, Exponent(4.0 / 3.0), Exponent(2.0)});
        CHECK(ok.admissible);
        CHECK(ok.reason.empty());
        CHECK_FALSE(ok.flags.empty());

        const auto gap = admissible_theorem11({inf, Exponent(2.0), Exponent(1.0), Exponent(2.0)});
        CHECK_FALSE(gap.admissible);
        CHECK(gap.reason == "r-gap");

        // 2/q2 + 1/r2 = 2.1 against 2 on the left.
        const auto scaling = admissible_theorem11({inf, inf, Exponent(1.0 / 0.8), Exponent(2.0)});
        CHECK_FALSE(scaling.admissible);
        CHECK(scaling.reason == "scaling");

        CHECK(admissible_lemma15(0.5, 0.0, 0.5));
        CHECK_FALSE(admissible_lemma15(0.75, 0.0, 1.0));
        CHECK(admissible_lemma15(0.3, 0.25, 0.25));
        CHECK_FALSE(admissible_lemma15(0.3, 0.0, 0.5));
        CHECK(admissible_lemma15(0.9, 0.0, 1.0));
        CHECK_FALSE(admissible_lemma15(0.9, 0.2, 0.9));
        CHECK_THROWS_AS(admissible_lemma15(0.2, 0.0, 0.0), Error);
    }

    TEST_CASE("Strichartz ratio")
    {
        const auto grid = make_grid(1.0, 8);
        const auto times = uniform_times(0.5, 3);
        const WaveField zero(grid, times, Eigen::MatrixXd::Zero(64, 4));
        const WaveField u(grid, times, Eigen::MatrixXd::Ones(64, 4));
        const ExponentTuple tuple{inf, inf, Exponent(4.0 / 3.0), Exponent(2.0)};
        CHECK(strichartz_ratio(u, zero, tuple) == 0.0);
        CHECK(strichartz_ratio(u, u, tuple) > 0.0);

        const ExponentTuple bad{inf, Exponent(2.0), Exponent(1.0), Exponent(2.0)};
        CHECK_THROWS_AS(strichartz_ratio_check(profiles::zero(), bad), Error);
    }

    TEST_CASE("Strichartz rescaling on a coarse grid")
    {
        StrichartzOptions opt;
        opt.n_per_side = 220;
        opt.samples = 40;
        const auto report = strichartz_ratio_check(profiles::zero(), {inf, inf, Exponent(4.0 / 3.0), Exponent(2.0)}, opt);
        CHECK(report.entries.size() == 6);
        CHECK(report.exponent_predicted == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(std::abs(report.exponent_measured - report.exponent_predicted) <= 0.1 * report.exponent_scale);
        CHECK(std::isfinite(report.max_ratio));
    }
}
