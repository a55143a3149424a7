#include <doctest.h>

#include "dispwave/errors.hpp"
#include "dispwave/fdtd.hpp"
#include "dispwave/freewave.hpp"

#include <cmath>
#include <map>

using namespace dispwave;

namespace
{
    double narrow_bump(Point p)
    {
        const double r2 = p.x * p.x + p.y * p.y;
        return r2 < 1.0 ? std::exp(-r2 / 0.0625) : 0.0;
    }

    Field sample(const Grid2D& g, double (*f)(Point))
    {
        Field out(static_cast<Eigen::Index>(g.size()));
        for (std::size_t i = 0; i < g.size(); ++i)
            out[static_cast<Eigen::Index>(i)] = f(g.node(i));
        return out;
    }

    double wide_bump(Point p)
    {
        const double r2 = p.x * p.x + p.y * p.y;
        return r2 < 2.25 ? std::exp(-r2 / 0.25) : 0.0;
    }

    double free_error(int n, int stride)
    {
        const auto cfg = make_fdtd_config(2.5, n, 1.0, 0.5);
        const auto grid = fdtd_grid(cfg);
        const auto pot = PotentialSpec::sample(profiles::zero(), grid);
        const Field f1 = sample(grid, narrow_bump);
        const auto run = fdtd_solve(Field::Zero(f1.size()), f1, std::nullopt, pot, cfg);
        const Field full = run.field.at(run.field.index_of(1.0));

        // Compare on a sparse subset of the solver nodes.
        std::vector<Point> pts;
        std::vector<double> u;
        for (int j = 0; j < n; j += stride)
            for (int i = 0; i < n; i += stride)
            {
                pts.push_back(grid.node(static_cast<std::size_t>(j * n + i)));
                u.push_back(full[j * n + i]);
            }
        const auto obs = make_point_grid(pts, grid.cell_width());
        const auto src = make_grid(1.0, 128);
        const Field exact = freewave::free_sine_apply(1.0, src, sample(src, narrow_bump), obs);
        return (Eigen::Map<const Field>(u.data(), static_cast<Eigen::Index>(u.size())) - exact).norm() /
               exact.norm();
    }
} // namespace

TEST_SUITE("fdtd")
{
    TEST_CASE("configuration checks")
    {
        FdtdConfig bad{2.0, 40, 0.2, 1.0, 1};
        CHECK_THROWS_AS(bad.validate(), Error);
        const auto cfg = make_fdtd_config(2.0, 40, 1.0, 0.25);
        CHECK(cfg.dt <= 0.9 * cfg.cell_width() / std::sqrt(2.0));
        CHECK(std::abs(cfg.dt * cfg.output_every - 0.25) < 1e-14);

        const auto grid = fdtd_grid(cfg);
        const auto pot = PotentialSpec::sample(profiles::zero(), grid);
        const Field wide = sample(grid, [](Point p) { return std::exp(-(p.x * p.x + p.y * p.y)); });
        CHECK_THROWS_AS(fdtd_solve(wide, wide, std::nullopt, pot, cfg), Error);

        const auto other = PotentialSpec::sample(profiles::zero(), make_grid(2.0, 32));
        const Field z = Field::Zero(static_cast<Eigen::Index>(grid.size()));
        CHECK_THROWS_AS(fdtd_solve(z, z, std::nullopt, other, cfg), Error);
    }

    TEST_CASE("zero data stays zero")
    {
        const auto cfg = make_fdtd_config(2.0, 32, 1.0, 0.5);
        const auto grid = fdtd_grid(cfg);
        const auto pot = PotentialSpec::sample(profiles::gaussian(2.0, 0.5), grid);
        const Field z = Field::Zero(static_cast<Eigen::Index>(grid.size()));
        const auto run = fdtd_solve(z, z, std::nullopt, pot, cfg);
        CHECK(run.field.values().cwiseAbs().maxCoeff() == 0.0);
        CHECK(energy(z, z, pot, cfg) == 0.0);
    }

    TEST_CASE("free run against the closed form")
    {
        const double e1 = free_error(100, 4), e2 = free_error(200, 8);
        CHECK(e1 <= 5e-2);
        CHECK(e2 <= 1.5e-2);
        CHECK(e1 / e2 >= 3.5);
    }

    TEST_CASE("energy")
    {
        const auto cfg = make_fdtd_config(5.5, 220, 4.0, 0.5, 0.3);
        const auto grid = fdtd_grid(cfg);
        const auto zero = PotentialSpec::sample(profiles::zero(), grid);
        const Field f0 = sample(grid, wide_bump);
        const Field f1 = 0.5 * f0;
        const auto run = fdtd_solve(f0, f1, std::nullopt, zero, cfg);
        CHECK(std::abs(run.energy.back() - run.energy.front()) / run.energy.front() < 1e-10);

        const auto pos = PotentialSpec::sample(profiles::gaussian(4.0, 0.5), grid);
        const auto vrun = fdtd_solve(f0, f1, std::nullopt, pos, cfg);
        CHECK(std::abs(vrun.energy.back() - vrun.energy.front()) / vrun.energy.front() < 1e-10);
        CHECK(vrun.energy.front() >= energy(f0, f0, zero, cfg));
    }

    TEST_CASE("radial symmetry")
    {
        const auto cfg = make_fdtd_config(2.5, 100, 1.0, 0.5);
        const auto grid = fdtd_grid(cfg);
        const auto pot = PotentialSpec::sample(profiles::zero(), grid);
        const Field f1 = sample(grid, narrow_bump);
        const auto run = fdtd_solve(Field::Zero(f1.size()), f1, std::nullopt, pot, cfg);
        const Field u = run.field.at(run.field.steps() - 1);

        // Group nodes into orbits of the square's symmetry group.
        std::map<std::pair<int, int>, std::vector<double>> orbits;
        const int n = cfg.n_per_side;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
            {
                int a = std::abs(2 * i - (n - 1)), b = std::abs(2 * j - (n - 1));
                if (a > b)
                    std::swap(a, b);
                orbits[{a, b}].push_back(u[j * n + i]);
            }
        double spread = 0.0;
        for (const auto& [key, vals] : orbits)
            for (double v : vals)
                spread += std::pow(v - vals.front(), 2);
        CHECK(spread < 1e-6 * u.squaredNorm());
    }

    TEST_CASE("time reversal")
    {
        const auto cfg = make_fdtd_config(3.0, 80, 1.0, 0.5);
        const auto grid = fdtd_grid(cfg);
        const auto pot = PotentialSpec::sample(profiles::gaussian(3.0, 0.5), grid);
        const Field f0 = sample(grid, narrow_bump);
        const int steps = static_cast<int>(std::llround(1.0 / cfg.dt));
        auto fwd = leapfrog({f0, f0}, pot, cfg, steps);
        auto back = leapfrog({fwd.cur, fwd.prev}, pot, cfg, steps);
        CHECK((back.cur - f0).norm() / f0.norm() < 1e-6);
    }

    TEST_CASE("finite speed on the stencil")
    {
        const auto cfg = make_fdtd_config(3.0, 60, 0.5, 0.5);
        const auto grid = fdtd_grid(cfg);
        const auto pot = PotentialSpec::sample(profiles::zero(), grid);
        const int n = cfg.n_per_side;
        Field f1 = Field::Zero(n * n);
        f1[(n / 2) * n + n / 2] = 1.0;
        const auto run = fdtd_solve(Field::Zero(n * n), f1, std::nullopt, pot, cfg);
        const int steps = static_cast<int>(std::llround(0.5 / cfg.dt));
        const Field u = run.field.at(run.field.steps() - 1);
        double outside = 0.0;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                if (std::abs(i - n / 2) + std::abs(j - n / 2) > steps)
                    outside = std::max(outside, std::abs(u[j * n + i]));
        CHECK(outside < 1e-10);
    }
}
