#include "dispwave/fdtd.hpp"

#include "dispwave/errors.hpp"

#include <algorithm>
#include <cmath>

namespace dispwave
{
    namespace
    {
        // lap = Delta_h f with zero Dirichlet values outside the grid.
        void laplacian(const Field& f, int n, double h, Field& lap)
        {
            const double s = 1.0 / (h * h);
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i)
                {
                    const int k = j * n + i;
                    double acc = -4.0 * f[k];
                    if (i > 0)
                        acc += f[k - 1];
                    if (i + 1 < n)
                        acc += f[k + 1];
                    if (j > 0)
                        acc += f[k - n];
                    if (j + 1 < n)
                        acc += f[k + n];
                    lap[k] = s * acc;
                }
        }

        void check_grid(const PotentialSpec& pot, const FdtdConfig& cfg)
        {
            const auto& lay = pot.grid().require_layout();
            if (lay.nx != cfg.n_per_side || lay.ny != cfg.n_per_side ||
                std::abs(lay.h - cfg.cell_width()) > 1e-12 * lay.h)
                throw Error(ErrorCode::configuration, "potential is not sampled on the solver grid");
        }

        double support_radius(const Grid2D& g, const Field& f)
        {
            const double peak = f.cwiseAbs().maxCoeff();
            double r = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i)
                if (std::abs(f[static_cast<Eigen::Index>(i)]) > 1e-12 * peak && peak > 0.0)
                {
                    const Point p = g.node(i);
                    r = std::max(r, std::max(std::abs(p.x), std::abs(p.y)));
                }
            return r;
        }
    } // namespace

    void FdtdConfig::validate() const
    {
        if (!(half_width > 0.0) || n_per_side < 8 || !(dt > 0.0) || !(T_final > 0.0) || output_every < 1)
            throw Error(ErrorCode::configuration, "FDTD configuration needs positive sizes and n_per_side >= 8");
        if (dt > 0.9 * cell_width() / std::sqrt(2.0) * (1.0 + 1e-12))
            throw Error(ErrorCode::configuration, "FDTD time step violates the CFL bound 0.9 h / sqrt(2)");
    }

    FdtdConfig make_fdtd_config(double half_width, int n_per_side, double T_final, double cadence,
                                double dt_factor)
    {
        FdtdConfig cfg{half_width, n_per_side, 0.0, T_final, 1};
        if (!(cadence > 0.0))
            throw Error(ErrorCode::configuration, "output cadence must be positive");
        if (!(dt_factor > 0.0 && dt_factor <= 0.9))
            throw Error(ErrorCode::configuration, "dt_factor must lie in (0, 0.9]");
        const double limit = dt_factor * cfg.cell_width() / std::sqrt(2.0);
        const int sub = static_cast<int>(std::ceil(cadence / limit - 1e-12));
        cfg.dt = cadence / sub;
        cfg.output_every = sub;
        cfg.validate();
        return cfg;
    }

    Grid2D fdtd_grid(const FdtdConfig& cfg)
    {
        cfg.validate();
        return make_grid(cfg.half_width, cfg.n_per_side);
    }

    LeapfrogState leapfrog(LeapfrogState state, const PotentialSpec& pot, const FdtdConfig& cfg, int steps)
    {
        cfg.validate();
        check_grid(pot, cfg);
        const int n = cfg.n_per_side;
        const double h = cfg.cell_width(), dt2 = cfg.dt * cfg.dt;
        Field lap(state.cur.size());
        for (int s = 0; s < steps; ++s)
        {
            laplacian(state.cur, n, h, lap);
            Field next = 2.0 * state.cur - state.prev + dt2 * (lap - pot.V().cwiseProduct(state.cur));
            state.prev = std::move(state.cur);
            state.cur = std::move(next);
        }
        return state;
    }

    double energy(const Field& fn, const Field& fn1, const PotentialSpec& pot, const FdtdConfig& cfg)
    {
        const int n = cfg.n_per_side;
        const double h = cfg.cell_width(), w = h * h;
        double e = 0.0;
        // Potential and gradient terms pair f^n with f^{n+1}, the form leapfrog conserves exactly.
        auto edge = [](const Field& f, int k, int step, bool inside) { return (inside ? f[k + step] : 0.0) - f[k]; };
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
            {
                const int k = j * n + i;
                const double ft = (fn1[k] - fn[k]) / cfg.dt;
                e += w * (ft * ft + pot.V()[k] * fn[k] * fn1[k]);
                // Forward edges plus the wall edges on the low sides.
                e += edge(fn, k, 1, i + 1 < n) * edge(fn1, k, 1, i + 1 < n);
                e += edge(fn, k, n, j + 1 < n) * edge(fn1, k, n, j + 1 < n);
                if (i == 0)
                    e += fn[k] * fn1[k];
                if (j == 0)
                    e += fn[k] * fn1[k];
            }
        return e;
    }

    FdtdResult fdtd_solve(const Field& f0, const Field& f1, const std::optional<WaveField>& F,
                          const PotentialSpec& pot, const FdtdConfig& cfg)
    {
        const auto N = static_cast<Eigen::Index>(pot.grid().size());
        if (!F)
            return fdtd_solve(f0, f1, Forcing{[N](double) { return Field(Field::Zero(N)); }, 0.0}, pot, cfg);
        if (F->obs().size() != pot.grid().size())
            throw Error(ErrorCode::configuration, "forcing is not sampled on the solver grid");
        double reach = 0.0;
        for (std::size_t k = 0; k < F->steps(); ++k)
            reach = std::max(reach, support_radius(pot.grid(), F->at(k)));
        return fdtd_solve(f0, f1, Forcing{[&F](double t) { return F->sample(t); }, reach}, pot, cfg);
    }

    FdtdResult fdtd_solve(const Field& f0, const Field& f1, const Forcing& F, const PotentialSpec& pot,
                          const FdtdConfig& cfg)
    {
        cfg.validate();
        check_grid(pot, cfg);
        const Grid2D& grid = pot.grid();
        const auto N = static_cast<Eigen::Index>(grid.size());
        if (f0.size() != N || f1.size() != N)
            throw Error(ErrorCode::configuration, "initial data is not sampled on the solver grid");
        const double reach = std::max({support_radius(grid, f0), support_radius(grid, f1), F.reach});
        if (cfg.half_width < reach + cfg.T_final)
            throw Error(ErrorCode::configuration, "domain too small: data reach plus T_final exceeds the half width");

        const int n = cfg.n_per_side;
        const double h = cfg.cell_width(), dt = cfg.dt, dt2 = dt * dt;
        const int total = static_cast<int>(std::llround(cfg.T_final / dt));
        auto forcing = [&](int step) {
            Field value = F.at(step * dt);
            if (value.size() != N)
                throw Error(ErrorCode::configuration, "forcing is not sampled on the solver grid");
            return value;
        };

        Field lap(N);
        laplacian(f0, n, h, lap);
        Field prev = f0;
        Field cur = f0 + dt * f1 + 0.5 * dt2 * (lap - pot.V().cwiseProduct(f0) + forcing(0));

        std::vector<double> times{0.0};
        std::vector<Field> snaps{f0};
        std::vector<double> energies{energy(prev, cur, pot, cfg)};
        for (int step = 1; step <= total; ++step)
        {
            if (step % cfg.output_every == 0)
            {
                times.push_back(step * dt);
                snaps.push_back(cur);
            }
            if (step == total && step % cfg.output_every != 0)
            {
                times.push_back(step * dt);
                snaps.push_back(cur);
            }
            laplacian(cur, n, h, lap);
            Field next = 2.0 * cur - prev + dt2 * (lap - pot.V().cwiseProduct(cur) + forcing(step));
            if (!next.allFinite())
                throw Error(ErrorCode::instability, "non-finite value at step " + std::to_string(step + 1));
            if (static_cast<int>(snaps.size()) > static_cast<int>(energies.size()))
                energies.push_back(energy(cur, next, pot, cfg));
            prev = std::move(cur);
            cur = std::move(next);
        }
        Eigen::MatrixXd values(N, static_cast<Eigen::Index>(snaps.size()));
        for (std::size_t k = 0; k < snaps.size(); ++k)
            values.col(static_cast<Eigen::Index>(k)) = snaps[k];
        return {WaveField(grid, std::move(times), std::move(values)), std::move(energies)};
    }
} // namespace dispwave
