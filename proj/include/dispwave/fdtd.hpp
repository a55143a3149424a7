#pragma once

#include "dispwave/grid.hpp"
#include "dispwave/potential.hpp"
#include "dispwave/wavefield.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace dispwave
{
    struct FdtdConfig
    {
        double half_width = 0.0;
        int n_per_side = 0;
        double dt = 0.0;
        double T_final = 0.0;
        int output_every = 1;   ///< store every k-th step

        double cell_width() const { return 2.0 * half_width / n_per_side; }
        /// Throws configuration on a CFL violation or a non-positive field.
        void validate() const;
    };

    /// Largest dt under dt_factor times the CFL limit h / sqrt(2) that divides
    /// `cadence` evenly; output_every is set so samples land on multiples of `cadence`.
    FdtdConfig make_fdtd_config(double half_width, int n_per_side, double T_final, double cadence,
                                double dt_factor = 0.9);

    struct LeapfrogState
    {
        Field prev;
        Field cur;
    };

    struct FdtdResult
    {
        WaveField field;
        std::vector<double> energy;   ///< energy at each stored time
    };

    /// Forcing evaluated on the solver grid at any time; reach bounds the
    /// max-norm radius of its support over the run.
    struct Forcing
    {
        std::function<Field(double)> at;
        double reach = 0.0;
    };

    /// Leapfrog solution of f_tt - Delta f + V f = F with Dirichlet walls. V and
    /// F live on the solver grid. Throws configuration if the data support plus
    /// T_final reaches the wall, instability on a non-finite step.
    FdtdResult fdtd_solve(const Field& f0, const Field& f1, const std::optional<WaveField>& F,
                          const PotentialSpec& pot, const FdtdConfig& cfg);
    FdtdResult fdtd_solve(const Field& f0, const Field& f1, const Forcing& F, const PotentialSpec& pot,
                          const FdtdConfig& cfg);

    /// Advances (f^{n-1}, f^n) by `steps` unforced leapfrog steps.
    LeapfrogState leapfrog(LeapfrogState state, const PotentialSpec& pot, const FdtdConfig& cfg, int steps);

    /// Discrete energy of the consecutive snapshots (f^n, f^{n+1}).
    double energy(const Field& fn, const Field& fn1, const PotentialSpec& pot, const FdtdConfig& cfg);

    /// The solver grid of a configuration.
    Grid2D fdtd_grid(const FdtdConfig& cfg);
} // namespace dispwave
