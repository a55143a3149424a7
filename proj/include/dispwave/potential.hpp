#pragma once

#include "dispwave/grid.hpp"

#include <array>
#include <functional>
#include <vector>

namespace dispwave
{
    /// Real potential profile V(x).
    using Profile = std::function<double(Point)>;

    namespace profiles
    {
        Profile zero();
        /// amplitude * exp(-|x - c|^2 / radius^2)
        Profile gaussian(double amplitude, double radius, Point center = {});
        /// amplitude on the disk |x - c| < radius
        Profile well(double amplitude, double radius, Point center = {});
        /// amplitude * exp(-(|x - c| - radius)^2 / width^2)
        Profile ring(double amplitude, double radius, double width, Point center = {});
        /// Smooth compactly supported bump amplitude * exp(1 - 1/(1 - |x-c|^2/radius^2)).
        Profile bump(double amplitude, double radius, Point center = {});
    } // namespace profiles

    /// Radial kernels of the local Kato-type norms, all cut off at |x - y| = 1.
    enum class KatoKernel
    {
        log_power,      ///< log_-^theta r
        inv_sqrt,       ///< r^{-1/2} on r <= 1
        inv_sqrt_log,   ///< r^{-1/2} log_- r
    };

    /// sup_y sum_j w_j |f_j| k(|x_j - y|) over y in nodes and midpoints. Cells
    /// touching y are integrated exactly against k.
    double kato_type_sup(const Grid2D& grid, const Field& abs_f, KatoKernel kernel, double theta = 1.0);

    /// Sampled potential with its Birman–Schwinger factors and norms.
    class PotentialSpec
    {
    public:
        PotentialSpec(Grid2D grid, Field values);
        static PotentialSpec sample(const Profile& profile, Grid2D grid);

        const Grid2D& grid() const { return grid_; }
        const Field& V() const { return V_; }
        const Field& U() const { return U_; }
        const Field& v() const { return v_; }
        double l1_norm() const { return l1_; }
        /// ||(1 + log_+|x|)^k V||_1 for k = 2, 3, 4.
        double weighted_l1(int k) const;
        /// Kato-type norms of V, evaluated on demand.
        double kato_half() const;
        double kato_log() const;
        double max_abs() const { return max_abs_; }
        bool is_zero() const { return max_abs_ == 0.0; }

        /// Nodes with |V| above 1e-14 * max|V|; the Birman–Schwinger system lives there.
        const std::vector<int>& active() const { return active_; }

        PotentialSpec scaled(double factor) const;

    private:
        Grid2D grid_;
        Field V_, U_, v_;
        double l1_ = 0.0;
        std::array<double, 3> weighted_{};
        double max_abs_ = 0.0;
        std::vector<int> active_;
    };
} // namespace dispwave
