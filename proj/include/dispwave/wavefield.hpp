#pragma once

#include "dispwave/grid.hpp"

#include <Eigen/Dense>

#include <vector>

namespace dispwave
{
    /// Real field sampled on a grid at strictly increasing times; column k holds time k.
    class WaveField
    {
    public:
        WaveField(Grid2D obs, std::vector<double> times, Eigen::MatrixXd values);

        const Grid2D& obs() const { return obs_; }
        const std::vector<double>& times() const { return times_; }
        const Eigen::MatrixXd& values() const { return values_; }
        std::size_t steps() const { return times_.size(); }
        Field at(std::size_t k) const { return values_.col(static_cast<Eigen::Index>(k)); }

        /// Index of the sample within tol of t; throws configuration otherwise.
        std::size_t index_of(double t, double tol = 1e-9) const;
        /// Linear interpolation in time, zero outside [times.front(), times.back()].
        Field sample(double t) const;
        /// Uniform spacing of the time samples; throws configuration if they are not uniform.
        double uniform_step() const;

    private:
        Grid2D obs_;
        std::vector<double> times_;
        Eigen::MatrixXd values_;
    };

    /// Samples g(x) h(t) on a grid at the given times.
    WaveField separable_field(const Grid2D& obs, const Field& g, const std::vector<double>& times,
                              const std::vector<double>& h);
} // namespace dispwave
