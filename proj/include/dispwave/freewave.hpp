#pragma once

#include "dispwave/grid.hpp"
#include "dispwave/specfun.hpp"

#include <cstddef>

namespace dispwave::freewave
{
    using specfun::cplx;

    struct ConeKernelParams
    {
        double epsilon = 0.1;
        double t_max = 64.0;

        void validate() const;
    };

    struct FreeKernelSample
    {
        double t = 0.0;
        double r = 0.0;
        double value = 0.0;
    };

    /// (1/2pi) (t^2 - r^2)^{-1/2} inside the forward cone, 0 elsewhere. The
    /// grazing case t == r returns 0 and bumps grazing_count().
    double sine_kernel(double t, double r);
    FreeKernelSample sample_sine_kernel(double t, double r);
    std::size_t grazing_count();

    /// sin(t sqrt(-Delta))/sqrt(-Delta) f on the observation points. f lives on a
    /// uniform grid and is taken as zero outside it; it is evaluated through
    /// 8-point Lagrange interpolation, so the output support is the cone of
    /// supp f dilated by the interpolation reach.
    Field free_sine_apply(double t, const Grid2D& src, const Field& f, const Grid2D& obs);

    struct Gradient
    {
        Field dx;
        Field dy;
    };

    /// Fourth-order central differences with zero padding.
    Gradient finite_difference_gradient(const Grid2D& grid, const Field& f);

    /// cos(t sqrt(-Delta)) f from the radial-derivative representation. Warns
    /// (category "truncation") when f does not vanish on the grid boundary.
    Field free_cosine_apply(double t, const Grid2D& src, const Field& f, const Gradient& grad, const Grid2D& obs);

    /// R0((lambda + i0)^2)(x, y) with |x - y| = r. Conjugate symmetric in lambda.
    cplx resolvent_kernel_free(double lambda, double r);

    /// C^2 quintic step from 0 at 1 - epsilon to 1 at 1 + epsilon.
    double eta(double t, double epsilon);

    /// Smooth cutoff, 1 on |lambda| <= 1 and 0 on |lambda| >= 2.
    double cutoff_h(double lambda);

    /// h(lambda) (i/4 sgn lambda - log|lambda| / (2 pi)).
    cplx low_energy_profile(double lambda);

    /// Fourier transform int e^{-i lambda t} (...) d lambda of low_energy_profile.
    /// Served from a table built once on first use.
    double low_energy_transform(double t);

    /// Transform of the smooth remainder (eta/t)^vee - low_energy_profile.
    double ghat(double t, const ConeKernelParams& params = {});

    /// L(t, r) = 1_{t >= r}(t^2 - r^2)^{-1/2} - eta(t)/t + ghat(t).
    double cone_L_kernel(double t, double r, const ConeKernelParams& params = {});

    /// int_a^b |L(t, r)| dt with the cone singularity handled by substitution.
    double cone_L_abs_integral(double r, double a, double b, const ConeKernelParams& params = {});
} // namespace dispwave::freewave
