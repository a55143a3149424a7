#pragma once

#include "dispwave/grid.hpp"
#include "dispwave/norms.hpp"
#include "dispwave/operator_core.hpp"
#include "dispwave/potential.hpp"
#include "dispwave/resolvent.hpp"
#include "dispwave/wavefield.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace dispwave
{
    /// Composite Gauss-Legendre rule on [-lambda_max, lambda_max], symmetric
    /// about zero: geometric panels toward zero, uniform bulk panels, and a
    /// smooth taper on the outer 20% of the band.
    struct SpectralGrid
    {
        std::vector<double> nodes;     ///< ascending, no node at zero
        std::vector<double> weights;
        double lambda_max = 0.0;
        int refinement = 0;

        std::size_t size() const { return nodes.size(); }
        /// 1 on |lambda| <= 0.8 lambda_max, 0 from lambda_max on.
        double taper(double lambda) const;
        /// Positive half of the nodes, ascending, with their weights.
        std::vector<std::pair<double, double>> positive() const;
    };

    /// n_nodes >= 64 and at least refinement + 2 panels of 8 nodes per side.
    SpectralGrid make_spectral_grid(double lambda_max, int n_nodes = 2048, int refinement = 12);

    /// Band limit 3 / cell_width, safely below the aliasing limit of the grid.
    SpectralGrid default_spectral_grid(double cell_width, int n_nodes = 2048, int refinement = 12);

    /// Kernel of Im R0((lambda + i0)^2) = J0(lambda r) / 4 for lambda > 0, sampled pointwise.
    RadialKernel free_spectral_density_kernel(double lambda);

    struct SynthesisOptions
    {
        double solve_tol = 1e-12;
        /// Compare against a grid with twice the nodes and warn above this relative gap; <= 0 disables.
        double self_check_tol = 0.0;
        /// Also cache Re R_V f, needed by the Fourier synthesis.
        bool keep_real = false;
    };

    /// Cached samples of R_V((lambda_k + i0)^2) f on the observation grid for
    /// every positive node, from which the propagators are summed at any time.
    /// Throws spectral_assumption_violated unless V = 0 or the zero energy is regular.
    class SpectralSynthesis
    {
    public:
        SpectralSynthesis(const PotentialSpec& pot, const Grid2D& src, const Field& f, const Grid2D& obs,
                          const SpectralGrid& sg, const SynthesisOptions& options = {});

        const Grid2D& obs() const { return obs_; }
        const SpectralGrid& grid() const { return sg_; }
        int bound_state_count() const { return bound_states_; }

        /// sin(t sqrt H) P_c / sqrt H f
        Field sine(double t) const;
        /// cos(t sqrt H) P_c f
        Field cosine(double t) const;
        /// cos(t sqrt H) P_c / H f with the time integral cut at T_max.
        Field cos_over_H(double t, double T_max) const;
        /// sum over all nodes of w e^{-i lambda t} taper R_V f; vanishes for t < 0.
        Field fourier(double t) const;

    private:
        Field finish(Field u) const;
        Field sum(const std::function<double(double)>& multiplier, bool imaginary = true) const;

        Grid2D obs_;
        SpectralGrid sg_;
        std::vector<double> lambda_;
        std::vector<double> weight_;   ///< quadrature weight times taper
        Eigen::MatrixXd im_, re_;      ///< obs x positive nodes
        int bound_states_ = 0;
        std::optional<SpectrumData> spectrum_;
        std::optional<Grid2D> spectrum_grid_;
    };

    Field apply_sine_H(double t, const PotentialSpec& pot, const Grid2D& src, const Field& f, const Grid2D& obs,
                       const SpectralGrid& sg, const SynthesisOptions& options = {});
    Field apply_cosine_H(double t, const PotentialSpec& pot, const Grid2D& src, const Field& f, const Grid2D& obs,
                         const SpectralGrid& sg, const SynthesisOptions& options = {});

    struct CosOverH
    {
        Field value;
        double truncation = 0.0;   ///< weighted L2 norm of the last decade [T_max / 10, T_max]
        double relative_truncation = 0.0;
    };

    /// cos(t sqrt H) P_c / H f as the integral of the sine propagator over
    /// [t, T_max]; warns when the last decade exceeds 10% of the total.
    CosOverH cos_over_H(double t, const PotentialSpec& pot, const Grid2D& src, const Field& f, const Grid2D& obs,
                        const SpectralGrid& sg, double T_max, const SynthesisOptions& options = {});

    /// Kernel matrices of a propagator at a list of times; applies as M (w o f).
    class PropagatorBank
    {
    public:
        PropagatorBank(Grid2D src, Grid2D obs, std::vector<double> times, std::vector<Eigen::MatrixXd> matrices);

        const Grid2D& src() const { return src_; }
        const Grid2D& obs() const { return obs_; }
        const std::vector<double>& times() const { return times_; }
        std::size_t size() const { return times_.size(); }
        const Eigen::MatrixXd& matrix(std::size_t k) const { return matrices_[k]; }

        /// Index of the stored time within tol of tau; throws configuration otherwise.
        std::size_t index_of(double tau, double tol = 1e-9) const;
        Field apply(std::size_t k, const Field& f) const;

    private:
        Grid2D src_, obs_;
        std::vector<double> times_;
        std::vector<Eigen::MatrixXd> matrices_;
    };

    struct BankOptions
    {
        int taper_power = 1;
        double solve_tol = 1e-12;
    };

    /// Kernel of (2/pi) sum_k w_k taper^p m(lambda_k, tau) Im R_V(lambda_k) for each tau.
    using SpectralMultiplier = std::function<double(double lambda, double tau)>;
    PropagatorBank build_spectral_bank(const PotentialSpec& pot, const Grid2D& src, const Grid2D& obs,
                                       const SpectralGrid& sg, std::vector<double> times,
                                       const SpectralMultiplier& multiplier, const BankOptions& options = {});

    /// sin(tau sqrt H) P_c / sqrt H
    PropagatorBank build_sine_bank(const PotentialSpec& pot, const Grid2D& src, const Grid2D& obs,
                                   const SpectralGrid& sg, std::vector<double> times, const BankOptions& options = {});
    /// cos(tau sqrt H) P_c
    PropagatorBank build_cosine_bank(const PotentialSpec& pot, const Grid2D& src, const Grid2D& obs,
                                     const SpectralGrid& sg, std::vector<double> times,
                                     const BankOptions& options = {});
    /// cos(tau sqrt H) P_c / H with the time integral cut at T_max.
    PropagatorBank build_cos_over_H_bank(const PotentialSpec& pot, const Grid2D& src, const Grid2D& obs,
                                         const SpectralGrid& sg, std::vector<double> times, double T_max,
                                         const BankOptions& options = {});

    /// Times 0, dt, ..., n dt.
    std::vector<double> uniform_times(double dt, int n);

    /// Kernel of the fractional propagator: the Fourier transform in lambda of
    /// R0((lambda + i0)^2)(r) / (|lambda|^{2s-1} sgn lambda), evaluated at time t.
    /// Purely imaginary. Throws domain for s outside (1/4, 1), r <= 0, or t = r.
    cplx fractional_kernel_M(double t, double r, double s);

    /// L^p norm over t in R of fractional_kernel_M(t, r, s).
    double fractional_kernel_norm(double r, double s, double p);

    /// u(t_j) = sum_{s_k <= t_j} dt S(t_j - s_k)(w o F(s_k)) on the bank's
    /// observation grid at the times of F. Throws configuration if the bank
    /// lacks a needed offset.
    WaveField duhamel_inhomogeneous(const WaveField& F, const PropagatorBank& bank);

    struct SemilinearOptions
    {
        double p = 7.0;
        int n_iter = 8;
        double smallness = 1.0;                         ///< bound on the sup norms of f0, f1 and F
        Exponent q = Exponent(8.0), r = Exponent(12.0);   ///< norm of the iterate differences
    };

    struct SemilinearResult
    {
        WaveField solution;
        std::vector<double> differences;   ///< ||f_k - f_{k-1}|| in the reversed norm
        std::vector<double> ratios;        ///< successive difference ratios
        int iterations = 0;
    };

    /// Picard iteration for f_tt + H f = |f|^{p-1} f + F on the bank times.
    /// The banks share times 0, dt, ... and a single grid. Throws
    /// spectral_assumption_violated unless the potential is zero or regular
    /// without bound states, configuration when the data exceed the smallness
    /// budget, divergence after three non-decreasing differences.
    SemilinearResult semilinear_solve(const Field& f0, const Field& f1, const std::optional<WaveField>& F,
                                      const PotentialSpec& pot, const PropagatorBank& sine,
                                      const PropagatorBank& cosine, const SemilinearOptions& options = {});
} // namespace dispwave
