#pragma once

#include "dispwave/grid.hpp"
#include "dispwave/operator_core.hpp"
#include "dispwave/potential.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dispwave
{
    /// R0((lambda + i0)^2) as a radial kernel with its log singularity.
    RadialKernel free_resolvent_kernel(double lambda);

    /// Inverse of U + T(lambda) in the symmetric frame vt_i = sqrt(w_i) v_i on
    /// the active potential nodes, where it is complex symmetric.
    struct ResolventSlice
    {
        double lambda = 0.0;
        Eigen::MatrixXcd UT_inverse;
        double condition_estimate = 0.0;
    };

    /// T(lambda) = v R0 v on the full potential grid.
    KernelOperator build_T(double lambda, const PotentialSpec& pot);

    /// Throws zero_potential for V = 0 and near_singular when the condition
    /// estimate exceeds 1 / tol.
    ResolventSlice invert_UT(double lambda, const PotentialSpec& pot, double tol = 1e-12);

    enum class Verdict
    {
        regular,
        singular,
        zero_potential
    };
    std::string to_string(Verdict v);

    struct RegularityReport
    {
        double sigma_min = 0.0;
        Verdict verdict = Verdict::zero_potential;
        int bound_state_count = 0;
        std::vector<double> zero_suspects;
        double tol_regular = 0.0;
        double norm_M = 0.0;   ///< ||U + v G0 v||_2
    };

    /// Smallest singular value of Q(U + v G0 v)Q on the complement of v.
    /// tol_regular <= 0 selects 1e-4 * ||U + v G0 v||_2.
    RegularityReport regularity_check(const PotentialSpec& pot, double tol_regular = -1.0);

    struct CouplingThreshold
    {
        double beta_star = 0.0;
        double sigma_min_at_star = 0.0;
        std::vector<std::pair<double, double>> sweep;   ///< (beta, sigma_min)
    };

    /// First coupling beta in (0, beta_max] at which Q(U + beta v G0 v)Q becomes
    /// singular, for the family beta * base. Located by a sweep of the inertia
    /// followed by bisection. Throws configuration when no crossing exists.
    CouplingThreshold coupling_threshold(const PotentialSpec& base, double beta_max, int n_sweep = 16);

    /// Precomputed distance tables for repeated evaluation of R_V(lambda) from
    /// a source grid to an observation grid.
    class ResolventEngine
    {
    public:
        ResolventEngine(PotentialSpec pot, Grid2D src, Grid2D obs);

        const PotentialSpec& potential() const { return pot_; }
        const Grid2D& src() const { return src_; }
        const Grid2D& obs() const { return obs_; }
        bool free() const { return !coupled_; }

        /// R0 f on obs.
        Eigen::VectorXcd apply_free(double lambda, const Field& f) const;
        /// The Birman–Schwinger correction R0 v (U + T)^{-1} v R0 f on obs.
        Eigen::VectorXcd correction(double lambda, const Field& f, double tol = 1e-12) const;
        /// R_V f = R0 f - correction.
        Eigen::VectorXcd apply(double lambda, const Field& f, double tol = 1e-12) const;
        /// Kernel values R_V(lambda)(obs_i, src_j), without source weights.
        Eigen::MatrixXcd kernel_matrix(double lambda, double tol = 1e-12) const;
        /// Kernel values of the correction term, without source weights.
        Eigen::MatrixXcd correction_matrix(double lambda, double tol = 1e-12) const;
        /// Distances from obs to src.
        const DistanceTable& table() const { return os_; }

    private:
        struct Coupled
        {
            Grid2D active;
            Eigen::VectorXd vt, U;
            DistanceTable pp, ps, op;
        };

        PotentialSpec pot_;
        Grid2D src_, obs_;
        DistanceTable os_;
        std::optional<Coupled> coupled_;
    };

    /// R_V f = R0 f - R0 v (U + T)^{-1} v R0 f with f on src, result on obs.
    Eigen::VectorXcd apply_RV(double lambda, const PotentialSpec& pot, const Field& f, const Grid2D& src,
                              const Grid2D& obs);
    Eigen::VectorXcd apply_RV(double lambda, const PotentialSpec& pot, const Field& f, const Grid2D& obs);

    struct BornReport
    {
        Eigen::VectorXcd value;
        std::vector<double> ratios;   ///< successive term norm ratios on the potential grid
        bool diverged = false;
    };

    /// sum_{n=0}^{n_terms} R0 (-V R0)^n f with f and the result on obs.
    BornReport born_series_RV(double lambda, const PotentialSpec& pot, const Field& f, const Grid2D& obs,
                              int n_terms);
} // namespace dispwave
