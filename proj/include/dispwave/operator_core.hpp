#pragma once

#include "dispwave/grid.hpp"
#include "dispwave/potential.hpp"
#include "dispwave/specfun.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace dispwave
{
    using specfun::cplx;

    enum class Singularity
    {
        none,
        log,
        inv_sqrt
    };

    /// Mean of log|y| over the square [-h/2, h/2]^2.
    double square_mean_log(double h);
    /// Mean of |y|^{-1/2} over the square [-h/2, h/2]^2.
    double square_mean_inv_sqrt(double h);

    /// Kernel depending on |x - y| only. Near r = 0 it behaves like
    /// coefficient * s(r) + (continuous remainder), s = log r or r^{-1/2}.
    struct RadialKernel
    {
        std::function<cplx(double)> value;
        Singularity singularity = Singularity::none;
        cplx coefficient = 0.0;
    };

    /// Mean of the kernel over a cell of width h centred on the singular point.
    cplx cell_mean(const RadialKernel& kernel, double h);

    /// Distinct pairwise distances between two grids. Each (dst, src) pair
    /// stores an index into the distance list, so a radial kernel is evaluated
    /// once per distinct distance.
    class DistanceTable
    {
    public:
        DistanceTable(const Grid2D& dst, const Grid2D& src);

        const std::vector<double>& distances() const { return distances_; }
        Eigen::Index rows() const { return index_.rows(); }
        Eigen::Index cols() const { return index_.cols(); }
        int index(Eigen::Index i, Eigen::Index j) const { return index_(i, j); }

        /// Kernel values per distinct distance; zero distance takes the cell
        /// mean over the source cell.
        std::vector<cplx> evaluate(const RadialKernel& kernel) const;

        Eigen::MatrixXcd materialize(const std::vector<cplx>& values) const;
        /// y_i = sum_j K(r_ij) x_j
        Eigen::VectorXcd apply(const std::vector<cplx>& values, const Eigen::VectorXcd& x) const;
        /// Real part and imaginary part applied to a real vector separately.
        Eigen::VectorXcd apply(const std::vector<cplx>& values, const Eigen::VectorXd& x) const;

    private:
        std::vector<double> distances_;
        Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> index_;
        double src_cell_ = 0.0;
    };

    /// Dense kernel matrix between grids; applies as (Af)_i = sum_j A_ij w_j f_j.
    class KernelOperator
    {
    public:
        KernelOperator(Eigen::MatrixXcd matrix, Grid2D src, Grid2D dst);

        const Eigen::MatrixXcd& matrix() const { return matrix_; }
        const Grid2D& src() const { return src_; }
        const Grid2D& dst() const { return dst_; }
        Eigen::VectorXcd apply(const Eigen::VectorXcd& f) const;

    private:
        Eigen::MatrixXcd matrix_;
        Grid2D src_, dst_;
    };

    using PairKernel = std::function<cplx(Point, Point)>;

    /// Off-diagonal entries are point values; coincident nodes get the source
    /// cell mean (exact square mean of the singular part plus a Gauss rule for
    /// the remainder). Non-finite entries raise an assembly error.
    KernelOperator assemble_operator(const PairKernel& kernel, Singularity singularity, cplx coefficient,
                                     const Grid2D& src, const Grid2D& dst);
    KernelOperator assemble_operator(const RadialKernel& kernel, const Grid2D& src, const Grid2D& dst);

    /// G0(x, y) = -(1/2pi) log|x - y|.
    RadialKernel green_zero_kernel();

    /// Rank-one projector onto v and its complement, acting on node values.
    struct BlockSplit
    {
        Eigen::MatrixXd P;
        Eigen::MatrixXd Q;
    };
    BlockSplit make_block_split(const PotentialSpec& pot);

    /// Block inverse through the Schur complement C = L11 - L10 L00^{-1} L01.
    Eigen::MatrixXcd feshbach_invert(const Eigen::MatrixXcd& L00, const Eigen::MatrixXcd& L01,
                                     const Eigen::MatrixXcd& L10, const Eigen::MatrixXcd& L11, double tol = 1e-12);

    /// Five-point Laplacian plus diag(V), Dirichlet outside the grid (or periodic).
    Eigen::MatrixXd discretize_H(const PotentialSpec& pot, bool periodic = false);
    Eigen::MatrixXd discretize_laplacian(const Grid2D& grid, bool periodic = false);

    struct SpectrumData
    {
        Eigen::VectorXd eigenvalues;     ///< all, ascending
        Eigen::VectorXd bound_values;    ///< eigenvalues below -tol_zero
        Eigen::MatrixXd bound_vectors;   ///< weighted-orthonormal columns
        std::vector<double> zero_suspects;
        double tol_zero = 0.0;
    };

    /// tol_zero <= 0 selects 1e-6 * max|H_ij|.
    SpectrumData point_spectrum(const Eigen::MatrixXd& H, const Grid2D& grid, double tol_zero = -1.0);

    Field project_continuous(const Field& f, const SpectrumData& spec, const Grid2D& grid);

    /// Induced L1 -> L1 norm of a node-value operator: max_j sum_i w_i |A_ij| / w_j.
    double l1_operator_norm(const Eigen::MatrixXd& A, const Grid2D& grid);

    struct FractionalBoundEntry
    {
        int n_per_side = 0;
        double lambda0 = 0.0;
        double norm_eigen = 0.0;
        double norm_quadrature = 0.0;   ///< NaN when route (b) was skipped
        double relative_agreement = 0.0;
    };

    struct FractionalBoundReport
    {
        double alpha = 0.0;
        double beta = 0.0;
        std::vector<FractionalBoundEntry> entries;
    };

    /// <H>^alpha (-Delta + 1)^{-beta} realised with <H> = H + lambda0, by
    /// eigendecomposition and by the double resolvent integral (separable in
    /// lambda and mu). lambda0 is doubled until ||V(-Delta + lambda0)^{-1}||_{L1} <= 1/2.
    FractionalBoundEntry fractional_power_bound(const PotentialSpec& pot, double alpha, double beta,
                                                int quadrature_node_limit = 700);
    FractionalBoundReport fractional_power_bound_check(const Profile& profile, double half_width,
                                                       const std::vector<int>& sizes, double alpha, double beta,
                                                       int quadrature_node_limit = 700);
} // namespace dispwave
