#include "dispwave/operator_core.hpp"

#include "dispwave/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace dispwave
{
    using specfun::pi;

    namespace
    {
        // Means over the unit square [-1/2, 1/2]^2, from eight polar triangles.
        template <class RadialPrimitive>
        double unit_square_mean(RadialPrimitive&& prim)
        {
            std::vector<double> x, w;
            for (int p = 0; p < 4; ++p)
                specfun::append_gauss_panel(0.25 * pi * p / 4, 0.25 * pi * (p + 1) / 4, 20, x, w);
            double acc = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
                acc += w[i] * prim(0.5 / std::cos(x[i]));
            return 8.0 * acc;
        }

        const double unit_mean_log = unit_square_mean([](double a) { return 0.5 * a * a * std::log(a) - 0.25 * a * a; });
        const double unit_mean_inv_sqrt = unit_square_mean([](double a) { return 2.0 / 3.0 * a * std::sqrt(a); });

        double singular_part(Singularity s, double r)
        {
            switch (s)
            {
            case Singularity::none: return 0.0;
            case Singularity::log: return std::log(r);
            case Singularity::inv_sqrt: return 1.0 / std::sqrt(r);
            }
            return 0.0;
        }

        double singular_mean(Singularity s, double h)
        {
            switch (s)
            {
            case Singularity::none: return 0.0;
            case Singularity::log: return square_mean_log(h);
            case Singularity::inv_sqrt: return square_mean_inv_sqrt(h);
            }
            return 0.0;
        }

        // Mean of the continuous remainder over the cell, 2x2 panels of 8x8 Gauss points.
        template <class Remainder>
        cplx remainder_mean(double h, Remainder&& rem)
        {
            std::vector<double> x, w;
            specfun::append_gauss_panel(-0.5 * h, 0.0, 8, x, w);
            specfun::append_gauss_panel(0.0, 0.5 * h, 8, x, w);
            cplx acc = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
                for (std::size_t j = 0; j < x.size(); ++j)
                    acc += w[i] * w[j] * rem(x[i], x[j]);
            return acc / (h * h);
        }

        void check_finite(cplx v, std::size_t i, std::size_t j)
        {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            {
                std::ostringstream os;
                os << "kernel is not finite at pair (" << i << ", " << j << ")";
                throw Error(ErrorCode::assembly, os.str());
            }
        }

        bool uniform_weights(const Grid2D& grid)
        {
            const double w0 = grid.weight(0);
            for (double w : grid.weights())
                if (std::abs(w - w0) > 1e-12 * w0)
                    return false;
            return true;
        }
    } // namespace

    double square_mean_log(double h)
    {
        if (!(h > 0.0))
            throw Error(ErrorCode::domain, "cell width must be positive");
        return std::log(h) + unit_mean_log;
    }

    double square_mean_inv_sqrt(double h)
    {
        if (!(h > 0.0))
            throw Error(ErrorCode::domain, "cell width must be positive");
        return unit_mean_inv_sqrt / std::sqrt(h);
    }

    cplx cell_mean(const RadialKernel& kernel, double h)
    {
        if (kernel.singularity == Singularity::none)
            return kernel.value(0.0);
        const auto s = kernel.singularity;
        const cplx c = kernel.coefficient;
        return c * singular_mean(s, h) + remainder_mean(h, [&](double x, double y) {
                   const double r = std::hypot(x, y);
                   return kernel.value(r) - c * singular_part(s, r);
               });
    }

    DistanceTable::DistanceTable(const Grid2D& dst, const Grid2D& src)
        : index_(static_cast<Eigen::Index>(dst.size()), static_cast<Eigen::Index>(src.size())),
          src_cell_(src.cell_width())
    {
        const double scale = 1e-10 * std::max(dst.cell_width(), src.cell_width());
        const double zero = 1e-9 * src.cell_width();
        std::unordered_map<long long, int> seen;
        for (std::size_t i = 0; i < dst.size(); ++i)
            for (std::size_t j = 0; j < src.size(); ++j)
            {
                double r = distance(dst.node(i), src.node(j));
                if (r < zero)
                    r = 0.0;
                const long long key = std::llround(r / scale);
                auto [it, inserted] = seen.try_emplace(key, static_cast<int>(distances_.size()));
                if (inserted)
                    distances_.push_back(r);
                index_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = it->second;
            }
    }

    std::vector<cplx> DistanceTable::evaluate(const RadialKernel& kernel) const
    {
        std::vector<cplx> values(distances_.size());
        for (std::size_t k = 0; k < distances_.size(); ++k)
        {
            const double r = distances_[k];
            values[k] = r == 0.0 ? cell_mean(kernel, src_cell_) : kernel.value(r);
            check_finite(values[k], k, k);
        }
        return values;
    }

    Eigen::MatrixXcd DistanceTable::materialize(const std::vector<cplx>& values) const
    {
        Eigen::MatrixXcd m(index_.rows(), index_.cols());
        for (Eigen::Index j = 0; j < index_.cols(); ++j)
            for (Eigen::Index i = 0; i < index_.rows(); ++i)
                m(i, j) = values[static_cast<std::size_t>(index_(i, j))];
        return m;
    }

    Eigen::VectorXcd DistanceTable::apply(const std::vector<cplx>& values, const Eigen::VectorXcd& x) const
    {
        Eigen::VectorXcd y = Eigen::VectorXcd::Zero(index_.rows());
        for (Eigen::Index j = 0; j < index_.cols(); ++j)
        {
            const cplx xj = x[j];
            if (xj == cplx{})
                continue;
            for (Eigen::Index i = 0; i < index_.rows(); ++i)
                y[i] += values[static_cast<std::size_t>(index_(i, j))] * xj;
        }
        return y;
    }

    Eigen::VectorXcd DistanceTable::apply(const std::vector<cplx>& values, const Eigen::VectorXd& x) const
    {
        Eigen::VectorXd re = Eigen::VectorXd::Zero(index_.rows()), im = Eigen::VectorXd::Zero(index_.rows());
        for (Eigen::Index j = 0; j < index_.cols(); ++j)
        {
            const double xj = x[j];
            if (xj == 0.0)
                continue;
            for (Eigen::Index i = 0; i < index_.rows(); ++i)
            {
                const cplx v = values[static_cast<std::size_t>(index_(i, j))];
                re[i] += v.real() * xj;
                im[i] += v.imag() * xj;
            }
        }
        Eigen::VectorXcd y(index_.rows());
        y.real() = re;
        y.imag() = im;
        return y;
    }

    KernelOperator::KernelOperator(Eigen::MatrixXcd matrix, Grid2D src, Grid2D dst)
        : matrix_(std::move(matrix)), src_(std::move(src)), dst_(std::move(dst))
    {
        if (matrix_.rows() != static_cast<Eigen::Index>(dst_.size()) ||
            matrix_.cols() != static_cast<Eigen::Index>(src_.size()))
            throw Error(ErrorCode::domain, "kernel matrix shape does not match its grids");
        if (!matrix_.allFinite())
            throw Error(ErrorCode::assembly, "kernel matrix has non-finite entries");
    }

    Eigen::VectorXcd KernelOperator::apply(const Eigen::VectorXcd& f) const
    {
        if (f.size() != matrix_.cols())
            throw Error(ErrorCode::domain, "kernel operator input has the wrong length");
        Eigen::VectorXcd wf(f.size());
        for (Eigen::Index j = 0; j < f.size(); ++j)
            wf[j] = src_.weight(static_cast<std::size_t>(j)) * f[j];
        return matrix_ * wf;
    }

    KernelOperator assemble_operator(const PairKernel& kernel, Singularity singularity, cplx coefficient,
                                     const Grid2D& src, const Grid2D& dst)
    {
        const double h = src.cell_width();
        const double zero = 1e-9 * h;
        Eigen::MatrixXcd m(static_cast<Eigen::Index>(dst.size()), static_cast<Eigen::Index>(src.size()));
        for (std::size_t i = 0; i < dst.size(); ++i)
            for (std::size_t j = 0; j < src.size(); ++j)
            {
                const Point x = dst.node(i), y = src.node(j);
                cplx value;
                if (distance(x, y) < zero)
                {
                    if (singularity == Singularity::none)
                        value = kernel(x, y);
                    else
                        value = coefficient * singular_mean(singularity, h) +
                                remainder_mean(h, [&](double a, double b) {
                                    return kernel(x, Point{y.x + a, y.y + b}) -
                                           coefficient * singular_part(singularity, std::hypot(a, b));
                                });
                }
                else
                    value = kernel(x, y);
                check_finite(value, i, j);
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
            }
        return KernelOperator(std::move(m), src, dst);
    }

    KernelOperator assemble_operator(const RadialKernel& kernel, const Grid2D& src, const Grid2D& dst)
    {
        const DistanceTable table(dst, src);
        return KernelOperator(table.materialize(table.evaluate(kernel)), src, dst);
    }

    RadialKernel green_zero_kernel()
    {
        return {[](double r) { return cplx{-std::log(r) / (2.0 * pi), 0.0}; }, Singularity::log, -1.0 / (2.0 * pi)};
    }

    BlockSplit make_block_split(const PotentialSpec& pot)
    {
        if (pot.is_zero())
            throw Error(ErrorCode::zero_potential, "projector onto v needs a nonzero potential");
        const auto& g = pot.grid();
        const Eigen::Index n = static_cast<Eigen::Index>(g.size());
        Eigen::VectorXd wv(n);
        for (Eigen::Index j = 0; j < n; ++j)
            wv[j] = g.weight(static_cast<std::size_t>(j)) * pot.v()[j];
        BlockSplit s;
        s.P = pot.v() * wv.transpose() / pot.l1_norm();
        s.Q = Eigen::MatrixXd::Identity(n, n) - s.P;
        return s;
    }

    Eigen::MatrixXcd feshbach_invert(const Eigen::MatrixXcd& L00, const Eigen::MatrixXcd& L01,
                                     const Eigen::MatrixXcd& L10, const Eigen::MatrixXcd& L11, double tol)
    {
        const Eigen::Index n0 = L00.rows(), n1 = L11.rows();
        if (L00.cols() != n0 || L11.cols() != n1 || L01.rows() != n0 || L01.cols() != n1 || L10.rows() != n1 ||
            L10.cols() != n0)
            throw Error(ErrorCode::domain, "feshbach_invert block shapes are inconsistent");
        const Eigen::PartialPivLU<Eigen::MatrixXcd> lu00(L00);
        const double rc00 = L00.cwiseAbs().maxCoeff() == 0.0 ? 0.0 : lu00.rcond();
        if (!(rc00 > tol))
            throw Error(ErrorCode::feshbach_l00_singular, "upper-left block is singular");
        const Eigen::MatrixXcd A01 = lu00.solve(L01);
        const Eigen::MatrixXcd C = L11 - L10 * A01;
        const Eigen::PartialPivLU<Eigen::MatrixXcd> luC(C);
        const double rcC = C.cwiseAbs().maxCoeff() == 0.0 ? 0.0 : luC.rcond();
        if (!(rcC > tol))
            throw Error(ErrorCode::feshbach_schur_singular, "Schur complement is singular");
        const Eigen::MatrixXcd Cinv = luC.inverse();
        const Eigen::MatrixXcd A10 = L10 * lu00.inverse();

        Eigen::MatrixXcd out(n0 + n1, n0 + n1);
        out.topLeftCorner(n0, n0) = lu00.inverse() + A01 * Cinv * A10;
        out.topRightCorner(n0, n1) = -A01 * Cinv;
        out.bottomLeftCorner(n1, n0) = -Cinv * A10;
        out.bottomRightCorner(n1, n1) = Cinv;
        return out;
    }

    Eigen::MatrixXd discretize_laplacian(const Grid2D& grid, bool periodic)
    {
        const auto& g = grid.require_layout();
        const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
        const double c = 1.0 / (g.h * g.h);
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
            {
                const int k = g.index(i, j);
                L(k, k) = 4.0 * c;
                const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
                for (const auto& q : nb)
                {
                    int a = q[0], b = q[1];
                    if (periodic)
                    {
                        a = (a + g.nx) % g.nx;
                        b = (b + g.ny) % g.ny;
                    }
                    else if (a < 0 || b < 0 || a >= g.nx || b >= g.ny)
                        continue;
                    L(k, g.index(a, b)) -= c;
                }
            }
        return L;
    }

    Eigen::MatrixXd discretize_H(const PotentialSpec& pot, bool periodic)
    {
        Eigen::MatrixXd H = discretize_laplacian(pot.grid(), periodic);
        H.diagonal() += pot.V();
        return H;
    }

    SpectrumData point_spectrum(const Eigen::MatrixXd& H, const Grid2D& grid, double tol_zero)
    {
        if (H.rows() != H.cols() || H.rows() != static_cast<Eigen::Index>(grid.size()))
            throw Error(ErrorCode::domain, "Hamiltonian does not match the grid");
        if (!uniform_weights(grid))
            throw Error(ErrorCode::domain, "point_spectrum requires equal cell weights");
        SpectrumData out;
        out.tol_zero = tol_zero > 0.0 ? tol_zero : 1e-6 * H.cwiseAbs().maxCoeff();
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        if (es.info() != Eigen::Success)
            throw Error(ErrorCode::numeric, "symmetric eigensolver did not converge");
        out.eigenvalues = es.eigenvalues();
        int bound = 0;
        for (Eigen::Index k = 0; k < out.eigenvalues.size(); ++k)
        {
            const double e = out.eigenvalues[k];
            if (e < -out.tol_zero)
                ++bound;
            else if (e <= out.tol_zero)
                out.zero_suspects.push_back(e);
        }
        out.bound_values = out.eigenvalues.head(bound);
        out.bound_vectors = es.eigenvectors().leftCols(bound) / std::sqrt(grid.weight(0));
        return out;
    }

    Field project_continuous(const Field& f, const SpectrumData& spec, const Grid2D& grid)
    {
        Field out = f;
        for (Eigen::Index k = 0; k < spec.bound_vectors.cols(); ++k)
        {
            const Field phi = spec.bound_vectors.col(k);
            out -= weighted_dot(grid, f, phi) * phi;
        }
        return out;
    }

    double l1_operator_norm(const Eigen::MatrixXd& A, const Grid2D& grid)
    {
        double best = 0.0;
        for (Eigen::Index j = 0; j < A.cols(); ++j)
        {
            double s = 0.0;
            for (Eigen::Index i = 0; i < A.rows(); ++i)
                s += grid.weight(static_cast<std::size_t>(i)) * std::abs(A(i, j));
            best = std::max(best, s / grid.weight(static_cast<std::size_t>(j)));
        }
        return best;
    }

    FractionalBoundEntry fractional_power_bound(const PotentialSpec& pot, double alpha, double beta,
                                                int quadrature_node_limit)
    {
        if (!(alpha >= 0.0 && alpha < 1.0) || !(beta > alpha && beta < 1.0))
            throw Error(ErrorCode::domain, "fractional bound requires 0 <= alpha < beta < 1");
        const auto& grid = pot.grid();
        const auto& lay = grid.require_layout();
        const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
        const Eigen::MatrixXd L = discretize_laplacian(grid);
        const Eigen::MatrixXd H = L + Eigen::MatrixXd(pot.V().asDiagonal());
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eh(H), el(L);
        if (eh.info() != Eigen::Success || el.info() != Eigen::Success)
            throw Error(ErrorCode::numeric, "symmetric eigensolver did not converge");

        FractionalBoundEntry entry;
        entry.n_per_side = lay.nx;
        double lambda0 = 1.0;
        for (int it = 0;; ++it)
        {
            if (it > 60)
                throw Error(ErrorCode::numeric, "no admissible lambda0 found");
            const Eigen::MatrixXd R = (L + lambda0 * I).inverse();
            const double bound = l1_operator_norm(pot.V().asDiagonal() * R, grid);
            if (bound <= 0.5 && eh.eigenvalues().minCoeff() + lambda0 > 0.0)
                break;
            lambda0 *= 2.0;
        }
        entry.lambda0 = lambda0;

        const Eigen::VectorXd hpow = (eh.eigenvalues().array() + lambda0).pow(alpha).matrix();
        const Eigen::VectorXd lpow = (el.eigenvalues().array() + 1.0).pow(-beta).matrix();
        const Eigen::MatrixXd A_eig = eh.eigenvectors() * hpow.asDiagonal() * eh.eigenvectors().transpose() *
                                      el.eigenvectors() * lpow.asDiagonal() * el.eigenvectors().transpose();
        entry.norm_eigen = l1_operator_norm(A_eig, grid);
        entry.norm_quadrature = std::numeric_limits<double>::quiet_NaN();
        entry.relative_agreement = std::numeric_limits<double>::quiet_NaN();
        if (n > quadrature_node_limit)
            return entry;

        // Trapezoid in u = log(lambda); analytic leading-order tails outside [ulo, uhi].
        const double du = 0.5, ulo = -30.0;
        const double hnorm = H.cwiseAbs().rowwise().sum().maxCoeff() + lambda0;
        const double uhi = 2.0 * std::log(hnorm) + 30.0;
        const Eigen::MatrixXd Hs = H + lambda0 * I;
        const Eigen::MatrixXd Ls = L + I;

        Eigen::MatrixXd Ia = I;
        if (alpha > 0.0)
        {
            Ia = std::exp(alpha * ulo) / alpha * I + Hs * std::exp((alpha - 1.0) * uhi) / (1.0 - alpha);
            for (double u = ulo; u <= uhi + 1e-12; u += du)
            {
                const double lam = std::exp(u);
                const double wt = (u == ulo || u + du > uhi + 1e-12) ? 0.5 * du : du;
                const Eigen::MatrixXd Rl = (Hs + lam * I).partialPivLu().inverse();
                Ia += wt * std::exp(alpha * u) * (I - lam * Rl);
            }
            Ia *= std::sin(pi * alpha) / pi;
        }
        Eigen::MatrixXd Ib = std::exp((1.0 - beta) * ulo) / (1.0 - beta) * Ls.partialPivLu().inverse() +
                             std::exp(-beta * uhi) / beta * I;
        for (double u = ulo; u <= uhi + 1e-12; u += du)
        {
            const double mu = std::exp(u);
            const double wt = (u == ulo || u + du > uhi + 1e-12) ? 0.5 * du : du;
            Ib += wt * std::exp((1.0 - beta) * u) * (Ls + mu * I).partialPivLu().inverse();
        }
        Ib *= std::sin(pi * beta) / pi;

        const Eigen::MatrixXd A_quad = Ia * Ib;
        entry.norm_quadrature = l1_operator_norm(A_quad, grid);
        entry.relative_agreement = (A_quad - A_eig).norm() / A_eig.norm();
        return entry;
    }

    FractionalBoundReport fractional_power_bound_check(const Profile& profile, double half_width,
                                                       const std::vector<int>& sizes, double alpha, double beta,
                                                       int quadrature_node_limit)
    {
        FractionalBoundReport report{alpha, beta, {}};
        for (int n : sizes)
        {
            const auto pot = PotentialSpec::sample(profile, make_grid(half_width, n));
            report.entries.push_back(fractional_power_bound(pot, alpha, beta, quadrature_node_limit));
        }
        return report;
    }
} // namespace dispwave
