#include "dispwave/resolvent.hpp"

#include "dispwave/errors.hpp"
#include "dispwave/freewave.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace dispwave
{
    namespace
    {
        struct ActiveSet
        {
            Grid2D grid;
            Eigen::VectorXd vt;   // sqrt(w) |V|^{1/2}
            Eigen::VectorXd U;
            Eigen::VectorXd V;
        };

        ActiveSet active_set(const PotentialSpec& pot)
        {
            if (pot.is_zero())
                throw Error(ErrorCode::zero_potential, "potential vanishes identically");
            const auto& idx = pot.active();
            const auto n = static_cast<Eigen::Index>(idx.size());
            std::vector<Point> nodes;
            std::vector<double> weights;
            Eigen::VectorXd vt(n), U(n), V(n);
            for (Eigen::Index k = 0; k < n; ++k)
            {
                const auto i = static_cast<std::size_t>(idx[static_cast<std::size_t>(k)]);
                nodes.push_back(pot.grid().node(i));
                weights.push_back(pot.grid().weight(i));
                const auto ii = static_cast<Eigen::Index>(i);
                vt[k] = std::sqrt(pot.grid().weight(i)) * pot.v()[ii];
                U[k] = pot.U()[ii];
                V[k] = pot.V()[ii];
            }
            return {Grid2D(std::move(nodes), std::move(weights), pot.grid().cell_width()), vt, U, V};
        }

        Eigen::VectorXd weighted(const Grid2D& grid, const Field& f)
        {
            if (f.size() != static_cast<Eigen::Index>(grid.size()))
                throw Error(ErrorCode::domain, "field does not match its grid");
            Eigen::VectorXd wf(f.size());
            for (Eigen::Index i = 0; i < f.size(); ++i)
                wf[i] = grid.weight(static_cast<std::size_t>(i)) * f[i];
            return wf;
        }

        // Householder projection of a symmetric matrix onto the complement of a.
        Eigen::MatrixXd complement_block(const Eigen::MatrixXd& M, const Eigen::VectorXd& a)
        {
            const Eigen::Index n = a.size();
            Eigen::VectorXd u = a.normalized();
            u[0] += u[0] >= 0.0 ? 1.0 : -1.0;
            const double beta = 2.0 / u.squaredNorm();
            const Eigen::VectorXd Mu = M * u;
            const double uMu = u.dot(Mu);
            Eigen::MatrixXd H = M;
            H.noalias() -= beta * u * Mu.transpose();
            H.noalias() -= beta * Mu * u.transpose();
            H.noalias() += (beta * beta * uMu) * u * u.transpose();
            return H.bottomRightCorner(n - 1, n - 1);
        }

        Eigen::MatrixXd bs_green(const ActiveSet& set)
        {
            const DistanceTable table(set.grid, set.grid);
            const Eigen::MatrixXd G = table.materialize(table.evaluate(green_zero_kernel())).real();
            return set.vt.asDiagonal() * G * set.vt.asDiagonal();
        }

        Eigen::MatrixXcd bs_matrix(const ActiveSet& set, const DistanceTable& pp, double lambda)
        {
            Eigen::MatrixXcd M = pp.materialize(pp.evaluate(free_resolvent_kernel(lambda)));
            M = set.vt.asDiagonal() * M * set.vt.asDiagonal();
            M.diagonal() += set.U.cast<cplx>();
            return M;
        }

        Eigen::PartialPivLU<Eigen::MatrixXcd> factor(const Eigen::MatrixXcd& M, double tol, double lambda,
                                                      double* condition = nullptr)
        {
            Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
            const double rc = lu.rcond();
            const double cond = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
            if (!(cond <= 1.0 / tol))
                throw Error(ErrorCode::near_singular,
                            "U + T(lambda) is near singular at lambda = " + std::to_string(lambda) +
                                " (condition estimate " + std::to_string(cond) + ")");
            if (condition)
                *condition = cond;
            return lu;
        }

        int negative_count(const Eigen::VectorXd& ev)
        {
            return static_cast<int>((ev.array() < 0.0).count());
        }
    } // namespace

    RadialKernel free_resolvent_kernel(double lambda)
    {
        if (lambda == 0.0 || !std::isfinite(lambda))
            throw Error(ErrorCode::domain, "resolvent requires a finite nonzero lambda");
        return {[lambda](double r) { return freewave::resolvent_kernel_free(lambda, r); }, Singularity::log,
                cplx{-1.0 / (2.0 * specfun::pi), 0.0}};
    }

    KernelOperator build_T(double lambda, const PotentialSpec& pot)
    {
        const Grid2D& g = pot.grid();
        const DistanceTable table(g, g);
        Eigen::MatrixXcd A = table.materialize(table.evaluate(free_resolvent_kernel(lambda)));
        A = pot.v().asDiagonal() * A * pot.v().asDiagonal();
        return KernelOperator(std::move(A), g, g);
    }

    ResolventSlice invert_UT(double lambda, const PotentialSpec& pot, double tol)
    {
        const ActiveSet set = active_set(pot);
        const DistanceTable pp(set.grid, set.grid);
        ResolventSlice slice;
        slice.lambda = lambda;
        const auto lu = factor(bs_matrix(set, pp, lambda), tol, lambda, &slice.condition_estimate);
        slice.UT_inverse = lu.inverse();
        return slice;
    }

    std::string to_string(Verdict v)
    {
        switch (v)
        {
        case Verdict::regular: return "regular";
        case Verdict::singular: return "singular";
        case Verdict::zero_potential: return "zero_potential";
        }
        return "unknown";
    }

    RegularityReport regularity_check(const PotentialSpec& pot, double tol_regular)
    {
        RegularityReport report;
        if (pot.is_zero())
        {
            report.verdict = Verdict::zero_potential;
            return report;
        }
        const ActiveSet set = active_set(pot);
        Eigen::MatrixXd M = bs_green(set);
        M.diagonal() += set.U;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(M, Eigen::EigenvaluesOnly);
        report.norm_M = full.eigenvalues().cwiseAbs().maxCoeff();
        report.tol_regular = tol_regular > 0.0 ? tol_regular : 1e-4 * report.norm_M;

        if (set.vt.size() > 1)
        {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> q(complement_block(M, set.vt), Eigen::EigenvaluesOnly);
            report.sigma_min = q.eigenvalues().cwiseAbs().minCoeff();
        }
        else
            report.sigma_min = std::numeric_limits<double>::infinity();

        if (pot.grid().uniform())
        {
            const auto spec = point_spectrum(discretize_H(pot), pot.grid());
            report.bound_state_count = static_cast<int>(spec.bound_values.size());
            report.zero_suspects = spec.zero_suspects;
        }
        report.verdict = report.sigma_min > report.tol_regular && report.zero_suspects.empty() ? Verdict::regular
                                                                                                 : Verdict::singular;
        return report;
    }

    CouplingThreshold coupling_threshold(const PotentialSpec& base, double beta_max, int n_sweep)
    {
        if (!(beta_max > 0.0) || n_sweep < 1)
            throw Error(ErrorCode::domain, "coupling sweep needs beta_max > 0 and at least one step");
        const ActiveSet set = active_set(base);
        if (set.vt.size() < 2)
            throw Error(ErrorCode::domain, "coupling sweep needs at least two active nodes");
        // U is invariant under positive scaling; v G0 v scales linearly in beta.
        const Eigen::MatrixXd K = complement_block(bs_green(set), set.vt);
        const Eigen::MatrixXd A = complement_block(Eigen::MatrixXd(set.U.asDiagonal()), set.vt);
        auto spectrum = [&](double beta) {
            return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A + beta * K, Eigen::EigenvaluesOnly)
                .eigenvalues();
        };

        CouplingThreshold out;
        int prev = negative_count(spectrum(0.0));
        double lo = 0.0, hi = -1.0;
        for (int j = 1; j <= n_sweep; ++j)
        {
            const double beta = beta_max * j / n_sweep;
            const auto ev = spectrum(beta);
            out.sweep.emplace_back(beta, ev.cwiseAbs().minCoeff());
            const int neg = negative_count(ev);
            if (neg != prev && hi < 0.0)
            {
                hi = beta;
                break;
            }
            lo = beta;
        }
        if (hi < 0.0)
            throw Error(ErrorCode::configuration, "no regularity crossing below beta_max");
        for (int it = 0; it < 60 && hi - lo > 1e-12 * hi; ++it)
        {
            const double mid = 0.5 * (lo + hi);
            (negative_count(spectrum(mid)) == prev ? lo : hi) = mid;
        }
        out.beta_star = 0.5 * (lo + hi);
        out.sigma_min_at_star = spectrum(out.beta_star).cwiseAbs().minCoeff();
        return out;
    }

    ResolventEngine::ResolventEngine(PotentialSpec pot, Grid2D src, Grid2D obs)
        : pot_(std::move(pot)), src_(std::move(src)), obs_(std::move(obs)), os_(obs_, src_)
    {
        if (pot_.is_zero())
            return;
        ActiveSet set = active_set(pot_);
        DistanceTable pp(set.grid, set.grid), ps(set.grid, src_), op(obs_, set.grid);
        coupled_.emplace(Coupled{std::move(set.grid), std::move(set.vt), std::move(set.U), std::move(pp),
                                 std::move(ps), std::move(op)});
    }

    Eigen::VectorXcd ResolventEngine::apply_free(double lambda, const Field& f) const
    {
        return os_.apply(os_.evaluate(free_resolvent_kernel(lambda)), weighted(src_, f));
    }

    Eigen::VectorXcd ResolventEngine::correction(double lambda, const Field& f, double tol) const
    {
        if (!coupled_)
            return Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(obs_.size()));
        const auto& c = *coupled_;
        const auto kernel = free_resolvent_kernel(lambda);
        const Eigen::VectorXcd g = c.ps.apply(c.ps.evaluate(kernel), weighted(src_, f));
        Eigen::MatrixXcd M = c.pp.materialize(c.pp.evaluate(kernel));
        M = c.vt.asDiagonal() * M * c.vt.asDiagonal();
        M.diagonal() += c.U.cast<cplx>();
        const auto lu = factor(M, tol, lambda);
        const Eigen::VectorXcd x = c.vt.cwiseProduct(lu.solve(Eigen::VectorXcd(c.vt.cwiseProduct(g))));
        return c.op.apply(c.op.evaluate(kernel), x);
    }

    Eigen::VectorXcd ResolventEngine::apply(double lambda, const Field& f, double tol) const
    {
        return apply_free(lambda, f) - correction(lambda, f, tol);
    }

    Eigen::MatrixXcd ResolventEngine::kernel_matrix(double lambda, double tol) const
    {
        Eigen::MatrixXcd K = os_.materialize(os_.evaluate(free_resolvent_kernel(lambda)));
        if (coupled_)
            K -= correction_matrix(lambda, tol);
        return K;
    }

    Eigen::MatrixXcd ResolventEngine::correction_matrix(double lambda, double tol) const
    {
        if (!coupled_)
            return Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(obs_.size()),
                                          static_cast<Eigen::Index>(src_.size()));
        const auto& c = *coupled_;
        const auto kernel = free_resolvent_kernel(lambda);
        Eigen::MatrixXcd M = c.pp.materialize(c.pp.evaluate(kernel));
        M = c.vt.asDiagonal() * M * c.vt.asDiagonal();
        M.diagonal() += c.U.cast<cplx>();
        const auto lu = factor(M, tol, lambda);
        const Eigen::MatrixXcd right = c.vt.asDiagonal() * c.ps.materialize(c.ps.evaluate(kernel));
        const Eigen::MatrixXcd left = c.op.materialize(c.op.evaluate(kernel)) * c.vt.asDiagonal();
        return left * lu.solve(right);
    }

    Eigen::VectorXcd apply_RV(double lambda, const PotentialSpec& pot, const Field& f, const Grid2D& src,
                              const Grid2D& obs)
    {
        return ResolventEngine(pot, src, obs).apply(lambda, f);
    }

    Eigen::VectorXcd apply_RV(double lambda, const PotentialSpec& pot, const Field& f, const Grid2D& obs)
    {
        return apply_RV(lambda, pot, f, obs, obs);
    }

    BornReport born_series_RV(double lambda, const PotentialSpec& pot, const Field& f, const Grid2D& obs,
                              int n_terms)
    {
        if (n_terms < 0)
            throw Error(ErrorCode::domain, "Born series needs n_terms >= 0");
        const auto kernel = free_resolvent_kernel(lambda);
        const Eigen::VectorXd wf = weighted(obs, f);
        const DistanceTable oo(obs, obs);
        BornReport report;
        report.value = oo.apply(oo.evaluate(kernel), wf);
        if (n_terms == 0 || pot.is_zero())
            return report;

        const ActiveSet set = active_set(pot);
        const DistanceTable ps(set.grid, obs), pp(set.grid, set.grid), op(obs, set.grid);
        const auto k_pp = pp.evaluate(kernel), k_op = op.evaluate(kernel);
        Eigen::VectorXd wV(set.V.size());
        for (Eigen::Index i = 0; i < wV.size(); ++i)
            wV[i] = -set.grid.weight(static_cast<std::size_t>(i)) * set.V[i];
        auto norm = [&](const Eigen::VectorXcd& h) {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < h.size(); ++i)
                acc += set.grid.weight(static_cast<std::size_t>(i)) * std::norm(h[i]);
            return std::sqrt(acc);
        };

        Eigen::VectorXcd h = ps.apply(ps.evaluate(kernel), wf);
        for (int n = 1; n <= n_terms; ++n)
        {
            const Eigen::VectorXcd src = wV.cwiseProduct(h);
            report.value += op.apply(k_op, src);
            if (n == n_terms)
                break;
            const Eigen::VectorXcd next = pp.apply(k_pp, src);
            const double prev = norm(h);
            report.ratios.push_back(prev > 0.0 ? norm(next) / prev : 0.0);
            h = next;
        }
        for (double r : report.ratios)
            report.diverged = report.diverged || r >= 1.0;
        return report;
    }
} // namespace dispwave
