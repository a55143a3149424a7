#include "dispwave/evolution.hpp"

#include "dispwave/errors.hpp"
#include "dispwave/specfun.hpp"

#include <boost/math/special_functions/bessel.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dispwave
{
    namespace
    {
        constexpr int panel_order = 8;
        constexpr double two_over_pi = 2.0 / specfun::pi;

        Eigen::VectorXd weighted(const Grid2D& grid, const Field& f)
        {
            if (f.size() != static_cast<Eigen::Index>(grid.size()))
                throw Error(ErrorCode::domain, "field does not match its grid");
            Eigen::VectorXd wf(f.size());
            for (Eigen::Index i = 0; i < f.size(); ++i)
                wf[i] = grid.weight(static_cast<std::size_t>(i)) * f[i];
            return wf;
        }

        bool same_nodes(const Grid2D& a, const Grid2D& b)
        {
            if (a.size() != b.size())
                return false;
            const double tol = 1e-9 * std::max(a.cell_width(), b.cell_width());
            for (std::size_t i = 0; i < a.size(); ++i)
                if (distance(a.node(i), b.node(i)) > tol)
                    return false;
            return true;
        }

        /// Regularity report for a nonzero potential; throws unless the verdict is regular.
        std::optional<RegularityReport> require_regular(const PotentialSpec& pot)
        {
            if (pot.is_zero())
                return std::nullopt;
            auto report = regularity_check(pot);
            if (report.verdict != Verdict::regular)
            {
                std::ostringstream msg;
                msg << "zero energy is not regular (sigma_min " << report.sigma_min << ", tol "
                    << report.tol_regular << ")";
                throw Error(ErrorCode::spectral_assumption_violated, msg.str());
            }
            return report;
        }

        /// Kernel of Im R_V(lambda) from src to obs without source weights.
        void warn_misaligned(const Grid2D& src, const PotentialSpec& pot)
        {
            if (pot.V().isZero(0.0))
                return;
            const double h = pot.grid().cell_width();
            for (std::size_t i = 0; i < src.size(); ++i)
                for (std::size_t j = 0; j < pot.grid().size(); ++j)
                {
                    const Point a = src.node(i), b = pot.grid().node(j);
                    const double d = std::hypot(a.x - b.x, a.y - b.y);
                    if (d > 1e-9 * h && d < 0.25 * h)
                    {
                        warn("alignment", "source nodes are not on the potential lattice; expect slow convergence");
                        return;
                    }
                }
        }

        Eigen::MatrixXd spectral_density_matrix(const ResolventEngine& engine, double lambda, double tol)
        {
            const auto& table = engine.table();
            Eigen::MatrixXd K = table.materialize(table.evaluate(free_spectral_density_kernel(lambda))).real();
            if (!engine.free())
                K -= engine.correction_matrix(lambda, tol).imag();
            return K;
        }

        double field_norm(const Grid2D& grid, const Field& f) { return weighted_l2(grid, f); }
    } // namespace

    double SpectralGrid::taper(double lambda) const
    {
        return 1.0 - specfun::smooth_step((std::abs(lambda) - 0.8 * lambda_max) / (0.2 * lambda_max));
    }

    std::vector<std::pair<double, double>> SpectralGrid::positive() const
    {
        std::vector<std::pair<double, double>> out;
        for (std::size_t k = 0; k < nodes.size(); ++k)
            if (nodes[k] > 0.0)
                out.emplace_back(nodes[k], weights[k]);
        return out;
    }

    SpectralGrid make_spectral_grid(double lambda_max, int n_nodes, int refinement)
    {
        if (!(lambda_max > 0.0) || !std::isfinite(lambda_max))
            throw Error(ErrorCode::domain, "lambda_max must be positive");
        if (n_nodes < 64)
            throw Error(ErrorCode::domain, "spectral grid needs at least 64 nodes");
        if (refinement < 0)
            throw Error(ErrorCode::domain, "refinement must be non-negative");
        const int panels = n_nodes / 2 / panel_order;
        const int bulk = panels - refinement - 1;
        if (bulk < 1)
            throw Error(ErrorCode::domain, "too few nodes for the requested refinement");
        const double b = lambda_max / (bulk + 1);

        std::vector<double> x, w;
        specfun::append_gauss_panel(0.0, std::ldexp(b, -refinement), panel_order, x, w);
        for (int k = refinement - 1; k >= 0; --k)
            specfun::append_gauss_panel(std::ldexp(b, -k - 1), std::ldexp(b, -k), panel_order, x, w);
        for (int j = 1; j <= bulk; ++j)
            specfun::append_gauss_panel(j * b, (j + 1) * b, panel_order, x, w);

        SpectralGrid sg;
        sg.lambda_max = lambda_max;
        sg.refinement = refinement;
        for (std::size_t k = x.size(); k-- > 0;)
        {
            sg.nodes.push_back(-x[k]);
            sg.weights.push_back(w[k]);
        }
        sg.nodes.insert(sg.nodes.end(), x.begin(), x.end());
        sg.weights.insert(sg.weights.end(), w.begin(), w.end());
        return sg;
    }

    SpectralGrid default_spectral_grid(double cell_width, int n_nodes, int refinement)
    {
        if (!(cell_width > 0.0))
            throw Error(ErrorCode::domain, "cell width must be positive");
        return make_spectral_grid(3.0 / cell_width, n_nodes, refinement);
    }

    RadialKernel free_spectral_density_kernel(double lambda)
    {
        return {[lambda](double r) { return cplx{0.25 * specfun::bessel_j0(lambda * r), 0.0}; }, Singularity::none,
                cplx{}};
    }

    SpectralSynthesis::SpectralSynthesis(const PotentialSpec& pot, const Grid2D& src, const Field& f,
                                         const Grid2D& obs, const SpectralGrid& sg, const SynthesisOptions& options)
        : obs_(obs), sg_(sg)
    {
        const Eigen::VectorXd wf = weighted(src, f);
        if (const auto report = require_regular(pot); report && report->bound_state_count > 0)
        {
            bound_states_ = report->bound_state_count;
            if (pot.grid().uniform() && same_nodes(obs, pot.grid()))
            {
                spectrum_ = point_spectrum(discretize_H(pot), pot.grid());
                spectrum_grid_ = pot.grid();
            }
            else
                warn("projection", "bound states present; the observation grid differs from the potential grid "
                                   "so the continuous-spectrum projection is skipped");
        }

        warn_misaligned(src, pot);
        const ResolventEngine engine(pot, src, obs);
        const auto& table = engine.table();
        const auto nodes = sg.positive();
        const auto n_obs = static_cast<Eigen::Index>(obs.size());
        const auto K = static_cast<Eigen::Index>(nodes.size());
        im_.resize(n_obs, K);
        if (options.keep_real)
            re_.resize(n_obs, K);
        for (Eigen::Index k = 0; k < K; ++k)
        {
            const auto [lambda, w] = nodes[static_cast<std::size_t>(k)];
            lambda_.push_back(lambda);
            weight_.push_back(w * sg.taper(lambda));
            im_.col(k) = table.apply(table.evaluate(free_spectral_density_kernel(lambda)), wf).real();
            if (options.keep_real)
                re_.col(k) = table.apply(table.evaluate(free_resolvent_kernel(lambda)), wf).real();
            if (!engine.free())
            {
                const Eigen::VectorXcd c = engine.correction(lambda, f, options.solve_tol);
                im_.col(k) -= c.imag();
                if (options.keep_real)
                    re_.col(k) -= c.real();
            }
        }
    }

    Field SpectralSynthesis::sum(const std::function<double(double)>& multiplier, bool imaginary) const
    {
        Eigen::VectorXd c(static_cast<Eigen::Index>(lambda_.size()));
        for (std::size_t k = 0; k < lambda_.size(); ++k)
            c[static_cast<Eigen::Index>(k)] = weight_[k] * multiplier(lambda_[k]);
        return imaginary ? Field(im_ * c) : Field(re_ * c);
    }

    Field SpectralSynthesis::finish(Field u) const
    {
        if (spectrum_)
            return project_continuous(u, *spectrum_, *spectrum_grid_);
        return u;
    }

    Field SpectralSynthesis::sine(double t) const
    {
        return finish(two_over_pi * sum([t](double l) { return std::sin(t * l); }));
    }

    Field SpectralSynthesis::cosine(double t) const
    {
        return finish(two_over_pi * sum([t](double l) { return l * std::cos(t * l); }));
    }

    Field SpectralSynthesis::cos_over_H(double t, double T_max) const
    {
        return finish(two_over_pi * sum([t, T_max](double l) { return (std::cos(t * l) - std::cos(T_max * l)) / l; }));
    }

    Field SpectralSynthesis::fourier(double t) const
    {
        if (re_.size() == 0)
            throw Error(ErrorCode::configuration, "Fourier synthesis needs the real part; set keep_real");
        return 2.0 * (sum([t](double l) { return std::cos(t * l); }, false) +
                      sum([t](double l) { return std::sin(t * l); }));
    }

    namespace
    {
        template <class Eval>
        Field synthesize(const PotentialSpec& pot, const Grid2D& src, const Field& f, const Grid2D& obs,
                         const SpectralGrid& sg, const SynthesisOptions& options, const char* name, Eval eval)
        {
            const Field u = eval(SpectralSynthesis(pot, src, f, obs, sg, options));
            if (options.self_check_tol > 0.0)
            {
                const auto fine = make_spectral_grid(sg.lambda_max, 2 * static_cast<int>(sg.size()), sg.refinement);
                const Field v = eval(SpectralSynthesis(pot, src, f, obs, fine, options));
                const double nu = field_norm(obs, u), nv = field_norm(obs, v);
                const double gap = field_norm(obs, u - v) / std::max(nv, 1e-300);
                if (gap > options.self_check_tol)
                {
                    std::ostringstream msg;
                    msg << name << ": n vs 2n nodes differ by " << gap << " (norms " << nu << ", " << nv << ")";
                    warn("accuracy", msg.str());
                }
            }
            return u;
        }

        void require_time(double t)
        {
            if (!(t >= 0.0) || !std::isfinite(t))
                throw Error(ErrorCode::domain, "evolution time must be finite and non-negative");
        }
    } // namespace

    Field apply_sine_H(double t, const PotentialSpec& pot, const Grid2D& src, const Field& f, const Grid2D& obs,
                       const SpectralGrid& sg, const SynthesisOptions& options)
    {
        require_time(t);
        return synthesize(pot, src, f, obs, sg, options, "sine", [t](const SpectralSynthesis& s) { return s.sine(t); });
    }

    Field apply_cosine_H(double t, const PotentialSpec& pot, const Grid2D& src, const Field& f, const Grid2D& obs,
                         const SpectralGrid& sg, const SynthesisOptions& options)
    {
        require_time(t);
        return synthesize(pot, src, f, obs, sg, options, "cosine",
                          [t](const SpectralSynthesis& s) { return s.cosine(t); });
    }

    CosOverH cos_over_H(double t, const PotentialSpec& pot, const Grid2D& src, const Field& f, const Grid2D& obs,
                        const SpectralGrid& sg, double T_max, const SynthesisOptions& options)
    {
        require_time(t);
        if (!(T_max > t))
            throw Error(ErrorCode::domain, "T_max must exceed t");
        const SpectralSynthesis synth(pot, src, f, obs, sg, options);
        CosOverH out;
        out.value = synth.cos_over_H(t, T_max);
        const Field decade = synth.cos_over_H(std::max(t, 0.1 * T_max), T_max);
        out.truncation = field_norm(obs, decade);
        const double total = field_norm(obs, out.value);
        out.relative_truncation = total > 0.0 ? out.truncation / total : 0.0;
        if (out.relative_truncation > 0.1)
        {
            std::ostringstream msg;
            msg << "cos/H: last decade of [t, " << T_max << "] carries " << 100.0 * out.relative_truncation
                << "% of the value";
            warn("truncation", msg.str());
        }
        return out;
    }

    PropagatorBank::PropagatorBank(Grid2D src, Grid2D obs, std::vector<double> times,
                                   std::vector<Eigen::MatrixXd> matrices)
        : src_(std::move(src)), obs_(std::move(obs)), times_(std::move(times)), matrices_(std::move(matrices))
    {
        if (times_.size() != matrices_.size())
            throw Error(ErrorCode::configuration, "bank needs one matrix per time");
        for (std::size_t k = 0; k < times_.size(); ++k)
        {
            if (k > 0 && !(times_[k] > times_[k - 1]))
                throw Error(ErrorCode::configuration, "bank times must increase strictly");
            if (matrices_[k].rows() != static_cast<Eigen::Index>(obs_.size()) ||
                matrices_[k].cols() != static_cast<Eigen::Index>(src_.size()))
                throw Error(ErrorCode::configuration, "bank matrix does not match its grids");
        }
    }

    std::size_t PropagatorBank::index_of(double tau, double tol) const
    {
        const double slack = tol * std::max(1.0, std::abs(tau));
        const auto it = std::lower_bound(times_.begin(), times_.end(), tau - slack);
        if (it == times_.end() || std::abs(*it - tau) > slack)
        {
            std::ostringstream msg;
            msg << "propagator bank has no entry at time " << tau;
            throw Error(ErrorCode::configuration, msg.str());
        }
        return static_cast<std::size_t>(it - times_.begin());
    }

    Field PropagatorBank::apply(std::size_t k, const Field& f) const { return matrices_.at(k) * weighted(src_, f); }

    PropagatorBank build_spectral_bank(const PotentialSpec& pot, const Grid2D& src, const Grid2D& obs,
                                       const SpectralGrid& sg, std::vector<double> times,
                                       const SpectralMultiplier& multiplier, const BankOptions& options)
    {
        if (options.taper_power < 1)
            throw Error(ErrorCode::domain, "taper power must be at least 1");
        require_regular(pot);
        warn_misaligned(src, pot);
        const ResolventEngine engine(pot, src, obs);
        std::vector<Eigen::MatrixXd> mats(times.size(), Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(obs.size()),
                                                                             static_cast<Eigen::Index>(src.size())));
        for (const auto& [lambda, w] : sg.positive())
        {
            const double c = two_over_pi * w * std::pow(sg.taper(lambda), options.taper_power);
            if (c == 0.0)
                continue;
            const Eigen::MatrixXd K = spectral_density_matrix(engine, lambda, options.solve_tol);
            for (std::size_t m = 0; m < times.size(); ++m)
            {
                const double a = c * multiplier(lambda, times[m]);
                if (a != 0.0)
                    mats[m].noalias() += a * K;
            }
        }
        return PropagatorBank(src, obs, std::move(times), std::move(mats));
    }

    PropagatorBank build_sine_bank(const PotentialSpec& pot, const Grid2D& src, const Grid2D& obs,
                                   const SpectralGrid& sg, std::vector<double> times, const BankOptions& options)
    {
        return build_spectral_bank(pot, src, obs, sg, std::move(times),
                                   [](double l, double tau) { return std::sin(tau * l); }, options);
    }

    PropagatorBank build_cosine_bank(const PotentialSpec& pot, const Grid2D& src, const Grid2D& obs,
                                     const SpectralGrid& sg, std::vector<double> times, const BankOptions& options)
    {
        return build_spectral_bank(pot, src, obs, sg, std::move(times),
                                   [](double l, double tau) { return l * std::cos(tau * l); }, options);
    }

    PropagatorBank build_cos_over_H_bank(const PotentialSpec& pot, const Grid2D& src, const Grid2D& obs,
                                         const SpectralGrid& sg, std::vector<double> times, double T_max,
                                         const BankOptions& options)
    {
        for (double t : times)
            if (!(T_max > t))
                throw Error(ErrorCode::domain, "T_max must exceed every bank time");
        return build_spectral_bank(
            pot, src, obs, sg, std::move(times),
            [T_max](double l, double tau) { return (std::cos(tau * l) - std::cos(T_max * l)) / l; }, options);
    }

    std::vector<double> uniform_times(double dt, int n)
    {
        if (!(dt > 0.0) || n < 0)
            throw Error(ErrorCode::domain, "uniform times need dt > 0 and n >= 0");
        std::vector<double> t(static_cast<std::size_t>(n) + 1);
        for (int k = 0; k <= n; ++k)
            t[static_cast<std::size_t>(k)] = k * dt;
        return t;
    }

    namespace
    {
        // I0(y) e^{-y} and K0(y) e^{y}, with the large-argument series past y = 50.
        double scaled_bessel(bool modified_k, double y)
        {
            if (y < 50.0)
                return modified_k ? boost::math::cyl_bessel_k(0, y) * std::exp(y)
                                  : boost::math::cyl_bessel_i(0, y) * std::exp(-y);
            double term = 1.0, sum = 1.0;
            for (int j = 1; j <= 12; ++j)
            {
                term *= (2.0 * j - 1.0) * (2.0 * j - 1.0) / (8.0 * j * y);
                sum += modified_k && j % 2 == 1 ? -term : term;
            }
            return modified_k ? std::sqrt(specfun::pi / (2.0 * y)) * sum : sum / std::sqrt(2.0 * specfun::pi * y);
        }

        // int_0^inf e^{-eps y} g(y) y^{a-1} dy for g = K0(y) e^{y} or I0(y) e^{-y}.
        double laplace_bessel(bool modified_k, double eps, double a)
        {
            const int start = -30;
            const double delta = std::ldexp(1.0, start);
            double acc = std::pow(delta, a) / a;
            if (modified_k)
                acc *= -std::log(0.5 * delta) - specfun::euler_gamma + 1.0 / a;
            const auto& g = specfun::gauss_legendre(16);
            for (int j = start;; ++j)
            {
                const double lo = std::ldexp(1.0, j), hi = 2.0 * lo;
                for (std::size_t i = 0; i < g.nodes.size(); ++i)
                {
                    const double y = lo + 0.5 * (hi - lo) * (g.nodes[i] + 1.0);
                    acc += 0.5 * (hi - lo) * g.weights[i] * std::exp(-eps * y) * scaled_bessel(modified_k, y) *
                           std::pow(y, a - 1.0);
                }
                if (lo * eps > 80.0)
                    break;
            }
            return acc;
        }

        // m(k) with M(t)(r) = i r^{2s-2} m(t / r).
        double fractional_profile(double k, double s)
        {
            const double a = 2.0 - 2.0 * s;
            double re_I;
            if (k < 1.0)
                re_I = two_over_pi * std::cos(0.5 * specfun::pi * (1.0 - 2.0 * s)) * laplace_bessel(true, 1.0 - k, a);
            else
            {
                const double theta = specfun::pi * (1.0 - s);
                re_I = 2.0 * laplace_bessel(false, k - 1.0, a) * std::cos(theta) -
                       two_over_pi * laplace_bessel(true, k + 1.0, a) * std::sin(theta);
            }
            return 0.5 * re_I;
        }

        void require_fractional_order(double s)
        {
            if (!(s > 0.25))
                throw Error(ErrorCode::domain, "fractional kernel is not locally integrable in t for s <= 1/4");
            if (!(s < 1.0))
                throw Error(ErrorCode::domain, "fractional order must be below 1");
        }
    } // namespace

    cplx fractional_kernel_M(double t, double r, double s)
    {
        require_fractional_order(s);
        if (!(r > 0.0) || !std::isfinite(t))
            throw Error(ErrorCode::domain, "fractional kernel needs r > 0 and finite t");
        if (std::abs(t - r) <= 1e-14 * r)
            throw Error(ErrorCode::domain, "fractional kernel is evaluated on the light cone t = r");
        return {0.0, std::pow(r, 2.0 * s - 2.0) * fractional_profile(t / r, s)};
    }

    double fractional_kernel_norm(double r, double s, double p)
    {
        require_fractional_order(s);
        if (!(r > 0.0) || !(p >= 1.0) || !std::isfinite(p))
            throw Error(ErrorCode::domain, "fractional kernel norm needs r > 0 and finite p >= 1");
        if (s < 0.75 && p * (1.5 - 2.0 * s) >= 1.0)
            throw Error(ErrorCode::domain, "fractional kernel is not p-integrable at the light cone");
        if (p * (2.0 - 2.0 * s) <= 1.0)
            throw Error(ErrorCode::domain, "fractional kernel is not p-integrable at large times");

        const int depth = 40;
        std::vector<std::pair<double, double>> panels{{-1.0, 0.0}, {0.0, 0.5}};
        for (int j = 0; j < depth; ++j)
        {
            panels.emplace_back(-std::ldexp(1.0, j + 1), -std::ldexp(1.0, j));
            panels.emplace_back(std::ldexp(1.0, j + 1), std::ldexp(1.0, j + 2));
            panels.emplace_back(1.0 - std::ldexp(1.0, -j - 1), 1.0 - std::ldexp(1.0, -j - 2));
            panels.emplace_back(1.0 + std::ldexp(1.0, -j - 1), 1.0 + std::ldexp(1.0, -j));
        }
        const auto& g = specfun::gauss_legendre(16);
        double acc = 0.0;
        for (const auto& [ka, kb] : panels)
        {
            const double ta = r * ka, tb = r * kb;
            for (std::size_t i = 0; i < g.nodes.size(); ++i)
            {
                const double t = ta + 0.5 * (tb - ta) * (g.nodes[i] + 1.0);
                acc += 0.5 * std::abs(tb - ta) * g.weights[i] * std::pow(std::abs(fractional_kernel_M(t, r, s)), p);
            }
        }
        return std::pow(acc, 1.0 / p);
    }

    namespace
    {
        // Columns of the Duhamel sum for source columns at uniform spacing dt.
        Eigen::MatrixXd duhamel_columns(const Eigen::MatrixXd& source, const Grid2D& src, double dt,
                                        const PropagatorBank& bank)
        {
            const Eigen::Index n_t = source.cols();
            std::vector<std::size_t> offset(static_cast<std::size_t>(n_t));
            for (Eigen::Index m = 0; m < n_t; ++m)
                offset[static_cast<std::size_t>(m)] = bank.index_of(static_cast<double>(m) * dt);
            Eigen::MatrixXd wF(source.rows(), n_t);
            for (Eigen::Index k = 0; k < n_t; ++k)
                wF.col(k) = weighted(src, source.col(k));
            Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(bank.obs().size()), n_t);
            for (Eigen::Index k = 0; k < n_t; ++k)
            {
                if (wF.col(k).isZero(0.0))
                    continue;
                for (Eigen::Index j = k + 1; j < n_t; ++j)
                    out.col(j).noalias() += dt * bank.matrix(offset[static_cast<std::size_t>(j - k)]) * wF.col(k);
            }
            return out;
        }

        double time_step(const std::vector<double>& times)
        {
            if (times.size() < 2)
                return 1.0;
            const double dt = times[1] - times[0];
            for (std::size_t k = 1; k < times.size(); ++k)
                if (std::abs(times[k] - times[k - 1] - dt) > 1e-9 * std::max(1.0, std::abs(times[k])))
                    throw Error(ErrorCode::configuration, "times are not uniformly spaced");
            return dt;
        }
    } // namespace

    WaveField duhamel_inhomogeneous(const WaveField& F, const PropagatorBank& bank)
    {
        if (!same_nodes(F.obs(), bank.src()))
            throw Error(ErrorCode::configuration, "forcing is not sampled on the bank's source grid");
        const double dt = time_step(F.times());
        return WaveField(bank.obs(), F.times(), duhamel_columns(F.values(), F.obs(), dt, bank));
    }

    SemilinearResult semilinear_solve(const Field& f0, const Field& f1, const std::optional<WaveField>& F,
                                      const PotentialSpec& pot, const PropagatorBank& sine,
                                      const PropagatorBank& cosine, const SemilinearOptions& options)
    {
        if (!(options.p >= 2.0) || options.n_iter < 1)
            throw Error(ErrorCode::domain, "semilinear solve needs p >= 2 and n_iter >= 1");
        if (!same_nodes(sine.src(), sine.obs()) || !same_nodes(cosine.src(), sine.src()) ||
            !same_nodes(cosine.obs(), sine.obs()))
            throw Error(ErrorCode::configuration, "semilinear banks must share a single grid");
        if (sine.times() != cosine.times() || sine.times().empty() || sine.times().front() != 0.0)
            throw Error(ErrorCode::configuration, "semilinear banks must share times starting at 0");
        if (const auto report = require_regular(pot); report && report->bound_state_count > 0)
            throw Error(ErrorCode::spectral_assumption_violated, "potential has bound states");

        const Grid2D& grid = sine.obs();
        const auto& times = sine.times();
        const double dt = time_step(times);
        const auto N = static_cast<Eigen::Index>(grid.size());
        const auto n_t = static_cast<Eigen::Index>(times.size());
        if (f0.size() != N || f1.size() != N)
            throw Error(ErrorCode::configuration, "initial data is not sampled on the bank grid");
        Eigen::MatrixXd forcing = Eigen::MatrixXd::Zero(N, n_t);
        if (F)
        {
            if (!same_nodes(F->obs(), grid) || F->times().size() != times.size())
                throw Error(ErrorCode::configuration, "forcing must be sampled on the bank grid and times");
            forcing = F->values();
        }
        const double size = std::max({f0.cwiseAbs().maxCoeff(), f1.cwiseAbs().maxCoeff(),
                                      forcing.size() ? forcing.cwiseAbs().maxCoeff() : 0.0});
        if (size > options.smallness)
        {
            std::ostringstream msg;
            msg << "data size " << size << " exceeds the smallness budget " << options.smallness;
            throw Error(ErrorCode::configuration, msg.str());
        }

        Eigen::MatrixXd linear(N, n_t);
        for (Eigen::Index j = 0; j < n_t; ++j)
            linear.col(j) = cosine.apply(static_cast<std::size_t>(j), f0) + sine.apply(static_cast<std::size_t>(j), f1);

        const double p = options.p;
        auto nonlinearity = [p](double u) { return std::pow(std::abs(u), p - 1.0) * u; };

        SemilinearResult result{WaveField(grid, times, linear), {}, {}, 0};
        Eigen::MatrixXd current = linear;
        int rising = 0;
        for (int it = 1; it <= options.n_iter; ++it)
        {
            const Eigen::MatrixXd source = current.unaryExpr(nonlinearity) + forcing;
            Eigen::MatrixXd next = linear + duhamel_columns(source, grid, dt, sine);
            const double diff = reversed_norm(grid, next - current, dt, options.q, options.r);
            if (!result.differences.empty())
            {
                const double prev = result.differences.back();
                result.ratios.push_back(prev > 0.0 ? diff / prev : 0.0);
                rising = diff >= prev && diff > 0.0 ? rising + 1 : 0;
            }
            result.differences.push_back(diff);
            result.iterations = it;
            current = std::move(next);
            if (rising >= 3)
            {
                std::ostringstream msg;
                msg << "Picard differences did not decrease for 3 iterations (last " << diff << ")";
                throw Error(ErrorCode::divergence, msg.str());
            }
            if (diff <= 1e-15 * reversed_norm(grid, current, dt, options.q, options.r))
                break;
        }
        result.solution = WaveField(grid, times, current);
        return result;
    }
} // namespace dispwave
