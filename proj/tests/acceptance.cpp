#include "dispwave/errors.hpp"
#include "dispwave/evolution.hpp"
#include "dispwave/fdtd.hpp"
#include "dispwave/freewave.hpp"
#include "dispwave/norms.hpp"
#include "dispwave/operator_core.hpp"
#include "dispwave/resolvent.hpp"
#include "dispwave/specfun.hpp"

#include <boost/rational.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

using namespace dispwave;

namespace
{
    struct Outcome
    {
        bool pass = false;
        std::string detail;
    };

    std::string num(double x)
    {
        std::ostringstream s;
        s << std::setprecision(3) << x;
        return s.str();
    }

    Field sample(const Grid2D& g, const Profile& p)
    {
        Field f(static_cast<Eigen::Index>(g.size()));
        for (std::size_t i = 0; i < g.size(); ++i)
            f[static_cast<Eigen::Index>(i)] = p(g.node(i));
        return f;
    }

    Profile cut_gaussian(double width2, double cut)
    {
        return [=](Point p) {
            const double r2 = p.x * p.x + p.y * p.y;
            return r2 < cut * cut ? std::exp(-r2 / width2) : 0.0;
        };
    }

    double rel(const Grid2D& g, const Field& a, const Field& b) { return weighted_l2(g, a - b) / weighted_l2(g, b); }

    SpectralGrid resolved_grid(double lambda_max, double panel_width)
    {
        return make_spectral_grid(lambda_max, 16 * (static_cast<int>(std::ceil(lambda_max / panel_width)) + 13), 12);
    }

    double seconds_since(std::chrono::steady_clock::time_point t0)
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    // Shared setup of the perturbed comparison: Gaussian V, lattice-aligned data.
    const Profile perturbed_V = profiles::gaussian(4.0, 0.4);
    const Profile perturbed_data = cut_gaussian(0.36, 2.4);
    std::optional<SpectralSynthesis> fine_synthesis;
    std::optional<Grid2D> fine_obs;

    Outcome free_pipeline()
    {
        const auto src = make_grid(2.0, 48);
        const Field f = sample(src, cut_gaussian(0.16, 2.0));
        const auto obs = make_grid(6.0, 32);
        const auto pot = PotentialSpec::sample(profiles::zero(), make_grid(1.0, 8));
        const auto sg = resolved_grid(3.0 / src.cell_width(), 0.4);
        double worst = 0.0, slowest = 0.0;
        for (double t : {0.5, 1.0, 2.0, 4.0})
        {
            const auto t0 = std::chrono::steady_clock::now();
            const Field u = apply_sine_H(t, pot, src, f, obs, sg);
            slowest = std::max(slowest, seconds_since(t0));
            worst = std::max(worst, rel(obs, u, freewave::free_sine_apply(t, src, f, obs)));
        }
        return {worst <= 1e-3 && slowest <= 300.0,
                "max rel L2 " + num(worst) + " (<= 1e-3), slowest t " + num(slowest) + " s"};
    }

    Outcome perturbed_pipeline()
    {
        double err[2][2];
        for (int level = 0; level < 2; ++level)
        {
            const int np = 12 << level;
            const double h = 3.0 / np;
            const auto pot = PotentialSpec::sample(perturbed_V, make_grid(1.5, np));
            if (regularity_check(pot).verdict != Verdict::regular)
                return {false, "potential is not regular"};
            const auto src = make_grid(2.5, static_cast<int>(std::lround(5.0 / h)));
            const Field f = sample(src, perturbed_data);

            const int nf = 160 << level, stride = 4 << level;
            const auto cfg = make_fdtd_config(5.0, nf, 2.0, 1.0, 0.5);
            const auto g = fdtd_grid(cfg);
            const auto run = fdtd_solve(Field::Zero(static_cast<Eigen::Index>(g.size())), sample(g, perturbed_data),
                                        std::nullopt, PotentialSpec::sample(perturbed_V, g), cfg);
            std::vector<Point> pts;
            std::vector<Eigen::Index> idx;
            for (std::size_t i = 0; i < g.size(); ++i)
            {
                const int ii = static_cast<int>(i) % nf, jj = static_cast<int>(i) / nf;
                const Point p = g.node(i);
                if (ii % stride == 0 && jj % stride == 0 && std::abs(p.x) <= 3.0 && std::abs(p.y) <= 3.0)
                {
                    pts.push_back(p);
                    idx.push_back(static_cast<Eigen::Index>(i));
                }
            }
            const auto obs = make_point_grid(pts, g.cell_width() * stride);
            SynthesisOptions opt;
            opt.keep_real = level == 1;
            SpectralSynthesis syn(pot, src, f, obs, resolved_grid(3.0 / h, 0.4), opt);
            for (int k = 0; k < 2; ++k)
            {
                const double t = 1.0 + k;
                const Field full = run.field.at(run.field.index_of(t));
                Field ref(static_cast<Eigen::Index>(idx.size()));
                for (std::size_t m = 0; m < idx.size(); ++m)
                    ref[static_cast<Eigen::Index>(m)] = full[idx[m]];
                err[level][k] = rel(obs, syn.sine(t), ref);
            }
            if (level == 1)
            {
                fine_synthesis.emplace(std::move(syn));
                fine_obs = obs;
            }
        }
        const bool pass = err[1][0] <= 5e-2 && err[1][1] <= 5e-2 && err[0][0] <= 5e-2 && err[0][1] <= 5e-2 &&
                          err[0][0] / err[1][0] >= 2.0 && err[0][1] / err[1][1] >= 2.0;
        return {pass, "t=1: " + num(err[0][0]) + " -> " + num(err[1][0]) + ", t=2: " + num(err[0][1]) + " -> " +
                          num(err[1][1]) + " (<= 5e-2, ratio >= 2)"};
    }

    Outcome hankel_consistency()
    {
        double worst = 0.0;
        for (int k = 0; k < 20; ++k)
        {
            const double rho = 0.3 * std::pow(20.0 / 0.3, k / 19.0);
            for (auto b : {specfun::HankelBranch::plus, specfun::HankelBranch::minus})
            {
                const cplx exact = specfun::hankel0(b, rho);
                worst = std::max(worst, std::abs(specfun::hankel_ft_check(b, rho) - exact) / std::abs(exact));
            }
        }
        return {worst <= 1e-4, "max rel gap " + num(worst) + " (<= 1e-4)"};
    }

    Outcome feshbach()
    {
        std::mt19937 rng(2024);
        std::uniform_int_distribution<int> size(2, 40);
        std::normal_distribution<double> normal;
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial)
        {
            const int n = size(rng);
            const int n0 = std::uniform_int_distribution<int>(1, n - 1)(rng);
            Eigen::MatrixXcd m(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j <= i; ++j)
                    m(i, j) = m(j, i) = cplx(normal(rng), normal(rng));
            const Eigen::MatrixXcd inv = feshbach_invert(m.topLeftCorner(n0, n0), m.topRightCorner(n0, n - n0),
                                                         m.bottomLeftCorner(n - n0, n0),
                                                         m.bottomRightCorner(n - n0, n - n0));
            const Eigen::MatrixXcd direct = m.fullPivLu().inverse();
            worst = std::max(worst, (inv - direct).norm() / direct.norm());
        }
        return {worst <= 1e-9, "max rel error " + num(worst) + " over 50 matrices (<= 1e-9)"};
    }

    Outcome free_decay()
    {
        const auto src = make_grid(1.0, 40);
        const Field f = sample(src, profiles::bump(1.0, 1.0));
        const auto grad = freewave::finite_difference_gradient(src, f);
        std::vector<double> ts, sups;
        for (double t = 2.0; t <= 20.0 + 1e-9; t += 0.5)
        {
            std::vector<Point> ray;
            for (double x = std::max(0.0, t - 1.5); x <= t + 1.5; x += 0.01)
                ray.push_back({x, 0.0});
            const auto obs = make_point_grid(ray, 0.01);
            ts.push_back(t);
            sups.push_back(freewave::free_cosine_apply(t, src, f, grad, obs).cwiseAbs().maxCoeff());
        }
        const auto fit = decay_fit(ts, sups, 2.0, 20.0);
        return {fit.slope >= -0.65 && fit.slope <= -0.35 && fit.r_squared >= 0.9,
                "slope " + num(fit.slope) + " in [-0.65, -0.35], r^2 " + num(fit.r_squared)};
    }

    Outcome resonance_contrast()
    {
        const auto x = make_point_grid({{-1.875, 0.125}}, 0.25), y = make_point_grid({{2.125, 0.125}}, 0.25);
        const double dt = 0.02;
        auto ratio = [&](double amplitude) {
            const auto pot = PotentialSpec::sample(profiles::gaussian(amplitude, 0.75), make_grid(2.0, 16));
            const auto bank = build_sine_bank(pot, x, y, resolved_grid(12.0, 0.1), uniform_times(dt, 2000));
            const double w = (1.0 + std::log(std::hypot(1.875, 0.125))) * (1.0 + std::log(std::hypot(2.125, 0.125)));
            return (kernel_time_integral(bank, 1.0, 40.0)(0, 0) / w) / (kernel_time_integral(bank, 1.0, 20.0)(0, 0) / w);
        };
        const double regular = ratio(20.0), free = ratio(0.0);
        return {regular <= 1.15 && free >= 1.25,
                "regular " + num(regular) + " (<= 1.15), free " + num(free) + " (>= 1.25)"};
    }

    Outcome tt_star()
    {
        double worst = 0.0;
        for (double amplitude : {0.0, 2.0})
        {
            const auto P = make_grid(1.0, 8);
            const auto pot = PotentialSpec::sample(profiles::gaussian(amplitude, 0.4), P);
            const auto Z = make_grid(2.0, 16);
            const auto sg = resolved_grid(8.0, 0.25);
            const auto S = build_sine_bank(pot, P, Z, sg, {0.5, 1.0});
            const auto C = build_cos_over_H_bank(pot, P, P, sg, {0.5, 1.5}, 50.0, {2, 1e-12});
            Eigen::VectorXd wz(static_cast<Eigen::Index>(Z.size()));
            for (std::size_t i = 0; i < Z.size(); ++i)
                wz[static_cast<Eigen::Index>(i)] = Z.weight(i);
            const Eigen::MatrixXd lhs = S.matrix(1).transpose() * wz.asDiagonal() * S.matrix(0);
            const Eigen::MatrixXd rhs = 0.5 * (C.matrix(0) - C.matrix(1));
            worst = std::max(worst, (lhs - rhs).norm() / rhs.norm());
        }
        return {worst <= 5e-3, "max rel gap " + num(worst) + " for V = 0 and a regular V (<= 5e-3)"};
    }

    Outcome fractional_scaling()
    {
        const double s = 0.6;
        const double ratio = fractional_kernel_norm(2.0, s, 2.0) / fractional_kernel_norm(1.0, s, 2.0);
        const double expected = std::pow(2.0, -(2.0 - 2.0 * s - 0.5));
        return {std::abs(ratio / expected - 1.0) <= 0.05, "ratio " + num(ratio) + " vs " + num(expected) + " (5%)"};
    }

    Outcome regularity_sweep()
    {
        auto beta = [](int n) {
            return coupling_threshold(PotentialSpec::sample(profiles::bump(-1.0, 1.0), make_grid(1.0, n)), 200.0, 16)
                .beta_star;
        };
        const double a = beta(16), b = beta(24);
        return {a > 0.0 && std::abs(a / b - 1.0) <= 0.1,
                "beta* " + num(a) + " (n=16) vs " + num(b) + " (n=24), within 10%"};
    }

    Outcome strichartz_scaling()
    {
        const Exponent inf = Exponent::infinity();
        std::string detail;
        bool pass = true;
        for (const ExponentTuple& tuple : {ExponentTuple{inf, inf, Exponent(4.0 / 3.0), Exponent(2.0), std::nullopt},
                                           ExponentTuple{Exponent(8.0), inf, Exponent(8.0 / 7.0), Exponent(2.0),
                                                         std::nullopt}})
        {
            const auto rep = strichartz_ratio_check(profiles::zero(), tuple);
            const double gap = std::abs(rep.exponent_measured - rep.exponent_predicted);
            pass = pass && gap <= 0.1 * rep.exponent_scale;
            detail += (detail.empty() ? "" : "; ") + std::string("measured ") + num(rep.exponent_measured) +
                      " vs predicted " + num(rep.exponent_predicted) + " (tol " + num(0.1 * rep.exponent_scale) + ")";
        }
        return {pass, detail};
    }

    using Q = boost::rational<long long>;

    Q random_unit(std::mt19937& rng)
    {
        static const int dens[] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 16, 24};
        const int d = dens[std::uniform_int_distribution<int>(0, 12)(rng)];
        return Q(std::uniform_int_distribution<int>(0, d)(rng), d);
    }

    double to_double(Q q) { return boost::rational_cast<double>(q); }
    Exponent from_inverse(Q q) { return q == Q(0) ? Exponent::infinity() : Exponent(to_double(1 / q)); }

    Outcome region_checkers()
    {
        std::mt19937 rng(11);
        int mismatches = 0, admissible11 = 0;
        const Q zero(0), one(1), eighth(1, 8), half(1, 2), quarter(1, 4);
        for (int trial = 0; trial < 10000; ++trial)
        {
            const Q q = random_unit(rng), r = random_unit(rng);
            const bool rev = q <= eighth && r <= half;
            const bool dir = !(q == zero && r == zero) && r <= q && q + 3 * r <= half;
            mismatches += admissible_reversed(to_double(q), to_double(r)) != rev;
            mismatches += admissible_direct(to_double(q), to_double(r)) != dir;

            const Q q1 = random_unit(rng), r1 = random_unit(rng), r2 = random_unit(rng);
            Q q2 = random_unit(rng);
            const Q balanced = (2 * q1 + r1 + 2 - r2) / 2;
            if (trial % 2 == 0 && balanced >= zero && balanced <= one)
                q2 = balanced;
            std::string reason;
            if (2 * q1 + r1 + 2 != 2 * q2 + r2)
                reason = "scaling";
            else if (!(r2 - r1 > zero && r2 - r1 <= half))
                reason = "r-gap";
            const auto got = admissible_theorem11({from_inverse(q1), from_inverse(r1), from_inverse(q2),
                                                   from_inverse(r2), std::nullopt});
            mismatches += got.admissible != reason.empty() || got.reason != reason;
            admissible11 += reason.empty();

            Q s;
            do
                s = random_unit(rng);
            while (s <= quarter || s >= one);
            const Q a = random_unit(rng), b = random_unit(rng), gap = b - a, upper = (4 * s - 1) / 2;
            bool lemma;
            if (s < half)
                lemma = gap >= zero && gap <= upper;
            else if (s <= Q(3, 4))
                lemma = gap > 2 * s - 1 && (s == Q(3, 4) ? gap < upper : gap <= upper);
            else
                lemma = gap > 2 * s - 1 && gap <= one;
            mismatches += admissible_lemma15(to_double(s), to_double(a), to_double(b)) != lemma;
        }
        return {mismatches == 0, std::to_string(mismatches) + " mismatches over 4 x 10^4 checks (" +
                                     std::to_string(admissible11) + " admissible tuples)"};
    }

    Outcome semilinear_contraction()
    {
        double worst = 0.0;
        std::size_t fewest = 100;
        for (double amplitude : {0.0, 2.0})
        {
            const auto pot = PotentialSpec::sample(profiles::gaussian(amplitude, 0.4), make_grid(1.0, 8));
            const auto& grid = pot.grid();
            const auto sg = resolved_grid(12.0, 0.4);
            const auto times = uniform_times(0.1, 10);
            const auto sine = build_sine_bank(pot, grid, grid, sg, times);
            const auto cosine = build_cosine_bank(pot, grid, grid, sg, times);
            const Field f0 = 0.8 * sample(grid, cut_gaussian(0.2, 1.0));
            const Field f1 = 0.5 * sample(grid, cut_gaussian(0.1, 1.0));
            const auto res = semilinear_solve(f0, f1, std::nullopt, pot, sine, cosine);
            for (double r : res.ratios)
                worst = std::max(worst, r);
            fewest = std::min(fewest, res.ratios.size());
        }
        return {worst <= 0.5 && fewest >= 1,
                "max ratio " + num(worst) + " (<= 0.5) for V = 0 and a regular V"};
    }

    Outcome conservation()
    {
        const auto V = profiles::gaussian(4.0, 0.4);
        const auto pot = PotentialSpec::sample(V, make_grid(1.5, 12));
        const auto src = make_grid(2.5, 20);
        const Field f = sample(src, perturbed_data);
        const int n = 112;
        const auto obs = make_grid(7.0, n);
        const double h = obs.cell_width();
        const SpectralSynthesis syn(pot, src, f, obs, resolved_grid(12.0, 0.4));
        const Field Vo = sample(obs, V);
        auto E = [&](double t) {
            const Field u = syn.sine(t), ut = syn.cosine(t);
            auto at = [&](int i, int j) { return i < 0 || j < 0 || i >= n || j >= n ? 0.0 : u[j * n + i]; };
            double e = 0.0;
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i)
                {
                    const double ux = (-at(i + 2, j) + 8.0 * at(i + 1, j) - 8.0 * at(i - 1, j) + at(i - 2, j)) / (12.0 * h);
                    const double uy = (-at(i, j + 2) + 8.0 * at(i, j + 1) - 8.0 * at(i, j - 1) + at(i, j - 2)) / (12.0 * h);
                    const int k = j * n + i;
                    e += h * h * (ut[k] * ut[k] + ux * ux + uy * uy + Vo[k] * u[k] * u[k]);
                }
            return e;
        };
        const double e0 = E(0.0);
        double drift = 0.0, leak = 0.0;
        for (double t : {1.0, 2.0, 3.0, 4.0})
        {
            drift = std::max(drift, std::abs(E(t) - e0) / e0);
            const Field u = syn.sine(t);
            double outside = 0.0;
            for (std::size_t i = 0; i < obs.size(); ++i)
            {
                const Point p = obs.node(i);
                if (std::hypot(p.x, p.y) > 2.4 + t + 0.5)
                    outside = std::max(outside, std::abs(u[static_cast<Eigen::Index>(i)]));
            }
            leak = std::max(leak, outside / u.cwiseAbs().maxCoeff());
        }

        const auto cfg = make_fdtd_config(5.5, 220, 4.0, 0.5, 0.3);
        const auto g = fdtd_grid(cfg);
        const auto run = fdtd_solve(sample(g, profiles::bump(1.0, 1.5)), Field::Zero(static_cast<Eigen::Index>(g.size())),
                                    std::nullopt, PotentialSpec::sample(profiles::gaussian(4.0, 0.5), g), cfg);
        double fdtd_drift = 0.0;
        for (double e : run.energy)
            fdtd_drift = std::max(fdtd_drift, std::abs(e - run.energy.front()) / run.energy.front());

        if (!fine_synthesis)
            perturbed_pipeline();
        const double causal = weighted_l2(*fine_obs, fine_synthesis->fourier(-0.5)) /
                              weighted_l2(*fine_obs, fine_synthesis->fourier(0.5));
        const bool pass = drift < 1e-2 && fdtd_drift < 1e-3 && leak < 1e-3 && causal < 1e-2;
        return {pass, "synthesized drift " + num(drift) + ", leapfrog drift " + num(fdtd_drift) + ", leakage " +
                          num(leak) + ", causality " + num(causal)};
    }
} // namespace

int main(int argc, char** argv)
{
    std::vector<std::size_t> selected;
    for (int i = 1; i < argc; ++i)
        selected.push_back(std::stoul(argv[i]));
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"free pipeline matches the free propagator", free_pipeline},
        {"perturbed pipeline matches the leapfrog solver", perturbed_pipeline},
        {"Hankel representation consistency", hankel_consistency},
        {"Feshbach inverse equals direct inverse", feshbach},
        {"free decay rate", free_decay},
        {"resonance versus regular kernel integral", resonance_contrast},
        {"TT* identity", tt_star},
        {"fractional kernel scaling", fractional_scaling},
        {"coupling threshold reproducible", regularity_sweep},
        {"Strichartz rescaling exponent", strichartz_scaling},
        {"exponent region checkers", region_checkers},
        {"semilinear contraction", semilinear_contraction},
        {"conservation and causality", conservation},
    };
    if (selected.empty())
        for (std::size_t k = 1; k <= criteria.size(); ++k)
            selected.push_back(k);
    int failures = 0;
    for (std::size_t n : selected)
    {
        if (n < 1 || n > criteria.size())
        {
            std::cerr << "no criterion " << n << "\n";
            return 2;
        }
        const std::size_t k = n - 1;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try
        {
            out = criteria[k].second();
        }
        catch (const std::exception& e)
        {
            out = {false, std::string("threw ") + e.what()};
        }
        failures += !out.pass;
        std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << k + 1 << ": " << criteria[k].first << ": "
                  << out.detail << " [" << num(seconds_since(t0)) << " s]" << std::endl;
    }
    std::cout << (selected.size() - static_cast<std::size_t>(failures)) << "/" << selected.size()
              << " criteria pass" << std::endl;
    return failures == 0 ? 0 : 1;
}
