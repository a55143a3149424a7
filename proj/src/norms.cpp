#include "dispwave/norms.hpp"

#include "dispwave/errors.hpp"
#include "dispwave/evolution.hpp"
#include "dispwave/fdtd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dispwave
{
    namespace
    {
        constexpr double region_tol = 1e-12;

        void require_unit(double x, const char* name)
        {
            if (!(x >= 0.0 && x <= 1.0))
                throw Error(ErrorCode::domain, std::string(name) + " must lie in [0, 1]");
        }

        bool leq(double a, double b) { return a <= b + region_tol; }
        bool less(double a, double b) { return a < b - region_tol; }

        double log_plus(double r) { return r > 1.0 ? std::log(r) : 0.0; }

        double row_norm(const Eigen::Ref<const Eigen::RowVectorXd>& row, double dt, const Exponent& r)
        {
            if (r.infinite())
                return row.cwiseAbs().maxCoeff();
            const double p = r.value();
            double acc = 0.0;
            for (Eigen::Index j = 0; j < row.size(); ++j)
                acc += dt * std::pow(std::abs(row[j]), p);
            return std::pow(acc, 1.0 / p);
        }
    } // namespace

    Exponent::Exponent(double value)
    {
        if (std::isinf(value) && value > 0.0)
        {
            infinite_ = true;
            return;
        }
        if (!(value >= 1.0))
            throw Error(ErrorCode::domain, "Lebesgue exponent must lie in [1, inf]");
        value_ = value;
    }

    Exponent Exponent::infinity()
    {
        Exponent e;
        e.infinite_ = true;
        return e;
    }

    double Exponent::value() const
    {
        if (infinite_)
            throw Error(ErrorCode::domain, "infinite exponent has no finite value");
        return value_;
    }

    std::string Exponent::to_string() const
    {
        if (infinite_)
            return "inf";
        std::ostringstream out;
        out.precision(17);
        out << value_;
        return out.str();
    }

    double reversed_norm(const Grid2D& grid, const Eigen::MatrixXd& values, double dt, Exponent q, Exponent r)
    {
        if (values.rows() != static_cast<Eigen::Index>(grid.size()))
            throw Error(ErrorCode::domain, "field does not match its grid");
        if (values.size() == 0)
            return 0.0;
        const double scale = values.cwiseAbs().maxCoeff();
        if (scale == 0.0)
            return 0.0;
        const Eigen::MatrixXd f = values / scale;
        double acc = 0.0;
        for (Eigen::Index i = 0; i < f.rows(); ++i)
        {
            const double ri = row_norm(f.row(i), dt, r);
            if (q.infinite())
                acc = std::max(acc, ri);
            else
                acc += grid.weight(static_cast<std::size_t>(i)) * std::pow(ri, q.value());
        }
        return scale * (q.infinite() ? acc : std::pow(acc, 1.0 / q.value()));
    }

    double reversed_norm(const WaveField& field, Exponent q, Exponent r)
    {
        const double dt = field.steps() > 1 ? field.uniform_step() : 1.0;
        return reversed_norm(field.obs(), field.values(), dt, q, r);
    }

    double kato_norm(const Grid2D& grid, const Field& f, double theta)
    {
        return kato_type_sup(grid, f.cwiseAbs(), KatoKernel::log_power, theta);
    }

    KatoTildeNorms kato_tilde_norms(const PotentialSpec& pot) { return {pot.kato_half(), pot.kato_log()}; }

    double weighted_sup(const Grid2D& grid, const Field& f, double k)
    {
        if (!(k >= 0.0))
            throw Error(ErrorCode::domain, "weight exponent must be non-negative");
        if (f.size() != static_cast<Eigen::Index>(grid.size()))
            throw Error(ErrorCode::domain, "field does not match its grid");
        double best = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
        {
            const Point x = grid.node(i);
            const double w = std::pow(1.0 + log_plus(std::hypot(x.x, x.y)), k);
            best = std::max(best, std::abs(f[static_cast<Eigen::Index>(i)]) / w);
        }
        return best;
    }

    DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& values, double t_min, double t_max)
    {
        if (t.size() != values.size())
            throw Error(ErrorCode::domain, "decay fit needs one value per time");
        if (!(t_min > 0.0) || !(t_max > t_min))
            throw Error(ErrorCode::domain, "decay fit window must satisfy 0 < t_min < t_max");
        std::vector<double> x, y;
        for (std::size_t k = 0; k < t.size(); ++k)
        {
            if (t[k] < t_min || t[k] > t_max)
                continue;
            if (!(values[k] > 0.0))
                throw Error(ErrorCode::domain, "decay fit needs positive samples in the window");
            x.push_back(std::log(t[k]));
            y.push_back(std::log(values[k]));
        }
        if (x.size() < 6)
            throw Error(ErrorCode::domain, "decay fit needs at least 6 samples in the window");
        const auto n = static_cast<double>(x.size());
        double mx = 0.0, my = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k)
        {
            mx += x[k] / n;
            my += y[k] / n;
        }
        double sxx = 0.0, sxy = 0.0, syy = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k)
        {
            sxx += (x[k] - mx) * (x[k] - mx);
            sxy += (x[k] - mx) * (y[k] - my);
            syy += (y[k] - my) * (y[k] - my);
        }
        DecayFit fit;
        fit.slope = sxy / sxx;
        fit.intercept = my - fit.slope * mx;
        double ss_res = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k)
        {
            const double e = y[k] - fit.intercept - fit.slope * x[k];
            ss_res += e * e;
        }
        fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
        fit.window = {t_min, t_max};
        fit.samples = static_cast<int>(x.size());
        return fit;
    }

    Eigen::MatrixXd kernel_time_integral(const PropagatorBank& bank, double t_a, double t_b)
    {
        if (!(t_b >= t_a))
            throw Error(ErrorCode::domain, "time window must satisfy t_a <= t_b");
        const std::size_t a = bank.index_of(t_a), b = bank.index_of(t_b);
        const auto& t = bank.times();
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(bank.obs().size()),
                                                    static_cast<Eigen::Index>(bank.src().size()));
        for (std::size_t k = a; k < b; ++k)
            acc += 0.5 * (t[k + 1] - t[k]) * (bank.matrix(k).cwiseAbs() + bank.matrix(k + 1).cwiseAbs());
        return acc;
    }

    bool admissible_reversed(double q_inv, double r_inv)
    {
        require_unit(q_inv, "1/q");
        require_unit(r_inv, "1/r");
        return leq(q_inv, 0.125) && leq(r_inv, 0.5);
    }

    bool admissible_direct(double q_inv, double r_inv)
    {
        require_unit(q_inv, "1/q");
        require_unit(r_inv, "1/r");
        if (leq(q_inv, 0.0) && leq(r_inv, 0.0))
            return false;
        return leq(r_inv, q_inv) && leq(q_inv + 3.0 * r_inv, 0.5);
    }

    Admissibility admissible_theorem11(const ExponentTuple& tuple)
    {
        const double q1 = tuple.q1.inverse(), r1 = tuple.r1.inverse();
        const double q2 = tuple.q2.inverse(), r2 = tuple.r2.inverse();
        Admissibility out;
        const double gap = r2 - r1;
        if (std::abs(2.0 * q1 + r1 + 2.0 - 2.0 * q2 - r2) > region_tol)
            out.reason = "scaling";
        else if (!(gap > region_tol) || !leq(gap, 0.5))
            out.reason = "r-gap";
        out.admissible = out.reason.empty();

        const bool r1_inf = tuple.r1.infinite(), q1_inf = tuple.q1.infinite();
        const bool r2_one = !tuple.r2.infinite() && tuple.r2.value() == 1.0;
        const bool q2_one = !tuple.q2.infinite() && tuple.q2.value() == 1.0;
        const bool r2_two = !tuple.r2.infinite() && tuple.r2.value() == 2.0;
        const bool r1_two = !r1_inf && tuple.r1.value() == 2.0;
        if (r1_inf && r2_two)
            out.flags.push_back("r1 = inf, r2 = 2: source time norm is L^{2,1}");
        else if (r1_two && r2_one)
            out.flags.push_back("r1 = 2, r2 = 1: output time norm is L^{2,inf}");
        else if (r1_inf)
            out.flags.push_back("r1 = inf: output time norm is L^inf");
        else if (r2_one)
            out.flags.push_back("r2 = 1: source time norm is L^1");
        if (q1_inf)
            out.flags.push_back("q1 = inf: source space norm is L^{q2,1}");
        if (q2_one)
            out.flags.push_back("q2 = 1: output space norm is L^{q1,inf}");
        return out;
    }

    bool admissible_lemma15(double s, double r1_inv, double r2_inv)
    {
        if (!(s > 0.25 && s < 1.0))
            throw Error(ErrorCode::domain, "fractional order must lie in (1/4, 1)");
        require_unit(r1_inv, "1/r1");
        require_unit(r2_inv, "1/r2");
        const double gap = r2_inv - r1_inv;
        const double upper = (4.0 * s - 1.0) / 2.0;
        if (less(s, 0.5))
            return leq(0.0, gap) && leq(gap, upper);
        if (leq(s, 0.75))
        {
            const bool at_three_quarters = std::abs(s - 0.75) <= region_tol;
            const bool below = at_three_quarters ? less(gap, upper) : leq(gap, upper);
            return less(2.0 * s - 1.0, gap) && below;
        }
        return less(2.0 * s - 1.0, gap) && leq(gap, 1.0);
    }

    double strichartz_ratio(const WaveField& u, const WaveField& F, const ExponentTuple& tuple)
    {
        const double den = reversed_norm(F, tuple.q2, tuple.r2);
        if (den == 0.0)
            return 0.0;
        return reversed_norm(u, tuple.q1, tuple.r1) / den;
    }

    namespace
    {
        struct Shape
        {
            std::string name;
            Profile g;
        };

        struct TimeProfile
        {
            std::string name;
            std::function<double(double)> h;   ///< on [0, 1]
        };

        double lebesgue(const std::vector<double>& values, double dt, const Exponent& p)
        {
            double acc = 0.0;
            for (double v : values)
                acc = p.infinite() ? std::max(acc, std::abs(v)) : acc + dt * std::pow(std::abs(v), p.value());
            return p.infinite() ? acc : std::pow(acc, 1.0 / p.value());
        }

        double max_norm_reach(const Grid2D& grid, const Field& f)
        {
            double reach = 0.0;
            for (std::size_t i = 0; i < grid.size(); ++i)
                if (f[static_cast<Eigen::Index>(i)] != 0.0)
                    reach = std::max({reach, std::abs(grid.node(i).x), std::abs(grid.node(i).y)});
            return reach;
        }

        double fit_slope(const std::vector<double>& x, const std::vector<double>& y)
        {
            const auto n = static_cast<double>(x.size());
            double mx = 0.0, my = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k)
            {
                mx += x[k] / n;
                my += y[k] / n;
            }
            double sxx = 0.0, sxy = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k)
            {
                sxx += (x[k] - mx) * (x[k] - mx);
                sxy += (x[k] - mx) * (y[k] - my);
            }
            return sxy / sxx;
        }
    } // namespace

    StrichartzReport strichartz_ratio_check(const Profile& potential, const ExponentTuple& tuple,
                                            const StrichartzOptions& options)
    {
        StrichartzReport report;
        report.admissibility = admissible_theorem11(tuple);
        if (!report.admissibility.admissible)
            throw Error(ErrorCode::configuration, "inadmissible exponent tuple (" + report.admissibility.reason + ")");
        if (options.mu.size() < 2 || options.samples < 2 || !(options.duration > 0.0) ||
            !(options.window >= options.duration))
            throw Error(ErrorCode::configuration, "Strichartz check needs two scales and a window covering the forcing");
        report.exponent_scale = 2.0 * tuple.q2.inverse() + tuple.r2.inverse();
        report.exponent_predicted = report.exponent_scale - 2.0 * tuple.q1.inverse() - tuple.r1.inverse() - 2.0;

        auto cut_gaussian = [](double sigma) -> Profile {
            return [sigma](Point p) {
                const double s = (p.x * p.x + p.y * p.y) / (sigma * sigma);
                return s < 16.0 ? std::exp(-s) : 0.0;
            };
        };
        auto pair = [](Point p) {
            return profiles::bump(1.0, 0.25, {-0.2, 0.0})(p) + profiles::bump(1.0, 0.25, {0.2, 0.0})(p);
        };
        const std::vector<Shape> shapes{{"gaussian", cut_gaussian(0.15)}, {"bump", profiles::bump(1.0, 0.45)},
                                        {"pair", pair}};
        const std::vector<TimeProfile> profiles_t{
            {"pulse", [](double s) { return std::pow(std::sin(specfun::pi * s), 2); }},
            {"wave", [](double s) { return std::sin(2.0 * specfun::pi * s) * std::pow(std::sin(specfun::pi * s), 2); }}};

        double worst = -1.0;
        for (const auto& shape : shapes)
            for (const auto& prof : profiles_t)
            {
                StrichartzEntry entry;
                entry.forcing = shape.name + "/" + prof.name;
                std::vector<double> log_mu, log_x;
                for (double mu : options.mu)
                {
                    const double T = options.window / mu, active = options.duration / mu;
                    const auto cfg = make_fdtd_config(options.half_width, options.n_per_side, T, T / options.samples,
                                                      options.dt_factor);
                    const auto pot = PotentialSpec::sample(potential, fdtd_grid(cfg));
                    const Grid2D& grid = pot.grid();
                    Field g(static_cast<Eigen::Index>(grid.size()));
                    for (std::size_t i = 0; i < grid.size(); ++i)
                    {
                        const Point x = grid.node(i);
                        g[static_cast<Eigen::Index>(i)] = shape.g({mu * x.x, mu * x.y});
                    }
                    const auto h = [&](double t) { return t >= 0.0 && t <= active ? prof.h(t / active) : 0.0; };
                    const Forcing forcing{[&](double t) { return Field(h(t) * g); }, max_norm_reach(grid, g)};
                    const Field zero = Field::Zero(g.size());
                    const auto run = fdtd_solve(zero, zero, forcing, pot, cfg);

                    const int n_h = 4000;
                    std::vector<double> hs(n_h + 1);
                    for (int k = 0; k <= n_h; ++k)
                        hs[static_cast<std::size_t>(k)] = h(active * k / n_h);
                    const Eigen::MatrixXd gm = g;
                    const double den = reversed_norm(grid, gm, 1.0, tuple.q2, tuple.q2) *
                                       lebesgue(hs, active / n_h, tuple.r2);
                    const double ratio = den > 0.0 ? reversed_norm(run.field, tuple.q1, tuple.r1) / den : 0.0;
                    entry.ratios.push_back(ratio);
                    report.max_ratio = std::max(report.max_ratio, ratio);
                    log_mu.push_back(std::log(mu));
                    log_x.push_back(std::log(ratio));
                }
                entry.exponent = fit_slope(log_mu, log_x);
                const double dev = std::abs(entry.exponent - report.exponent_predicted);
                if (dev > worst)
                {
                    worst = dev;
                    report.exponent_measured = entry.exponent;
                }
                report.entries.push_back(std::move(entry));
            }
        return report;
    }
} // namespace dispwave
