#include "dispwave/cli.hpp"

#include "dispwave/evolution.hpp"
#include "dispwave/fdtd.hpp"
#include "dispwave/freewave.hpp"
#include "dispwave/norms.hpp"
#include "dispwave/operator_core.hpp"
#include "dispwave/potential.hpp"
#include "dispwave/resolvent.hpp"
#include "dispwave/specfun.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

namespace dispwave::cli
{
    namespace
    {
        std::string trim(const std::string& s)
        {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos)
                return {};
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        }

        std::vector<std::string> split(const std::string& s, char sep)
        {
            std::vector<std::string> out;
            std::string item;
            std::istringstream in(s);
            while (std::getline(in, item, sep))
                out.push_back(trim(item));
            if (!s.empty() && s.back() == sep)
                out.emplace_back();
            return out;
        }

        [[noreturn]] void config_error(int line, const std::string& key, const std::string& message)
        {
            std::string where = line > 0 ? "line " + std::to_string(line) + ": " : std::string();
            throw Error(ErrorCode::configuration, where + key + ": " + message);
        }

        bool parse_double(const std::string& s, double& out)
        {
            const auto t = trim(s);
            if (t.empty())
                return false;
            const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
            return res.ec == std::errc() && res.ptr == t.data() + t.size() && std::isfinite(out);
        }

        Exponent parse_exponent(const std::string& s)
        {
            const auto t = trim(s);
            if (t == "inf")
                return Exponent::infinity();
            const auto slash = t.find('/');
            double value = 0.0;
            if (slash == std::string::npos)
            {
                if (!parse_double(t, value))
                    throw Error(ErrorCode::configuration, "'" + t + "' is not an exponent");
            }
            else
            {
                double num = 0.0, den = 0.0;
                if (!parse_double(t.substr(0, slash), num) || !parse_double(t.substr(slash + 1), den) || den == 0.0)
                    throw Error(ErrorCode::configuration, "'" + t + "' is not an exponent");
                value = num / den;
            }
            if (!(value >= 1.0))
                throw Error(ErrorCode::configuration, "exponent '" + t + "' is below 1");
            return Exponent(value);
        }

        ExponentTuple parse_tuple(const std::string& s)
        {
            const auto parts = split(s, ',');
            if (parts.size() != 4)
                throw Error(ErrorCode::configuration, "tuple '" + s + "' needs q1, r1, q2, r2");
            return {parse_exponent(parts[0]), parse_exponent(parts[1]), parse_exponent(parts[2]),
                    parse_exponent(parts[3]), std::nullopt};
        }

        class Reader
        {
        public:
            explicit Reader(std::map<std::string, ConfigEntry> entries) : entries_(std::move(entries)) {}

            template <class T, class Parse>
            void read(const std::string& key, T& target, Parse parse)
            {
                const auto it = entries_.find(key);
                if (it != entries_.end())
                {
                    used_.insert(key);
                    try
                    {
                        target = parse(it->second.value);
                    }
                    catch (const Error& e)
                    {
                        config_error(it->second.line, key, strip(e.what()));
                    }
                }
            }

            void number(const std::string& key, double& target, bool positive = true)
            {
                read(key, target, [&](const std::string& v) {
                    double x = 0.0;
                    if (!parse_double(v, x))
                        throw Error(ErrorCode::configuration, "expected a number, got '" + v + "'");
                    if (positive && !(x > 0.0))
                        throw Error(ErrorCode::configuration, "must be positive, got '" + v + "'");
                    return x;
                });
                echo_.emplace_back(key, format_number(target));
            }

            void integer(const std::string& key, int& target, int minimum)
            {
                read(key, target, [&](const std::string& v) {
                    int x = 0;
                    const auto t = trim(v);
                    const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
                    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
                        throw Error(ErrorCode::configuration, "expected an integer, got '" + v + "'");
                    if (x < minimum)
                        throw Error(ErrorCode::configuration,
                                    "must be at least " + std::to_string(minimum) + ", got '" + v + "'");
                    return x;
                });
                echo_.emplace_back(key, std::to_string(target));
            }

            void text(const std::string& key, std::string& target)
            {
                read(key, target, [](const std::string& v) { return trim(v); });
                echo_.emplace_back(key, target);
            }

            void numbers(const std::string& key, std::vector<double>& target, bool positive = true)
            {
                read(key, target, [&](const std::string& v) {
                    std::vector<double> out;
                    if (trim(v).empty())
                        return out;
                    for (const auto& part : split(v, ','))
                    {
                        double x = 0.0;
                        if (!parse_double(part, x))
                            throw Error(ErrorCode::configuration, "expected a list of numbers, got '" + v + "'");
                        if (positive && !(x > 0.0))
                            throw Error(ErrorCode::configuration, "entries must be positive, got '" + v + "'");
                        out.push_back(x);
                    }
                    return out;
                });
                std::string joined;
                for (double x : target)
                    joined += (joined.empty() ? "" : ", ") + format_number(x);
                echo_.emplace_back(key, joined);
            }

            void point(const std::string& key, Point& target)
            {
                read(key, target, [&](const std::string& v) {
                    const auto parts = split(v, ',');
                    Point p;
                    if (parts.size() != 2 || !parse_double(parts[0], p.x) || !parse_double(parts[1], p.y))
                        throw Error(ErrorCode::configuration, "expected 'x, y', got '" + v + "'");
                    return p;
                });
                echo_.emplace_back(key, format_number(target.x) + ", " + format_number(target.y));
            }

            void points(const std::string& key, std::vector<Point>& target)
            {
                read(key, target, [&](const std::string& v) {
                    std::vector<Point> out;
                    for (const auto& item : split(v, ';'))
                    {
                        const auto parts = split(item, ',');
                        Point p;
                        if (parts.size() != 2 || !parse_double(parts[0], p.x) || !parse_double(parts[1], p.y))
                            throw Error(ErrorCode::configuration, "expected 'x, y; x, y; ...', got '" + v + "'");
                        out.push_back(p);
                    }
                    return out;
                });
                std::string joined;
                for (const auto& p : target)
                    joined += (joined.empty() ? "" : "; ") + format_number(p.x) + ", " + format_number(p.y);
                echo_.emplace_back(key, joined);
            }

            void tuples(const std::string& key, std::vector<std::string>& target)
            {
                read(key, target, [&](const std::string& v) {
                    std::vector<std::string> out;
                    for (const auto& item : split(v, ';'))
                    {
                        parse_tuple(item);
                        out.push_back(item);
                    }
                    return out;
                });
                std::string joined;
                for (const auto& t : target)
                    joined += (joined.empty() ? "" : "; ") + t;
                echo_.emplace_back(key, joined);
            }

            void note(const std::string& key, std::string value) { echo_.emplace_back(key, std::move(value)); }

            int line(const std::string& key) const
            {
                const auto it = entries_.find(key);
                return it == entries_.end() ? 0 : it->second.line;
            }

            void reject_unknown() const
            {
                for (const auto& [key, entry] : entries_)
                    if (!used_.count(key))
                        config_error(entry.line, key, "unknown key");
            }

            std::vector<std::pair<std::string, std::string>> echo() const
            {
                auto out = echo_;
                std::sort(out.begin(), out.end());
                return out;
            }

        private:
            static std::string strip(const std::string& what)
            {
                const std::string prefix = "configuration: ";
                return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
            }

            std::map<std::string, ConfigEntry> entries_;
            std::set<std::string> used_;
            std::vector<std::pair<std::string, std::string>> echo_;
        };

        std::string read_file(const std::string& path)
        {
            std::ifstream in(path, std::ios::binary);
            if (!in)
                throw Error(ErrorCode::configuration, "cannot open '" + path + "'");
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }

        // Experiment plumbing.

        class Csv
        {
        public:
            explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

            void row(const std::vector<std::string>& cells)
            {
                if (cells.size() != header_.size())
                    throw Error(ErrorCode::numeric, "CSV row width does not match its header");
                rows_.push_back(cells);
            }

            void write(const std::filesystem::path& path) const
            {
                std::ofstream out(path, std::ios::binary);
                if (!out)
                    throw Error(ErrorCode::configuration, "cannot write '" + path.string() + "'");
                auto line = [&](const std::vector<std::string>& cells) {
                    for (std::size_t i = 0; i < cells.size(); ++i)
                        out << (i ? "," : "") << cells[i];
                    out << '\n';
                };
                line(header_);
                for (const auto& r : rows_)
                    line(r);
            }

        private:
            std::vector<std::string> header_;
            std::vector<std::vector<std::string>> rows_;
        };

        std::string boolean(bool b) { return b ? "true" : "false"; }

        Grid2D potential_grid(const ExperimentConfig& c) { return make_grid(c.grid.half_width, c.grid.n); }

        PotentialSpec build_potential(const ExperimentConfig& c)
        {
            const auto grid = potential_grid(c);
            const auto& p = c.potential;
            if (p.kind == "file")
            {
                std::istringstream in(read_file(p.file));
                std::vector<double> values;
                std::string token;
                while (in >> token)
                    for (const auto& part : split(token, ','))
                    {
                        if (part.empty())
                            continue;
                        double x = 0.0;
                        if (!parse_double(part, x))
                            throw Error(ErrorCode::configuration,
                                        "potential.file: '" + part + "' is not a finite sample");
                        values.push_back(x);
                    }
                if (values.size() != grid.size())
                    throw Error(ErrorCode::configuration, "potential.file: expected " + std::to_string(grid.size()) +
                                                              " samples, found " + std::to_string(values.size()));
                return PotentialSpec(grid, Eigen::Map<const Field>(values.data(), static_cast<Eigen::Index>(values.size())));
            }
            Profile profile;
            if (p.kind == "gaussian")
                profile = profiles::gaussian(p.amplitude, p.radius, p.center);
            else if (p.kind == "well")
                profile = profiles::well(p.amplitude, p.radius, p.center);
            else
                profile = profiles::ring(p.amplitude, p.radius, p.width, p.center);
            return PotentialSpec::sample(profile, grid);
        }

        Profile potential_profile(const ExperimentConfig& c)
        {
            const auto& p = c.potential;
            if (p.kind == "gaussian")
                return profiles::gaussian(p.amplitude, p.radius, p.center);
            if (p.kind == "well")
                return profiles::well(p.amplitude, p.radius, p.center);
            if (p.kind == "ring")
                return profiles::ring(p.amplitude, p.radius, p.width, p.center);
            throw Error(ErrorCode::configuration, "potential.kind: this experiment needs an analytic potential");
        }

        SpectralGrid spectral_grid(const ExperimentConfig& c, double panel_width)
        {
            const double h = potential_grid(c).cell_width();
            const double lambda_max = c.spectral.lambda_max > 0.0 ? c.spectral.lambda_max : 3.0 / h;
            int n_nodes = c.spectral.n_nodes;
            if (n_nodes == 0)
                n_nodes = 16 * (static_cast<int>(std::ceil(lambda_max / panel_width)) + c.spectral.refinement);
            return make_spectral_grid(lambda_max, n_nodes, c.spectral.refinement);
        }

        // Lattice-aligned grid holding the data support.
        Grid2D data_grid(const ExperimentConfig& c)
        {
            const double h = potential_grid(c).cell_width();
            const int extra = std::max(0, static_cast<int>(std::ceil((c.data.cut - c.grid.half_width) / h - 1e-9)));
            return make_grid(c.grid.half_width + extra * h, c.grid.n + 2 * extra);
        }

        Field sample_data(const ExperimentConfig& c, const Grid2D& grid)
        {
            Field f(static_cast<Eigen::Index>(grid.size()));
            for (std::size_t i = 0; i < grid.size(); ++i)
            {
                const Point p = grid.node(i);
                const double r2 = p.x * p.x + p.y * p.y;
                f[static_cast<Eigen::Index>(i)] =
                    r2 < c.data.cut * c.data.cut ? std::exp(-r2 / (c.data.width * c.data.width)) : 0.0;
            }
            return f;
        }

        double log_weight(Point p) { return 1.0 + std::max(0.0, std::log(std::hypot(p.x, p.y))); }

        void run_regularity(const ExperimentConfig& c, const std::filesystem::path& dir, RunReport& report)
        {
            const auto base = build_potential(c);
            auto couplings = c.potential.coupling_sweep;
            if (couplings.empty())
                couplings.push_back(1.0);
            Csv csv({"coupling", "sigma_min", "bound_states", "verdict"});
            for (double beta : couplings)
            {
                const auto rep = regularity_check(base.scaled(beta));
                csv.row({format_number(beta), format_number(rep.sigma_min), std::to_string(rep.bound_state_count),
                         to_string(rep.verdict)});
                report.verdicts.emplace_back("verdict@" + format_number(beta), to_string(rep.verdict));
            }
            if (c.regularity_beta_max > 0.0)
            {
                const auto star = coupling_threshold(base, c.regularity_beta_max);
                report.verdicts.emplace_back("beta_star", format_number(star.beta_star));
            }
            csv.write(dir / "regularity.csv");
            report.tables.push_back("regularity.csv");
        }

        void run_propagate(const ExperimentConfig& c, const std::filesystem::path& dir, RunReport& report)
        {
            const auto pot = build_potential(c);
            const auto src = data_grid(c);
            const Field f = sample_data(c, src);
            const SpectralSynthesis syn(pot, src, f, src, spectral_grid(c, c.spectral.panel_width));
            report.verdicts.emplace_back("bound_states", std::to_string(syn.bound_state_count()));
            Csv csv({"t", "x", "y", "sine", "cosine"});
            for (double t : c.propagate_times)
            {
                const Field s = syn.sine(t), co = syn.cosine(t);
                for (std::size_t i = 0; i < src.size(); ++i)
                {
                    const auto k = static_cast<Eigen::Index>(i);
                    csv.row({format_number(t), format_number(src.node(i).x), format_number(src.node(i).y),
                             format_number(s[k]), format_number(co[k])});
                }
            }
            csv.write(dir / "propagate.csv");
            report.tables.push_back("propagate.csv");
        }

        void run_decay(const ExperimentConfig& c, const std::filesystem::path& dir, RunReport& report)
        {
            const auto cfg = make_fdtd_config(c.fdtd.half_width, c.fdtd.n, c.fdtd.T_final, c.decay_dt, c.fdtd.dt_factor);
            const auto grid = fdtd_grid(cfg);
            const auto profile = potential_profile(c);
            const auto run = fdtd_solve(sample_data(c, grid), Field::Zero(static_cast<Eigen::Index>(grid.size())),
                                        std::nullopt, PotentialSpec::sample(profile, grid), cfg);
            Csv csv({"t", "sup_norm", "weighted_sup_k1", "weighted_sup_k2"});
            std::vector<double> ts, sups;
            for (std::size_t k = 0; k < run.field.times().size(); ++k)
            {
                const double t = run.field.times()[k];
                const Field u = run.field.at(k);
                const double sup = u.cwiseAbs().maxCoeff();
                csv.row({format_number(t), format_number(sup), format_number(weighted_sup(grid, u, 1.0)),
                         format_number(weighted_sup(grid, u, 2.0))});
                ts.push_back(t);
                sups.push_back(sup);
            }
            const auto fit = decay_fit(ts, sups, c.decay_t_min, c.decay_t_max);
            report.verdicts.emplace_back("decay_slope", format_number(fit.slope));
            report.verdicts.emplace_back("decay_r_squared", format_number(fit.r_squared));
            csv.write(dir / "decay.csv");
            report.tables.push_back("decay.csv");
        }

        std::string exponent_cell(const Exponent& e) { return e.infinite() ? "inf" : format_number(e.value()); }

        void run_strichartz(const ExperimentConfig& c, const std::filesystem::path& dir, RunReport& report)
        {
            const auto profile = potential_profile(c);
            StrichartzOptions opt;
            opt.n_per_side = c.strichartz_n;
            opt.samples = c.strichartz_samples;
            opt.dt_factor = c.fdtd.dt_factor;
            Csv csv({"q1", "r1", "q2", "r2", "admissible", "ratio", "scaling_exponent_measured",
                     "scaling_exponent_predicted"});
            for (const auto& text : c.strichartz_tuples)
            {
                const auto tuple = parse_tuple(text);
                const auto adm = admissible_theorem11(tuple);
                std::vector<std::string> cells{exponent_cell(tuple.q1), exponent_cell(tuple.r1),
                                               exponent_cell(tuple.q2), exponent_cell(tuple.r2),
                                               boolean(adm.admissible)};
                const double nan = std::numeric_limits<double>::quiet_NaN();
                if (!adm.admissible)
                {
                    for (int i = 0; i < 3; ++i)
                        cells.push_back(format_number(nan));
                    report.verdicts.emplace_back("tuple " + text, "inadmissible (" + adm.reason + ")");
                }
                else
                {
                    const auto rep = strichartz_ratio_check(profile, tuple, opt);
                    cells.push_back(format_number(rep.max_ratio));
                    cells.push_back(format_number(rep.exponent_measured));
                    cells.push_back(format_number(rep.exponent_predicted));
                    const bool ok = std::abs(rep.exponent_measured - rep.exponent_predicted) <= 0.1 * rep.exponent_scale;
                    if (c.potential.amplitude == 0.0)
                        report.verdicts.emplace_back("tuple " + text, ok ? "scaling matches" : "scaling off");
                    else
                        report.verdicts.emplace_back("tuple " + text, "no dilation prediction for V != 0");
                }
                csv.row(cells);
            }
            csv.write(dir / "strichartz.csv");
            report.tables.push_back("strichartz.csv");
        }

        void run_kernel_integral(const ExperimentConfig& c, const std::filesystem::path& dir, RunReport& report)
        {
            const auto pot = build_potential(c);
            const auto points = make_point_grid(c.kernel_points, pot.grid().cell_width());
            const double T = *std::max_element(c.kernel_T.begin(), c.kernel_T.end());
            const int steps = static_cast<int>(std::lround(T / c.kernel_dt));
            const auto bank = build_sine_bank(pot, points, points, spectral_grid(c, c.kernel_panel_width),
                                              uniform_times(c.kernel_dt, steps));
            Csv csv({"T", "x_index", "y_index", "integral", "weighted_integral"});
            std::vector<double> first_pair;
            for (double Tk : c.kernel_T)
            {
                const Eigen::MatrixXd I = kernel_time_integral(bank, 1.0, Tk);
                for (Eigen::Index i = 0; i < I.rows(); ++i)
                    for (Eigen::Index j = 0; j < I.cols(); ++j)
                    {
                        const double w = log_weight(points.node(static_cast<std::size_t>(i))) *
                                         log_weight(points.node(static_cast<std::size_t>(j)));
                        csv.row({format_number(Tk), std::to_string(i), std::to_string(j), format_number(I(i, j)),
                                 format_number(I(i, j) / w)});
                    }
                if (I.rows() > 1)
                    first_pair.push_back(I(1, 0));
            }
            if (first_pair.size() > 1)
                report.verdicts.emplace_back("growth_ratio", format_number(first_pair.back() / first_pair.front()));
            csv.write(dir / "kernel_integral.csv");
            report.tables.push_back("kernel_integral.csv");
        }

        void run_semilinear(const ExperimentConfig& c, const std::filesystem::path& dir, RunReport& report)
        {
            const auto pot = build_potential(c);
            const auto& grid = pot.grid();
            const auto sg = spectral_grid(c, c.spectral.panel_width);
            const auto times = uniform_times(c.semilinear_dt, c.semilinear_steps);
            const auto sine = build_sine_bank(pot, grid, grid, sg, times);
            const auto cosine = build_cosine_bank(pot, grid, grid, sg, times);
            SemilinearOptions opt;
            opt.p = c.semilinear_p;
            opt.n_iter = c.semilinear_iterations;
            const Field f0 = c.semilinear_amplitude * sample_data(c, grid);
            const auto res = semilinear_solve(f0, Field::Zero(f0.size()), std::nullopt, pot, sine, cosine, opt);
            Csv csv({"iteration", "difference", "ratio"});
            for (std::size_t k = 0; k < res.differences.size(); ++k)
            {
                const double ratio = k == 0 ? std::numeric_limits<double>::quiet_NaN() : res.ratios[k - 1];
                csv.row({std::to_string(k + 1), format_number(res.differences[k]), format_number(ratio)});
            }
            double worst = 0.0;
            for (double r : res.ratios)
                worst = std::max(worst, r);
            report.verdicts.emplace_back("iterations", std::to_string(res.iterations));
            report.verdicts.emplace_back("max_ratio", format_number(worst));
            csv.write(dir / "semilinear.csv");
            report.tables.push_back("semilinear.csv");
        }

        SuiteResult suite(const std::string& name, const std::function<std::pair<bool, std::string>()>& body)
        {
            try
            {
                const auto [pass, detail] = body();
                return {name, pass, detail};
            }
            catch (const Error& e)
            {
                return {name, false, e.what()};
            }
        }

        std::string value_detail(const std::string& label, double value, double bound)
        {
            return label + " " + format_number(value) + " (bound " + format_number(bound) + ")";
        }

        void run_selfcheck(const ExperimentConfig& c, const std::filesystem::path& dir, RunReport& report)
        {
            std::mt19937_64 rng(c.seed);
            auto& suites = report.suites;

            suites.push_back(suite("specfun", [] {
                double worst = 0.0;
                for (double rho : {0.5, 2.0, 8.0})
                    for (auto b : {specfun::HankelBranch::plus, specfun::HankelBranch::minus})
                        worst = std::max(worst, std::abs(specfun::hankel_ft_check(b, rho) - specfun::hankel0(b, rho)));
                return std::pair{worst <= 1e-4, value_detail("hankel gap", worst, 1e-4)};
            }));

            suites.push_back(suite("freewave", [] {
                const auto src = make_grid(1.0, 16);
                Field f(static_cast<Eigen::Index>(src.size()));
                for (std::size_t i = 0; i < src.size(); ++i)
                {
                    const Point p = src.node(i);
                    f[static_cast<Eigen::Index>(i)] = profiles::bump(1.0, 0.8)(p);
                }
                const auto far = make_point_grid({{3.0, 0.0}, {0.0, -3.2}}, 0.125);
                const double outside = freewave::free_sine_apply(1.0, src, f, far).cwiseAbs().maxCoeff();
                return std::pair{outside == 0.0, value_detail("outside the cone", outside, 0.0)};
            }));

            suites.push_back(suite("operator_core", [&rng] {
                std::normal_distribution<double> normal;
                double worst = 0.0;
                for (int trial = 0; trial < 10; ++trial)
                {
                    const int n = 12, n0 = 5;
                    Eigen::MatrixXcd m(n, n);
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j <= i; ++j)
                            m(i, j) = m(j, i) = cplx(normal(rng), normal(rng));
                    m += 4.0 * Eigen::MatrixXcd::Identity(n, n);
                    const Eigen::MatrixXcd inv =
                        feshbach_invert(m.topLeftCorner(n0, n0), m.topRightCorner(n0, n - n0),
                                        m.bottomLeftCorner(n - n0, n0), m.bottomRightCorner(n - n0, n - n0));
                    const Eigen::MatrixXcd direct = m.inverse();
                    worst = std::max(worst, (inv - direct).norm() / direct.norm());
                }
                return std::pair{worst <= 1e-9, value_detail("Feshbach gap", worst, 1e-9)};
            }));

            suites.push_back(suite("resolvent", [] {
                const auto rep = regularity_check(PotentialSpec::sample(profiles::gaussian(5.0, 0.5), make_grid(1.5, 12)));
                return std::pair{rep.verdict == Verdict::regular && rep.sigma_min > 0.0,
                                 "verdict " + to_string(rep.verdict) + ", sigma_min " + format_number(rep.sigma_min)};
            }));

            suites.push_back(suite("evolution", [] {
                const auto src = make_grid(1.5, 24);
                Field f(static_cast<Eigen::Index>(src.size()));
                for (std::size_t i = 0; i < src.size(); ++i)
                {
                    const Point p = src.node(i);
                    const double r2 = p.x * p.x + p.y * p.y;
                    f[static_cast<Eigen::Index>(i)] = r2 < 2.25 ? std::exp(-r2 / 0.16) : 0.0;
                }
                const auto obs = make_grid(2.0, 8);
                const auto pot = PotentialSpec::sample(profiles::zero(), make_grid(1.0, 8));
                const double lambda_max = 3.0 / src.cell_width();
                const auto sg = make_spectral_grid(lambda_max, 16 * (static_cast<int>(std::ceil(lambda_max / 0.4)) + 13));
                const Field a = apply_sine_H(1.0, pot, src, f, obs, sg);
                const Field b = freewave::free_sine_apply(1.0, src, f, obs);
                const double gap = weighted_l2(obs, a - b) / weighted_l2(obs, b);
                return std::pair{gap <= 1e-3, value_detail("free synthesis gap", gap, 1e-3)};
            }));

            suites.push_back(suite("fdtd", [] {
                const auto cfg = make_fdtd_config(3.0, 96, 1.0, 0.25, 0.5);
                const auto grid = fdtd_grid(cfg);
                Field f(static_cast<Eigen::Index>(grid.size()));
                for (std::size_t i = 0; i < grid.size(); ++i)
                    f[static_cast<Eigen::Index>(i)] = profiles::bump(1.0, 1.0)(grid.node(i));
                const auto run = fdtd_solve(f, Field::Zero(f.size()), std::nullopt,
                                            PotentialSpec::sample(profiles::gaussian(2.0, 0.5), grid), cfg);
                const auto [lo, hi] = std::minmax_element(run.energy.begin(), run.energy.end());
                const double drift = (*hi - *lo) / run.energy.front();
                return std::pair{drift <= 1e-3, value_detail("energy drift", drift, 1e-3)};
            }));

            suites.push_back(suite("norms", [] {
                const auto grid = make_grid(1.0, 8);
                const auto times = uniform_times(0.1, 8);
                Field g(static_cast<Eigen::Index>(grid.size()));
                for (std::size_t i = 0; i < grid.size(); ++i)
                    g[static_cast<Eigen::Index>(i)] = profiles::gaussian(1.0, 0.5)(grid.node(i));
                std::vector<double> h;
                for (double t : times)
                    h.push_back(std::cos(2.0 * t));
                const auto field = separable_field(grid, g, times, h);
                const double joint = reversed_norm(field, Exponent(4.0), Exponent(4.0));
                double direct = 0.0;
                for (Eigen::Index i = 0; i < field.values().rows(); ++i)
                    for (Eigen::Index j = 0; j < field.values().cols(); ++j)
                        direct += grid.weight(static_cast<std::size_t>(i)) * 0.1 * std::pow(field.values()(i, j), 4.0);
                direct = std::pow(direct, 0.25);
                const double gap = std::abs(joint - direct) / direct;
                const bool regions = admissible_theorem11({Exponent::infinity(), Exponent::infinity(),
                                                           Exponent(4.0 / 3.0), Exponent(2.0), std::nullopt})
                                         .admissible &&
                                     admissible_reversed(0.125, 0.5) && !admissible_direct(0.0, 0.0);
                return std::pair{gap <= 1e-12 && regions, value_detail("norm gap", gap, 1e-12)};
            }));

            Csv csv({"suite", "pass", "detail"});
            for (const auto& s : suites)
                csv.row({s.name, boolean(s.pass), "\"" + s.detail + "\""});
            csv.write(dir / "selfcheck.csv");
            report.tables.push_back("selfcheck.csv");
        }
    } // namespace

    std::map<std::string, ConfigEntry> parse_config_text(const std::string& text)
    {
        std::map<std::string, ConfigEntry> out;
        std::istringstream in(text);
        std::string raw, section;
        int line = 0;
        while (std::getline(in, raw))
        {
            ++line;
            const auto hash = raw.find('#');
            const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
            if (body.empty())
                continue;
            if (body.front() == '[')
            {
                if (body.back() != ']' || body.size() < 3)
                    config_error(line, body, "malformed section header");
                section = trim(body.substr(1, body.size() - 2));
                continue;
            }
            const auto eq = body.find('=');
            if (eq == std::string::npos)
                config_error(line, body, "expected 'key = value'");
            const std::string key = trim(body.substr(0, eq));
            const bool valid = !key.empty() && std::all_of(key.begin(), key.end(), [](char ch) {
                return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.' || ch == '-';
            });
            if (!valid)
                config_error(line, key, "malformed key");
            const std::string full = section.empty() ? key : section + "." + key;
            if (out.count(full))
                config_error(line, full, "duplicate key (first set on line " + std::to_string(out[full].line) + ")");
            out[full] = {trim(body.substr(eq + 1)), line};
        }
        return out;
    }

    const std::vector<std::string>& experiment_names()
    {
        static const std::vector<std::string> names{"regularity", "propagate",  "decay",    "strichartz",
                                                    "kernel-integral", "semilinear", "selfcheck"};
        return names;
    }

    ExperimentConfig load_config(const std::string& text)
    {
        Reader r(parse_config_text(text));
        ExperimentConfig c;

        r.text("experiment", c.experiment);
        if (std::find(experiment_names().begin(), experiment_names().end(), c.experiment) == experiment_names().end())
            config_error(r.line("experiment"), "experiment", "unknown experiment '" + c.experiment + "'");
        r.text("output_dir", c.output_dir);
        r.read("seed", c.seed, [](const std::string& v) {
            std::uint64_t x = 0;
            const auto t = trim(v);
            const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
            if (res.ec != std::errc() || res.ptr != t.data() + t.size())
                throw Error(ErrorCode::configuration, "expected a non-negative integer, got '" + v + "'");
            return x;
        });
        r.note("seed", std::to_string(c.seed));

        r.text("potential.kind", c.potential.kind);
        if (c.potential.kind != "gaussian" && c.potential.kind != "well" && c.potential.kind != "ring" &&
            c.potential.kind != "file")
            config_error(r.line("potential.kind"), "potential.kind",
                         "expected gaussian, well, ring or file, got '" + c.potential.kind + "'");
        r.number("potential.amplitude", c.potential.amplitude, false);
        r.number("potential.radius", c.potential.radius);
        r.number("potential.width", c.potential.width);
        r.point("potential.center", c.potential.center);
        r.text("potential.file", c.potential.file);
        if (c.potential.kind == "file" && c.potential.file.empty())
            config_error(r.line("potential.kind"), "potential.file", "required for the file potential");
        r.numbers("potential.coupling_sweep", c.potential.coupling_sweep, false);

        r.number("grid.half_width", c.grid.half_width);
        r.integer("grid.n", c.grid.n, 8);

        r.number("spectral.lambda_max", c.spectral.lambda_max, false);
        if (c.spectral.lambda_max < 0.0)
            config_error(r.line("spectral.lambda_max"), "spectral.lambda_max", "must be non-negative");
        r.integer("spectral.n_nodes", c.spectral.n_nodes, 0);
        if (c.spectral.n_nodes != 0 && c.spectral.n_nodes < 64)
            config_error(r.line("spectral.n_nodes"), "spectral.n_nodes", "must be 0 or at least 64");
        r.integer("spectral.refinement", c.spectral.refinement, 0);
        r.number("spectral.panel_width", c.spectral.panel_width);

        r.number("fdtd.half_width", c.fdtd.half_width);
        r.integer("fdtd.n", c.fdtd.n, 8);
        r.number("fdtd.dt_factor", c.fdtd.dt_factor);
        if (c.fdtd.dt_factor > 1.0)
            config_error(r.line("fdtd.dt_factor"), "fdtd.dt_factor", "must not exceed 1 (CFL)");
        r.number("fdtd.T_final", c.fdtd.T_final);

        r.number("data.width", c.data.width);
        r.number("data.cut", c.data.cut);

        r.numbers("propagate.times", c.propagate_times, false);

        r.number("decay.dt", c.decay_dt);
        r.number("decay.t_min", c.decay_t_min);
        r.number("decay.t_max", c.decay_t_max);
        if (c.decay_t_max <= c.decay_t_min || c.decay_t_max > c.fdtd.T_final)
            config_error(r.line("decay.t_max"), "decay.t_max", "must lie in (decay.t_min, fdtd.T_final]");
        if (c.experiment == "decay" && c.fdtd.half_width < c.fdtd.T_final + c.data.cut)
            config_error(r.line("fdtd.half_width"), "fdtd.half_width",
                         "walls reflect before fdtd.T_final; need at least T_final + data.cut");

        r.tuples("strichartz.tuples", c.strichartz_tuples);
        r.integer("strichartz.n_per_side", c.strichartz_n, 8);
        r.integer("strichartz.samples", c.strichartz_samples, 2);

        r.points("kernel.points", c.kernel_points);
        r.numbers("kernel.T", c.kernel_T);
        if (c.kernel_T.empty() || *std::min_element(c.kernel_T.begin(), c.kernel_T.end()) <= 1.0)
            config_error(r.line("kernel.T"), "kernel.T", "needs windows [1, T] with T > 1");
        r.number("kernel.dt", c.kernel_dt);
        r.number("kernel.panel_width", c.kernel_panel_width);

        r.number("regularity.beta_max", c.regularity_beta_max, false);

        r.number("semilinear.p", c.semilinear_p);
        if (c.semilinear_p <= 1.0)
            config_error(r.line("semilinear.p"), "semilinear.p", "must exceed 1");
        r.number("semilinear.amplitude", c.semilinear_amplitude, false);
        r.number("semilinear.dt", c.semilinear_dt);
        r.integer("semilinear.steps", c.semilinear_steps, 1);
        r.integer("semilinear.iterations", c.semilinear_iterations, 1);

        r.reject_unknown();
        c.echo = r.echo();
        return c;
    }

    ExperimentConfig load_config_file(const std::string& path) { return load_config(read_file(path)); }

    bool RunReport::validation_failed() const
    {
        return std::any_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return !s.pass; });
    }

    std::string RunReport::to_json() const
    {
        nlohmann::ordered_json j;
        j["experiment"] = experiment;
        auto& cfg = j["config"] = nlohmann::ordered_json::object();
        for (const auto& [k, v] : config)
            cfg[k] = v;
        auto& ver = j["verdicts"] = nlohmann::ordered_json::object();
        for (const auto& [k, v] : verdicts)
            ver[k] = v;
        j["tables"] = tables;
        auto& su = j["suites"] = nlohmann::ordered_json::array();
        for (const auto& s : suites)
            su.push_back({{"name", s.name}, {"pass", s.pass}, {"detail", s.detail}});
        j["warnings"] = warnings;
        j["wall_time_seconds"] = wall_time;
        return j.dump(2) + "\n";
    }

    RunReport run(const ExperimentConfig& config)
    {
        const auto start = std::chrono::steady_clock::now();
        const std::filesystem::path dir(config.output_dir);
        std::filesystem::create_directories(dir);
        Warnings::instance().drain();

        RunReport report;
        report.experiment = config.experiment;
        report.config = config.echo;

        static const std::map<std::string, void (*)(const ExperimentConfig&, const std::filesystem::path&, RunReport&)>
            dispatch{{"regularity", run_regularity}, {"propagate", run_propagate},
                     {"decay", run_decay},           {"strichartz", run_strichartz},
                     {"kernel-integral", run_kernel_integral}, {"semilinear", run_semilinear},
                     {"selfcheck", run_selfcheck}};
        const auto it = dispatch.find(config.experiment);
        if (it == dispatch.end())
            throw Error(ErrorCode::configuration, "experiment: unknown experiment '" + config.experiment + "'");
        it->second(config, dir, report);

        report.warnings = Warnings::instance().drain();
        report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::ofstream(dir / "report.json", std::ios::binary) << report.to_json();
        return report;
    }

    std::vector<std::pair<std::string, std::string>> column_references(const std::string& experiment)
    {
        using Refs = std::vector<std::pair<std::string, std::string>>;
        static const std::map<std::string, Refs> refs{
            {"regularity",
             {{"coupling", "multiplier beta applied to the configured potential"},
              {"sigma_min", "smallest singular value of U + v G0 v restricted to the complement of v; "
                            "zero marks a zero-energy resonance or eigenvalue"},
              {"bound_states", "negative eigenvalues of the discretised -Delta + V"},
              {"verdict", "regular when sigma_min exceeds tol_regular: the zero-energy regularity hypothesis "
                          "of the dispersive decay theorem"}}},
            {"propagate",
             {{"sine", "sin(t sqrt H) P_c / sqrt H f by spectral synthesis over the continuous spectrum"},
              {"cosine", "cos(t sqrt H) P_c f by the same synthesis"}}},
            {"decay",
             {{"sup_norm", "sup |cos(t sqrt H) f|; the free law is t^{-1/2}"},
              {"weighted_sup_k1", "sup |u| / (1 + log_+ |x|): weighted dispersive estimate for regular V"},
              {"weighted_sup_k2", "sup |u| / (1 + log_+ |x|)^2"}}},
            {"strichartz",
             {{"admissible", "2/q1 + 1/r1 + 2 = 2/q2 + 1/r2 and 0 < 1/r2 - 1/r1 <= 1/2 (reversed Strichartz range)"},
              {"ratio", "||Duhamel F||_{L^q1_x L^r1_t} / ||F||_{L^q2_x L^r2_t}, max over the forcing battery"},
              {"scaling_exponent_measured", "slope of log ratio against log mu under F -> F(mu x, mu t)"},
              {"scaling_exponent_predicted", "2/q2 + 1/r2 - 2/q1 - 1/r1 - 2, zero on the admissible line"}}},
            {"kernel-integral",
             {{"integral", "int_1^T |sin(t sqrt H) P_c / sqrt H (x, y)| dt; bounded in T for regular V, "
                           "logarithmic growth for the free resonance"},
              {"weighted_integral", "integral / ((1 + log_+ |x|)(1 + log_+ |y|))"}}},
            {"semilinear",
             {{"difference", "||f_k - f_{k-1}|| in L^8_x L^12_t for the Picard iterates of the pure-power equation"},
              {"ratio", "successive difference ratio; a contraction stays below 1/2"}}},
            {"selfcheck",
             {{"pass", "invariant suite of each module: Hankel representation, cone support, block inversion, "
                       "regularity verdict, free synthesis, energy conservation, norm factorisation"}}}};
        const auto it = refs.find(experiment);
        if (it == refs.end())
            throw Error(ErrorCode::configuration, "experiment: unknown experiment '" + experiment + "'");
        return it->second;
    }

    std::string format_number(double x)
    {
        if (std::isnan(x))
            return "nan";
        if (std::isinf(x))
            return x > 0.0 ? "inf" : "-inf";
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
        return std::string(buf, res.ptr);
    }

    int exit_code(const Error& e)
    {
        switch (e.code())
        {
        case ErrorCode::configuration:
        case ErrorCode::domain:
            return 2;
        default:
            return 3;
        }
    }
} // namespace dispwave::cli
