#include "dispwave/freewave.hpp"

#include "dispwave/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>

namespace dispwave::freewave
{
    using specfun::pi;

    namespace
    {
        std::atomic<std::size_t> grazing_hits{0};

        constexpr int theta_nodes = 12;

        struct Box
        {
            double x0 = 0, x1 = -1, y0 = 0, y1 = -1;

            bool empty() const { return x1 < x0 || y1 < y0; }

            double min_distance(Point p) const
            {
                const double dx = std::max({x0 - p.x, 0.0, p.x - x1});
                const double dy = std::max({y0 - p.y, 0.0, p.y - y1});
                return std::hypot(dx, dy);
            }

            double max_distance(Point p) const
            {
                const double dx = std::max(std::abs(p.x - x0), std::abs(p.x - x1));
                const double dy = std::max(std::abs(p.y - y0), std::abs(p.y - y1));
                return std::hypot(dx, dy);
            }

            bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
        };

        // Bounding box of the nonzero samples, dilated by the interpolation stencil.
        Box support_box(const UniformLayout& g, const Field& f)
        {
            int imin = g.nx, imax = -1, jmin = g.ny, jmax = -1;
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i)
                    if (f[g.index(i, j)] != 0.0)
                    {
                        imin = std::min(imin, i);
                        imax = std::max(imax, i);
                        jmin = std::min(jmin, j);
                        jmax = std::max(jmax, j);
                    }
            if (imax < 0)
                return {};
            const double pad = (GridInterpolator::stencil / 2) * g.h;
            return {g.x0 + imin * g.h - pad, g.x0 + imax * g.h + pad, g.y0 + jmin * g.h - pad,
                    g.y0 + jmax * g.h + pad};
        }

        Box merge(const Box& a, const Box& b)
        {
            if (a.empty())
                return b;
            if (b.empty())
                return a;
            return {std::min(a.x0, b.x0), std::max(a.x1, b.x1), std::min(a.y0, b.y0), std::max(a.y1, b.y1)};
        }

        struct AngleTable
        {
            std::vector<double> c, s;
        };

        class CircleRule
        {
        public:
            explicit CircleRule(double h) : h_(h) {}

            // Trapezoid over the circle of radius rho around x, restricted to
            // samples inside the support box.
            template <class F>
            double integrate(Point x, double rho, const Box& box, F&& f)
            {
                int n = std::max(16, static_cast<int>(std::ceil(3.0 * pi * rho / h_)));
                n += (4 - n % 4) % 4;
                const auto& tab = table(n);
                double acc = 0.0;
                for (int m = 0; m < n; ++m)
                {
                    const double px = x.x + rho * tab.c[m];
                    const double py = x.y + rho * tab.s[m];
                    if (!box.contains(px, py))
                        continue;
                    acc += f(Point{px, py}, tab.c[m], tab.s[m]);
                }
                return acc * (2.0 * pi / n);
            }

        private:
            const AngleTable& table(int n)
            {
                auto& t = cache_[n];
                if (t.c.empty())
                {
                    t.c.resize(n);
                    t.s.resize(n);
                    for (int m = 0; m < n; ++m)
                    {
                        t.c[m] = std::cos(2.0 * pi * m / n);
                        t.s[m] = std::sin(2.0 * pi * m / n);
                    }
                }
                return t;
            }

            double h_;
            std::map<int, AngleTable> cache_;
        };

        void theta_rule(double t, double h, std::vector<double>& th, std::vector<double>& w)
        {
            const int panels = std::max(1, static_cast<int>(std::ceil(0.5 * pi * t / (4.0 * h))));
            for (int p = 0; p < panels; ++p)
                specfun::append_gauss_panel(0.5 * pi * p / panels, 0.5 * pi * (p + 1) / panels, theta_nodes, th, w);
        }

        void check_field(const Grid2D& grid, const Field& f, const char* what)
        {
            if (f.size() != static_cast<Eigen::Index>(grid.size()))
                throw Error(ErrorCode::domain, std::string(what) + " does not match its grid");
        }

        // Low-energy transform table on [-table_span, table_span].
        constexpr double table_span = 128.0;
        constexpr double table_step = 1.0 / 32.0;

        struct LowEnergyQuadrature
        {
            std::vector<double> lambda, weight, h, logl;
        };

        const LowEnergyQuadrature& low_energy_quadrature()
        {
            static const LowEnergyQuadrature q = [] {
                LowEnergyQuadrature out;
                std::vector<double> x, w;
                double b = 0.05;
                for (int k = 0; k < 46; ++k, b *= 0.5)
                    specfun::append_gauss_panel(0.5 * b, b, theta_nodes, x, w);
                const int panels = 78;
                for (int p = 0; p < panels; ++p)
                    specfun::append_gauss_panel(0.05 + 1.95 * p / panels, 0.05 + 1.95 * (p + 1) / panels, theta_nodes,
                                                x, w);
                for (std::size_t i = 0; i < x.size(); ++i)
                {
                    out.lambda.push_back(x[i]);
                    out.weight.push_back(w[i]);
                    out.h.push_back(cutoff_h(x[i]));
                    out.logl.push_back(std::log(x[i]));
                }
                return out;
            }();
            return q;
        }

        double low_energy_transform_direct(double t)
        {
            const auto& q = low_energy_quadrature();
            double acc = 0.0;
            for (std::size_t i = 0; i < q.lambda.size(); ++i)
            {
                const double lt = q.lambda[i] * t;
                acc += q.weight[i] * q.h[i] * (0.5 * std::sin(lt) - q.logl[i] / pi * std::cos(lt));
            }
            return acc;
        }

        const std::vector<double>& low_energy_table()
        {
            static std::once_flag once;
            static std::vector<double> table;
            std::call_once(once, [] {
                const int n = static_cast<int>(std::lround(2.0 * table_span / table_step)) + 1;
                table.resize(n);
                for (int k = 0; k < n; ++k)
                    table[k] = low_energy_transform_direct(-table_span + k * table_step);
            });
            return table;
        }
    } // namespace

    void ConeKernelParams::validate() const
    {
        if (!(epsilon > 0.0 && epsilon < 0.25))
            throw Error(ErrorCode::domain, "cone kernel epsilon must lie in (0, 1/4)");
        if (!(t_max > 2.0))
            throw Error(ErrorCode::domain, "cone kernel t_max must exceed 2");
    }

    double sine_kernel(double t, double r)
    {
        if (!std::isfinite(t) || !std::isfinite(r) || r < 0.0)
            throw Error(ErrorCode::domain, "sine_kernel requires finite t and r >= 0");
        if (t == r)
        {
            grazing_hits.fetch_add(1, std::memory_order_relaxed);
            return 0.0;
        }
        if (t < r)
            return 0.0;
        return 1.0 / (2.0 * pi * std::sqrt((t - r) * (t + r)));
    }

    FreeKernelSample sample_sine_kernel(double t, double r) { return {t, r, sine_kernel(t, r)}; }

    std::size_t grazing_count() { return grazing_hits.load(std::memory_order_relaxed); }

    Field free_sine_apply(double t, const Grid2D& src, const Field& f, const Grid2D& obs)
    {
        check_field(src, f, "free_sine_apply field");
        if (!(t >= 0.0) || !std::isfinite(t))
            throw Error(ErrorCode::domain, "free_sine_apply requires t >= 0");
        Field out = Field::Zero(static_cast<Eigen::Index>(obs.size()));
        const auto& layout = src.require_layout();
        const Box box = support_box(layout, f);
        if (t == 0.0 || box.empty())
            return out;

        const GridInterpolator interp(src, f);
        std::vector<double> th, wt;
        theta_rule(t, layout.h, th, wt);
        CircleRule circle(layout.h);

        for (std::size_t k = 0; k < obs.size(); ++k)
        {
            const Point x = obs.node(k);
            const double dmin = box.min_distance(x), dmax = box.max_distance(x);
            if (dmin > t)
                continue;
            double acc = 0.0;
            for (std::size_t q = 0; q < th.size(); ++q)
            {
                const double rho = t * std::sin(th[q]);
                if (rho < dmin || rho > dmax)
                    continue;
                const double mean = circle.integrate(x, rho, box, [&](Point p, double, double) { return interp(p); });
                acc += wt[q] * t * std::sin(th[q]) * mean;
            }
            out[static_cast<Eigen::Index>(k)] = acc / (2.0 * pi);
        }
        return out;
    }

    Gradient finite_difference_gradient(const Grid2D& grid, const Field& f)
    {
        check_field(grid, f, "gradient field");
        const auto& g = grid.require_layout();
        Gradient out{Field::Zero(f.size()), Field::Zero(f.size())};
        auto at = [&](int i, int j) {
            return (i < 0 || j < 0 || i >= g.nx || j >= g.ny) ? 0.0 : f[g.index(i, j)];
        };
        const double c = 1.0 / (12.0 * g.h);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
            {
                out.dx[g.index(i, j)] = c * (at(i - 2, j) - 8 * at(i - 1, j) + 8 * at(i + 1, j) - at(i + 2, j));
                out.dy[g.index(i, j)] = c * (at(i, j - 2) - 8 * at(i, j - 1) + 8 * at(i, j + 1) - at(i, j + 2));
            }
        return out;
    }

    Field free_cosine_apply(double t, const Grid2D& src, const Field& f, const Gradient& grad, const Grid2D& obs)
    {
        check_field(src, f, "free_cosine_apply field");
        check_field(src, grad.dx, "free_cosine_apply gradient");
        check_field(src, grad.dy, "free_cosine_apply gradient");
        if (!(t >= 0.0) || !std::isfinite(t))
            throw Error(ErrorCode::domain, "free_cosine_apply requires t >= 0");
        const auto& layout = src.require_layout();

        const double fmax = f.cwiseAbs().maxCoeff();
        double edge = 0.0;
        for (int i = 0; i < layout.nx; ++i)
            edge = std::max({edge, std::abs(f[layout.index(i, 0)]), std::abs(f[layout.index(i, layout.ny - 1)])});
        for (int j = 0; j < layout.ny; ++j)
            edge = std::max({edge, std::abs(f[layout.index(0, j)]), std::abs(f[layout.index(layout.nx - 1, j)])});
        if (edge > 1e-6 * fmax)
            warn("truncation", "free_cosine_apply: data does not vanish on the grid boundary");

        Field out = Field::Zero(static_cast<Eigen::Index>(obs.size()));
        if (t == 0.0)
        {
            const GridInterpolator fi(src, f);
            for (std::size_t k = 0; k < obs.size(); ++k)
                out[static_cast<Eigen::Index>(k)] = fi(obs.node(k));
            return out;
        }
        const Box box = merge(support_box(layout, grad.dx), support_box(layout, grad.dy));
        if (box.empty())
            return out;

        const GridInterpolator gx(src, grad.dx), gy(src, grad.dy);
        std::vector<double> th, wt;
        theta_rule(t, layout.h, th, wt);
        CircleRule circle(layout.h);
        auto radial = [&](Point p, double c, double s) { return gx(p) * c + gy(p) * s; };

        for (std::size_t k = 0; k < obs.size(); ++k)
        {
            const Point x = obs.node(k);
            const double dmin = box.min_distance(x), dmax = box.max_distance(x);
            double inner = 0.0;
            for (std::size_t q = 0; q < th.size(); ++q)
            {
                const double rho = t * std::sin(th[q]);
                if (rho < dmin || rho > dmax)
                    continue;
                inner += wt[q] * t * (1.0 - std::cos(th[q])) * circle.integrate(x, rho, box, radial);
            }
            double outer = 0.0;
            const double a = std::max(t, dmin);
            if (dmax > a)
            {
                const int panels = std::max(1, static_cast<int>(std::ceil((dmax - a) / (4.0 * layout.h))));
                std::vector<double> rr, wr;
                for (int p = 0; p < panels; ++p)
                    specfun::append_gauss_panel(a + (dmax - a) * p / panels, a + (dmax - a) * (p + 1) / panels,
                                                theta_nodes, rr, wr);
                for (std::size_t q = 0; q < rr.size(); ++q)
                    outer += wr[q] * circle.integrate(x, rr[q], box, radial);
            }
            out[static_cast<Eigen::Index>(k)] = (inner - outer) / (2.0 * pi);
        }
        return out;
    }

    cplx resolvent_kernel_free(double lambda, double r)
    {
        if (lambda == 0.0 || !std::isfinite(lambda))
            throw Error(ErrorCode::domain, "resolvent_kernel_free requires finite nonzero lambda");
        if (!(r > 0.0))
            throw Error(ErrorCode::domain, "resolvent_kernel_free: singular diagonal r = 0");
        const cplx h = specfun::hankel0(specfun::HankelBranch::plus, std::abs(lambda) * r);
        const cplx v = cplx{0.0, 0.25} * h;
        return lambda > 0.0 ? v : std::conj(v);
    }

    double eta(double t, double epsilon)
    {
        const double s = (t - (1.0 - epsilon)) / (2.0 * epsilon);
        if (s <= 0.0)
            return 0.0;
        if (s >= 1.0)
            return 1.0;
        return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
    }

    double cutoff_h(double lambda) { return 1.0 - specfun::smooth_step(std::abs(lambda) - 1.0); }

    cplx low_energy_profile(double lambda)
    {
        if (lambda == 0.0)
            throw Error(ErrorCode::domain, "low_energy_profile is singular at 0");
        const double sgn = lambda > 0.0 ? 1.0 : -1.0;
        return cutoff_h(lambda) * cplx{-std::log(std::abs(lambda)) / (2.0 * pi), 0.25 * sgn};
    }

    double low_energy_transform(double t)
    {
        if (std::abs(t) > table_span - 2.0 * table_step)
            return t > 0.0 ? 1.0 / t : 0.0;
        const auto& tab = low_energy_table();
        const double u = (t + table_span) / table_step;
        const int i = static_cast<int>(std::floor(u)) - 1;
        const double s = u - (i + 1);
        // Cubic Lagrange through nodes i .. i+3, s measured from node i+1.
        const double w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
        const double w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
        const double w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
        const double w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
        return w0 * tab[i] + w1 * tab[i + 1] + w2 * tab[i + 2] + w3 * tab[i + 3];
    }

    double ghat(double t, const ConeKernelParams& params)
    {
        params.validate();
        const double e = eta(t, params.epsilon);
        return (e == 0.0 ? 0.0 : e / t) - low_energy_transform(t);
    }

    double cone_L_kernel(double t, double r, const ConeKernelParams& params)
    {
        if (!(r > 0.0))
            throw Error(ErrorCode::domain, "cone_L_kernel requires r > 0");
        const double k = 2.0 * pi * sine_kernel(t, r);
        const double e = eta(t, params.epsilon);
        return k - (e == 0.0 ? 0.0 : e / t) + ghat(t, params);
    }

    double cone_L_abs_integral(double r, double a, double b, const ConeKernelParams& params)
    {
        params.validate();
        if (!(r > 0.0))
            throw Error(ErrorCode::domain, "cone_L_abs_integral requires r > 0");
        if (b <= a)
            return 0.0;
        constexpr int n = 16;
        double acc = 0.0;
        auto smooth_segment = [&](double lo, double hi) {
            // Panels of width at most 0.25, geometric near the cone.
            double p = lo;
            while (p < hi)
            {
                const double dist = std::max(p - r, 0.0);
                const double width = std::min({0.25, hi - p, dist > 0.0 ? std::max(dist, 1e-3 * r) : 0.25});
                std::vector<double> x, w;
                specfun::append_gauss_panel(p, p + width, n, x, w);
                for (int i = 0; i < n; ++i)
                    acc += w[i] * std::abs(cone_L_kernel(x[i], r, params));
                p += width;
            }
        };

        std::vector<double> cuts{a, b, 1.0 - params.epsilon, 1.0 + params.epsilon};
        const double near = 1.5 * r;
        if (r > a && r < b)
            cuts.push_back(r);
        if (near > a && near < b)
            cuts.push_back(near);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [&](double c) { return c < a || c > b; }), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

        for (std::size_t s = 0; s + 1 < cuts.size(); ++s)
        {
            const double lo = cuts[s], hi = cuts[s + 1];
            if (lo >= r && lo < near)
            {
                // t = r cosh u absorbs the inverse square root at the cone.
                const double u0 = std::acosh(std::max(1.0, lo / r));
                const double u1 = std::acosh(hi / r);
                const int panels = 8;
                for (int p = 0; p < panels; ++p)
                {
                    std::vector<double> x, w;
                    specfun::append_gauss_panel(u0 + (u1 - u0) * p / panels, u0 + (u1 - u0) * (p + 1) / panels, n, x,
                                                w);
                    for (int i = 0; i < n; ++i)
                    {
                        const double t = r * std::cosh(x[i]);
                        const double jac = r * std::sinh(x[i]);
                        const double e = eta(t, params.epsilon);
                        const double smooth = -(e == 0.0 ? 0.0 : e / t) + ghat(t, params);
                        acc += w[i] * std::abs(1.0 + jac * smooth);
                    }
                }
            }
            else
                smooth_segment(lo, hi);
        }
        return acc;
    }
} // namespace dispwave::freewave
