#include "dispwave/potential.hpp"

#include "dispwave/errors.hpp"
#include "dispwave/specfun.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>

namespace dispwave
{
    namespace profiles
    {
        Profile zero()
        {
            return [](Point) { return 0.0; };
        }

        Profile gaussian(double amplitude, double radius, Point c)
        {
            if (!(radius > 0.0))
                throw Error(ErrorCode::domain, "gaussian radius must be positive");
            return [=](Point p) {
                const double s = (std::pow(p.x - c.x, 2) + std::pow(p.y - c.y, 2)) / (radius * radius);
                return amplitude * std::exp(-s);
            };
        }

        Profile well(double amplitude, double radius, Point c)
        {
            if (!(radius > 0.0))
                throw Error(ErrorCode::domain, "well radius must be positive");
            return [=](Point p) { return distance(p, c) < radius ? amplitude : 0.0; };
        }

        Profile ring(double amplitude, double radius, double width, Point c)
        {
            if (!(radius > 0.0) || !(width > 0.0))
                throw Error(ErrorCode::domain, "ring radius and width must be positive");
            return [=](Point p) {
                const double d = (distance(p, c) - radius) / width;
                return amplitude * std::exp(-d * d);
            };
        }

        Profile bump(double amplitude, double radius, Point c)
        {
            if (!(radius > 0.0))
                throw Error(ErrorCode::domain, "bump radius must be positive");
            return [=](Point p) {
                const double s = (std::pow(p.x - c.x, 2) + std::pow(p.y - c.y, 2)) / (radius * radius);
                return s < 1.0 ? amplitude * std::exp(1.0 - 1.0 / (1.0 - s)) : 0.0;
            };
        }
    } // namespace profiles

    namespace
    {
        double kernel_value(KatoKernel k, double theta, double r)
        {
            if (r >= 1.0)
                return 0.0;
            switch (k)
            {
            case KatoKernel::log_power: return std::pow(-std::log(r), theta);
            case KatoKernel::inv_sqrt: return 1.0 / std::sqrt(r);
            case KatoKernel::inv_sqrt_log: return -std::log(r) / std::sqrt(r);
            }
            return 0.0;
        }

        // int_0^min(rho,1) k(r) r dr
        double radial_primitive(KatoKernel k, double theta, double rho)
        {
            rho = std::min(rho, 1.0);
            if (rho <= 0.0)
                return 0.0;
            const double p = rho * std::sqrt(rho);
            switch (k)
            {
            case KatoKernel::log_power:
                if (rho == 1.0)
                    return std::pow(2.0, -theta - 1.0) * std::tgamma(theta + 1.0);
                return std::pow(2.0, -theta - 1.0) * boost::math::tgamma(theta + 1.0, -2.0 * std::log(rho));
            case KatoKernel::inv_sqrt: return 2.0 / 3.0 * p;
            case KatoKernel::inv_sqrt_log: return -2.0 / 3.0 * p * std::log(rho) + 4.0 / 9.0 * p;
            }
            return 0.0;
        }

        // int over theta in [t0, t1] of radial_primitive(limit(theta)).
        template <class Limit>
        double angular(KatoKernel k, double theta, double t0, double t1, Limit&& limit)
        {
            if (t1 <= t0)
                return 0.0;
            // Split where the radial limit crosses the unit cutoff.
            std::vector<double> cuts{t0, t1};
            constexpr int probes = 64;
            for (int i = 0; i < probes; ++i)
            {
                const double a = t0 + (t1 - t0) * i / probes, b = t0 + (t1 - t0) * (i + 1) / probes;
                if ((limit(a) - 1.0) * (limit(b) - 1.0) < 0.0)
                {
                    double lo = a, hi = b;
                    for (int it = 0; it < 60; ++it)
                    {
                        const double mid = 0.5 * (lo + hi);
                        ((limit(lo) - 1.0) * (limit(mid) - 1.0) <= 0.0 ? hi : lo) = mid;
                    }
                    cuts.push_back(0.5 * (lo + hi));
                }
            }
            std::sort(cuts.begin(), cuts.end());
            double acc = 0.0;
            std::vector<double> x, w;
            for (std::size_t s = 0; s + 1 < cuts.size(); ++s)
                specfun::append_gauss_panel(cuts[s], cuts[s + 1], 20, x, w);
            for (std::size_t i = 0; i < x.size(); ++i)
                acc += w[i] * radial_primitive(k, theta, limit(x[i]));
            return acc;
        }

        // Integral of k(|z|) over [0, a] x [0, b], a, b >= 0.
        double corner_integral(KatoKernel k, double theta, double a, double b)
        {
            if (a <= 0.0 || b <= 0.0)
                return 0.0;
            const double split = std::atan2(b, a);
            return angular(k, theta, 0.0, split, [&](double t) { return a / std::cos(t); }) +
                   angular(k, theta, split, 0.5 * specfun::pi, [&](double t) { return b / std::sin(t); });
        }

        double signed_corner(KatoKernel k, double theta, double x, double y)
        {
            const double s = (x < 0.0 ? -1.0 : 1.0) * (y < 0.0 ? -1.0 : 1.0);
            return s * corner_integral(k, theta, std::abs(x), std::abs(y));
        }

        // Integral of k(|z|) over the rectangle [x0, x1] x [y0, y1] in coordinates centred at y.
        double rect_integral(KatoKernel k, double theta, double x0, double x1, double y0, double y1)
        {
            return signed_corner(k, theta, x1, y1) - signed_corner(k, theta, x0, y1) -
                   signed_corner(k, theta, x1, y0) + signed_corner(k, theta, x0, y0);
        }
    } // namespace

    double kato_type_sup(const Grid2D& grid, const Field& abs_f, KatoKernel kernel, double theta)
    {
        if (!(theta > 0.0))
            throw Error(ErrorCode::domain, "Kato exponent must be positive");
        if (abs_f.size() != static_cast<Eigen::Index>(grid.size()))
            throw Error(ErrorCode::domain, "Kato norm field does not match its grid");

        std::vector<int> support;
        for (Eigen::Index i = 0; i < abs_f.size(); ++i)
            if (abs_f[i] != 0.0)
                support.push_back(static_cast<int>(i));
        if (support.empty())
            return 0.0;

        std::vector<Point> candidates(grid.nodes().begin(), grid.nodes().end());
        const double h = grid.cell_width();
        if (const auto& lay = grid.layout())
        {
            candidates.clear();
            for (int j = 0; j <= 2 * (lay->ny - 1); ++j)
                for (int i = 0; i <= 2 * (lay->nx - 1); ++i)
                    candidates.push_back({lay->x0 + 0.5 * h * i, lay->y0 + 0.5 * h * j});
        }

        const double near = 1.5 * std::sqrt(2.0) * h * (1.0 + 1e-9);
        double best = 0.0;
        for (const Point& y : candidates)
        {
            double acc = 0.0;
            for (int j : support)
            {
                const Point x = grid.node(static_cast<std::size_t>(j));
                const double r = distance(x, y);
                if (r > 1.0 + h)
                    continue;
                const double fj = std::abs(abs_f[j]);
                if (r <= near && grid.uniform())
                {
                    const double dx = x.x - y.x, dy = x.y - y.y;
                    acc += fj * rect_integral(kernel, theta, dx - 0.5 * h, dx + 0.5 * h, dy - 0.5 * h, dy + 0.5 * h);
                }
                else if (r > 0.0)
                    acc += fj * grid.weight(static_cast<std::size_t>(j)) * kernel_value(kernel, theta, r);
            }
            best = std::max(best, acc);
        }
        return best;
    }

    PotentialSpec::PotentialSpec(Grid2D grid, Field values) : grid_(std::move(grid)), V_(std::move(values))
    {
        if (V_.size() != static_cast<Eigen::Index>(grid_.size()))
            throw Error(ErrorCode::domain, "potential samples do not match the grid");
        if (!V_.allFinite())
            throw Error(ErrorCode::domain, "potential samples must be finite");
        const Eigen::Index n = V_.size();
        U_.resize(n);
        v_.resize(n);
        max_abs_ = V_.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < n; ++i)
        {
            U_[i] = V_[i] < 0.0 ? -1.0 : 1.0;
            v_[i] = std::sqrt(std::abs(V_[i]));
            const double w = grid_.weight(static_cast<std::size_t>(i));
            const double a = std::abs(V_[i]);
            l1_ += w * a;
            const Point p = grid_.node(static_cast<std::size_t>(i));
            const double lg = 1.0 + std::max(0.0, std::log(std::hypot(p.x, p.y)));
            for (int k = 2; k <= 4; ++k)
                weighted_[k - 2] += w * std::pow(lg, k) * a;
            if (a > 1e-14 * max_abs_ && a > 0.0)
                active_.push_back(static_cast<int>(i));
        }
    }

    double PotentialSpec::kato_half() const { return kato_type_sup(grid_, V_.cwiseAbs(), KatoKernel::inv_sqrt); }

    double PotentialSpec::kato_log() const { return kato_type_sup(grid_, V_.cwiseAbs(), KatoKernel::inv_sqrt_log); }

    PotentialSpec PotentialSpec::sample(const Profile& profile, Grid2D grid)
    {
        Field values(static_cast<Eigen::Index>(grid.size()));
        for (std::size_t i = 0; i < grid.size(); ++i)
            values[static_cast<Eigen::Index>(i)] = profile(grid.node(i));
        return PotentialSpec(std::move(grid), std::move(values));
    }

    double PotentialSpec::weighted_l1(int k) const
    {
        if (k < 2 || k > 4)
            throw Error(ErrorCode::domain, "weighted_l1 is tabulated for k in {2, 3, 4}");
        return weighted_[static_cast<std::size_t>(k - 2)];
    }

    PotentialSpec PotentialSpec::scaled(double factor) const { return PotentialSpec(grid_, factor * V_); }
} // namespace dispwave
