#include "dispwave/grid.hpp"

#include "dispwave/errors.hpp"

#include <array>
#include <cmath>
#include <numeric>

namespace dispwave
{
    namespace
    {
        constexpr int max_per_side = 4096;
    }

    Grid2D::Grid2D(std::vector<Point> nodes, std::vector<double> weights, double cell_width,
                   std::optional<UniformLayout> layout)
        : nodes_(std::move(nodes)), weights_(std::move(weights)), cell_width_(cell_width), bounding_radius_(0.0),
          layout_(layout)
    {
        if (nodes_.size() != weights_.size())
            throw Error(ErrorCode::domain, "grid nodes and weights differ in length");
        if (nodes_.empty())
            throw Error(ErrorCode::domain, "grid is empty");
        if (!(cell_width_ > 0.0))
            throw Error(ErrorCode::domain, "grid cell width must be positive");
        for (double w : weights_)
            if (!(w > 0.0))
                throw Error(ErrorCode::domain, "grid weights must be positive");
        for (const auto& p : nodes_)
            bounding_radius_ = std::max(bounding_radius_, std::hypot(p.x, p.y));
        bounding_radius_ += 0.5 * std::sqrt(2.0) * cell_width_;
    }

    double Grid2D::total_weight() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

    const UniformLayout& Grid2D::require_layout() const
    {
        if (!layout_)
            throw Error(ErrorCode::domain, "operation requires a uniform grid");
        return *layout_;
    }

    Grid2D make_grid(Point center, double half_width, int n)
    {
        if (!(half_width > 0.0) || n < 1)
            throw Error(ErrorCode::domain, "make_grid requires positive half width and size");
        if (n > max_per_side)
            throw Error(ErrorCode::capacity, "make_grid: " + std::to_string(n) + " nodes per side exceeds budget");
        const double h = 2.0 * half_width / n;
        UniformLayout layout{n, n, center.x - half_width + 0.5 * h, center.y - half_width + 0.5 * h, h};
        std::vector<Point> nodes;
        nodes.reserve(std::size_t(n) * n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                nodes.push_back({layout.x0 + i * h, layout.y0 + j * h});
        std::vector<double> weights(nodes.size(), h * h);
        return Grid2D(std::move(nodes), std::move(weights), h, layout);
    }

    Grid2D make_grid(double half_width, int n_per_side)
    {
        if (n_per_side < 8)
            throw Error(ErrorCode::domain, "make_grid requires at least 8 nodes per side");
        return make_grid(Point{0.0, 0.0}, half_width, n_per_side);
    }

    Grid2D make_point_grid(std::vector<Point> points, double cell_width)
    {
        std::vector<double> weights(points.size(), cell_width * cell_width);
        return Grid2D(std::move(points), std::move(weights), cell_width);
    }

    double weighted_dot(const Grid2D& grid, const Field& f, const Field& g)
    {
        double s = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            s += grid.weight(i) * f[i] * g[i];
        return s;
    }

    double weighted_l2(const Grid2D& grid, const Field& f) { return std::sqrt(weighted_dot(grid, f, f)); }

    GridInterpolator::GridInterpolator(const Grid2D& grid, const Field& values)
        : layout_(grid.require_layout()), values_(values)
    {
        if (values_.size() != static_cast<Eigen::Index>(grid.size()))
            throw Error(ErrorCode::domain, "interpolated field does not match its grid");
    }

    double GridInterpolator::operator()(Point p) const
    {
        constexpr int half = stencil / 2;
        const double u = (p.x - layout_.x0) / layout_.h;
        const double v = (p.y - layout_.y0) / layout_.h;
        const int iu = static_cast<int>(std::floor(u)) - (half - 1);
        const int iv = static_cast<int>(std::floor(v)) - (half - 1);
        if (iu + stencil <= 0 || iv + stencil <= 0 || iu >= layout_.nx || iv >= layout_.ny)
            return 0.0;

        static const std::array<double, stencil> bary = [] {
            std::array<double, stencil> c{};
            for (int k = 0; k < stencil; ++k)
            {
                double den = 1.0;
                for (int m = 0; m < stencil; ++m)
                    if (m != k)
                        den *= double(k - m);
                c[k] = 1.0 / den;
            }
            return c;
        }();
        auto lagrange = [](double s, int base, std::array<double, stencil>& w) {
            // Node k sits at base + k.
            const double off = s - base;
            double prod = 1.0;
            for (int k = 0; k < stencil; ++k)
            {
                const double d = off - k;
                if (d == 0.0)
                {
                    w.fill(0.0);
                    w[k] = 1.0;
                    return;
                }
                prod *= d;
            }
            for (int k = 0; k < stencil; ++k)
                w[k] = prod * bary[k] / (off - k);
        };
        std::array<double, stencil> wu{}, wv{};
        lagrange(u, iu, wu);
        lagrange(v, iv, wv);

        double acc = 0.0;
        for (int b = 0; b < stencil; ++b)
        {
            const int j = iv + b;
            if (j < 0 || j >= layout_.ny)
                continue;
            double row = 0.0;
            for (int a = 0; a < stencil; ++a)
            {
                const int i = iu + a;
                if (i < 0 || i >= layout_.nx)
                    continue;
                row += wu[a] * values_[layout_.index(i, j)];
            }
            acc += wv[b] * row;
        }
        return acc;
    }
} // namespace dispwave
