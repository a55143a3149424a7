#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace dispwave
{
    struct Point
    {
        double x = 0.0;
        double y = 0.0;
    };

    inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

    /// Node (i, j) sits at (x0 + i*h, y0 + j*h) and has flat index j*nx + i.
    struct UniformLayout
    {
        int nx = 0;
        int ny = 0;
        double x0 = 0.0;
        double y0 = 0.0;
        double h = 0.0;

        int index(int i, int j) const { return j * nx + i; }
    };

    using Field = Eigen::VectorXd;
    using ComplexField = Eigen::VectorXcd;

    /// Quadrature nodes with positive cell weights. Immutable once built.
    class Grid2D
    {
    public:
        Grid2D(std::vector<Point> nodes, std::vector<double> weights, double cell_width,
               std::optional<UniformLayout> layout = std::nullopt);

        std::span<const Point> nodes() const { return nodes_; }
        std::span<const double> weights() const { return weights_; }
        const Point& node(std::size_t i) const { return nodes_[i]; }
        double weight(std::size_t i) const { return weights_[i]; }
        std::size_t size() const { return nodes_.size(); }
        double cell_width() const { return cell_width_; }
        double bounding_radius() const { return bounding_radius_; }
        double total_weight() const;
        const std::optional<UniformLayout>& layout() const { return layout_; }
        bool uniform() const { return layout_.has_value(); }

        /// Requires a uniform layout; throws domain error otherwise.
        const UniformLayout& require_layout() const;

    private:
        std::vector<Point> nodes_;
        std::vector<double> weights_;
        double cell_width_;
        double bounding_radius_;
        std::optional<UniformLayout> layout_;
    };

    /// Uniform n x n cell-centred grid on [-half_width, half_width]^2.
    Grid2D make_grid(double half_width, int n_per_side);

    /// Uniform n x n cell-centred grid on the square of the given half width around `center`.
    Grid2D make_grid(Point center, double half_width, int n_per_side);

    /// Scattered observation points; each carries weight cell_width^2.
    Grid2D make_point_grid(std::vector<Point> points, double cell_width);

    /// Weighted inner product sum_i w_i f_i g_i.
    double weighted_dot(const Grid2D& grid, const Field& f, const Field& g);
    double weighted_l2(const Grid2D& grid, const Field& f);

    /// Tensor Lagrange interpolation of a field sampled on a uniform grid; the
    /// field is taken to vanish outside the grid.
    class GridInterpolator
    {
    public:
        static constexpr int stencil = 8;

        GridInterpolator(const Grid2D& grid, const Field& values);

        double operator()(Point p) const;

        /// Largest distance from a sample point to a node it can read.
        double reach() const { return (stencil / 2) * layout_.h * std::sqrt(2.0); }

    private:
        UniformLayout layout_;
        Field values_;
    };
} // namespace dispwave
