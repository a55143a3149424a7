#include "dispwave/wavefield.hpp"

#include "dispwave/errors.hpp"

#include <algorithm>
#include <cmath>

namespace dispwave
{
    WaveField::WaveField(Grid2D obs, std::vector<double> times, Eigen::MatrixXd values)
        : obs_(std::move(obs)), times_(std::move(times)), values_(std::move(values))
    {
        if (values_.rows() != static_cast<Eigen::Index>(obs_.size()) ||
            values_.cols() != static_cast<Eigen::Index>(times_.size()))
            throw Error(ErrorCode::domain, "wave field shape does not match its grid and times");
        for (std::size_t k = 1; k < times_.size(); ++k)
            if (!(times_[k] > times_[k - 1]))
                throw Error(ErrorCode::domain, "wave field times must be strictly increasing");
        if (!values_.allFinite())
            throw Error(ErrorCode::domain, "wave field values must be finite");
    }

    std::size_t WaveField::index_of(double t, double tol) const
    {
        const auto it = std::lower_bound(times_.begin(), times_.end(), t - tol);
        if (it == times_.end() || std::abs(*it - t) > tol)
            throw Error(ErrorCode::configuration, "no sample at t = " + std::to_string(t));
        return static_cast<std::size_t>(it - times_.begin());
    }

    Field WaveField::sample(double t) const
    {
        if (times_.empty() || t < times_.front() || t > times_.back())
            return Field::Zero(values_.rows());
        const auto it = std::upper_bound(times_.begin(), times_.end(), t);
        if (it == times_.end())
            return at(times_.size() - 1);
        const auto k = static_cast<std::size_t>(it - times_.begin());
        const double a = (t - times_[k - 1]) / (times_[k] - times_[k - 1]);
        return (1.0 - a) * at(k - 1) + a * at(k);
    }

    double WaveField::uniform_step() const
    {
        if (times_.size() < 2)
            throw Error(ErrorCode::configuration, "a single time sample has no step");
        const double dt = (times_.back() - times_.front()) / static_cast<double>(times_.size() - 1);
        for (std::size_t k = 1; k < times_.size(); ++k)
            if (std::abs(times_[k] - times_[k - 1] - dt) > 1e-9 * std::max(1.0, dt))
                throw Error(ErrorCode::configuration, "time samples are not uniformly spaced");
        return dt;
    }

    WaveField separable_field(const Grid2D& obs, const Field& g, const std::vector<double>& times,
                              const std::vector<double>& h)
    {
        if (times.size() != h.size())
            throw Error(ErrorCode::domain, "time profile does not match the times");
        Eigen::MatrixXd values(g.size(), static_cast<Eigen::Index>(times.size()));
        for (std::size_t k = 0; k < times.size(); ++k)
            values.col(static_cast<Eigen::Index>(k)) = h[k] * g;
        return WaveField(obs, times, std::move(values));
    }
} // namespace dispwave
