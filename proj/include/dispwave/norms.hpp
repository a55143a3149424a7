#pragma once

#include "dispwave/grid.hpp"
#include "dispwave/potential.hpp"
#include "dispwave/wavefield.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dispwave
{
    class PropagatorBank;

    /// Lebesgue exponent in [1, inf] with an exact infinity.
    class Exponent
    {
    public:
        explicit Exponent(double value);
        static Exponent infinity();

        bool infinite() const { return infinite_; }
        /// Throws domain for the infinite exponent.
        double value() const;
        /// 1 / p, zero for infinity.
        double inverse() const { return infinite_ ? 0.0 : 1.0 / value_; }
        std::string to_string() const;

    private:
        Exponent() = default;
        double value_ = 1.0;
        bool infinite_ = false;
    };

    struct ExponentTuple
    {
        Exponent q1, r1, q2, r2;
        std::optional<double> s;
    };

    /// (sum_i w_i (sum_j dt |f_ij|^r)^{q/r})^{1/q} with sup for infinite exponents.
    /// A single time sample carries dt = 1.
    double reversed_norm(const WaveField& field, Exponent q, Exponent r);
    double reversed_norm(const Grid2D& grid, const Eigen::MatrixXd& values, double dt, Exponent q, Exponent r);

    /// sup_y sum_x w |f| log_-^theta |x - y| over nodes and midpoints.
    double kato_norm(const Grid2D& grid, const Field& f, double theta);

    struct KatoTildeNorms
    {
        double half = 0.0;   ///< sup_y int_{|x-y|<=1} |V| / |x-y|^{1/2}
        double log = 0.0;    ///< sup_y int_{|x-y|<=1} |V| log_- |x-y| / |x-y|^{1/2}
    };
    KatoTildeNorms kato_tilde_norms(const PotentialSpec& pot);

    /// sup_i |f_i| / (1 + log_+ |x_i|)^k
    double weighted_sup(const Grid2D& grid, const Field& f, double k);

    struct DecayFit
    {
        double slope = 0.0;
        double intercept = 0.0;
        double r_squared = 0.0;
        std::pair<double, double> window;
        int samples = 0;
    };

    /// Least-squares line through (log t, log value) for t in [t_min, t_max].
    /// Needs at least 6 samples in the window; a non-positive sample there is a domain error.
    DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& values, double t_min, double t_max);

    /// Entrywise trapezoid integral of |S(t)(x, y)| over [t_a, t_b] from the
    /// banked samples; the window ends must be bank times.
    Eigen::MatrixXd kernel_time_integral(const PropagatorBank& bank, double t_a, double t_b);

    /// Closed rectangle [0, 1/8] x [0, 1/2] in (1/q, 1/r).
    bool admissible_reversed(double q_inv, double r_inv);
    /// Closed triangle with vertices (1/2, 0), (1/8, 1/8), (0, 0) without the origin.
    bool admissible_direct(double q_inv, double r_inv);

    struct Admissibility
    {
        bool admissible = false;
        std::string reason;               ///< "scaling", "r-gap" or empty
        std::vector<std::string> flags;   ///< endpoint cases stated in Lorentz spaces
    };

    /// 2/q1 + 1/r1 + 2 = 2/q2 + 1/r2 within 1e-12 and 0 < 1/r2 - 1/r1 <= 1/2.
    Admissibility admissible_theorem11(const ExponentTuple& tuple);

    /// Range of the gap 1/r2 - 1/r1 allowed for the fractional kernel of order s in (1/4, 1).
    bool admissible_lemma15(double s, double r1_inv, double r2_inv);

    struct StrichartzOptions
    {
        double half_width = 5.5;
        int n_per_side = 440;
        double dt_factor = 0.5;
        double duration = 1.0;   ///< forcing active on [0, duration / mu]
        double window = 2.0;     ///< output on [0, window / mu]
        int samples = 80;        ///< stored times per run
        std::vector<double> mu{0.5, 1.0, 2.0};
    };

    struct StrichartzEntry
    {
        std::string forcing;
        std::vector<double> ratios;   ///< X(mu) for each mu
        double exponent = 0.0;        ///< fitted slope of log X against log mu
    };

    struct StrichartzReport
    {
        Admissibility admissibility;
        std::vector<StrichartzEntry> entries;
        double max_ratio = 0.0;
        double exponent_measured = 0.0;    ///< entry exponent farthest from the prediction
        double exponent_predicted = 0.0;   ///< 2/q2 + 1/r2 - 2/q1 - 1/r1 - 2
        double exponent_scale = 0.0;       ///< 2/q2 + 1/r2, the scaling degree of the forcing norm
    };

    /// ||u||_{L^q1_x L^r1_t} / ||F||_{L^q2_x L^r2_t}, defined as 0 for F = 0.
    double strichartz_ratio(const WaveField& u, const WaveField& F, const ExponentTuple& tuple);

    /// X = ||Duhamel F||_{L^q1_x L^r1_t} / ||F||_{L^q2_x L^r2_t} over three
    /// spatial shapes times two time profiles, each rescaled as F(mu x, mu t);
    /// the Duhamel term comes from the leapfrog solver with V sampled on its grid.
    /// Throws configuration for an inadmissible tuple.
    StrichartzReport strichartz_ratio_check(const Profile& potential, const ExponentTuple& tuple,
                                            const StrichartzOptions& options = {});
} // namespace dispwave
