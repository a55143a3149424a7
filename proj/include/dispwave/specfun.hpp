#pragma once

#include <complex>
#include <vector>

namespace dispwave::specfun
{
    using cplx = std::complex<double>;

    inline constexpr double pi = 3.14159265358979323846264338327950288;
    /// Euler–Mascheroni constant, 20 significant digits.
    inline constexpr double euler_gamma = 0.57721566490153286061;

    enum class HankelBranch
    {
        plus,
        minus
    };

    struct QuadratureSpec
    {
        enum class Scheme
        {
            gauss_legendre_panels,
            tanh_sinh
        };

        int node_count = 16;
        double truncation = 400.0;
        Scheme scheme = Scheme::gauss_legendre_panels;

        void validate() const;
    };

    /// Bessel function of the first kind, order 0. Power series for x <= 8,
    /// Miller backward recurrence on (8, 25], Hankel asymptotics beyond.
    double bessel_j0(double x);

    /// Bessel function of the second kind, order 0, x > 0.
    double bessel_y0(double x);

    /// H0^+(rho) = J0 + iY0 and H0^-(rho) = -J0 + iY0.
    cplx hankel0(HankelBranch branch, double rho);

    /// Evaluates H0^+(rho) = (2/(i pi)) int_1^inf (t^2-1)^(-1/2) e^{i rho t} dt
    /// (and its mirror over (-inf,-1] for the minus branch) by windowed
    /// quadrature. Meant as an oracle for hankel0.
    cplx hankel_ft_check(HankelBranch branch, double rho, const QuadratureSpec& quad = {});

    /// Large-|z| Hankel expansion of H0^(1)(z) for complex z with Re z > 0.
    cplx hankel1_asymptotic(cplx z);

    /// Sine and cosine integrals Si(x), Ci(x) for x > 0.
    struct SiCi
    {
        double si;
        double ci;
    };
    SiCi sine_cosine_integrals(double x);

    /// Gauss–Legendre rule on [-1, 1]. Rules are cached; safe for concurrent use.
    struct GaussRule
    {
        std::vector<double> nodes;
        std::vector<double> weights;
    };
    const GaussRule& gauss_legendre(int n);

    /// Appends the n-point Gauss rule mapped to [a, b].
    void append_gauss_panel(double a, double b, int n, std::vector<double>& x, std::vector<double>& w);

    /// C-infinity step: 0 for s <= 0, 1 for s >= 1.
    double smooth_step(double s);
} // namespace dispwave::specfun
