#include "dispwave/specfun.hpp"

#include "dispwave/errors.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>

namespace dispwave::specfun
{
    namespace
    {
        constexpr cplx I{0.0, 1.0};

        double j0_series(double x)
        {
            const double q = 0.25 * x * x;
            double term = 1.0, sum = 1.0;
            for (int k = 1; k < 200; ++k)
            {
                term *= -q / (double(k) * k);
                sum += term;
                if (std::abs(term) < 1e-18 * std::max(1.0, std::abs(sum)))
                    break;
            }
            return sum;
        }

        double y0_series(double x)
        {
            const double q = 0.25 * x * x;
            double term = 1.0, harmonic = 0.0, tail = 0.0;
            for (int k = 1; k < 200; ++k)
            {
                term *= -q / (double(k) * k);
                harmonic += 1.0 / k;
                const double add = -term * harmonic;
                tail += add;
                if (std::abs(add) < 1e-18 * std::max(1.0, std::abs(tail)))
                    break;
            }
            return (2.0 / pi) * ((std::log(0.5 * x) + euler_gamma) * j0_series(x) + tail);
        }

        struct MillerPair
        {
            double j0, y0;
        };

        MillerPair miller(double x)
        {
            int m = static_cast<int>(x + 20.0 + 10.0 * std::cbrt(x));
            m += m % 2;
            double jp = 0.0, j = 1e-30;
            double norm = 2.0 * j;
            double ysum = ((m / 2) % 2 ? -1.0 : 1.0) * j / (m / 2);
            for (int k = m; k >= 1; --k)
            {
                const double jm = (2.0 * k / x) * j - jp;
                jp = j;
                j = jm;
                const int idx = k - 1;
                if (idx > 0 && idx % 2 == 0)
                {
                    const int h = idx / 2;
                    norm += 2.0 * j;
                    ysum += (h % 2 ? -1.0 : 1.0) * j / h;
                }
                if (std::abs(j) > 1e250)
                {
                    j *= 1e-250;
                    jp *= 1e-250;
                    norm *= 1e-250;
                    ysum *= 1e-250;
                }
            }
            norm += j;
            const double j0 = j / norm;
            const double y0 = (2.0 / pi) * (std::log(0.5 * x) + euler_gamma) * j0 - (4.0 / pi) * ysum / norm;
            return {j0, y0};
        }

        // Integral of w(t) e^{i rho t} (t^2-1)^{-1/2} over [1, inf) with a smooth
        // window w equal to 1 below `cut` and 0 above 2 * cut.
        cplx windowed_hankel_integral(double rho, double cut, int n, QuadratureSpec::Scheme scheme)
        {
            cplx acc = 0.0;
            const double split = 1.25;
            if (scheme == QuadratureSpec::Scheme::tanh_sinh)
            {
                const double h = 3.0 / n;
                const double len = split - 1.0;
                for (int k = -8 * n; k <= 8 * n; ++k)
                {
                    const double s = k * h;
                    const double q = 0.5 * pi * std::sinh(s);
                    if (std::abs(q) > 350.0)
                        continue;
                    // 1 + x computed without cancellation near the singular end.
                    const double onep = 2.0 / (1.0 + std::exp(-2.0 * q));
                    const double dxds = 0.5 * pi * std::cosh(s) / (std::cosh(q) * std::cosh(q));
                    const double tm1 = 0.5 * len * onep;
                    if (tm1 <= 0.0)
                        continue;
                    const double t = 1.0 + tm1;
                    const double wgt = h * 0.5 * len * dxds;
                    acc += wgt * std::exp(I * (rho * t)) / std::sqrt(tm1 * (t + 1.0));
                }
            }
            else
            {
                // t = cosh u removes the endpoint singularity.
                const double umax = std::acosh(split);
                const int panels = std::max(1, static_cast<int>(std::ceil(rho * (split - 1.0) / 2.0)) + 1);
                const auto& g = gauss_legendre(n);
                const double du = umax / panels;
                for (int p = 0; p < panels; ++p)
                {
                    const double a = p * du;
                    for (int i = 0; i < n; ++i)
                    {
                        const double u = a + 0.5 * du * (g.nodes[i] + 1.0);
                        acc += 0.5 * du * g.weights[i] * std::exp(I * (rho * std::cosh(u)));
                    }
                }
            }
            const double width = std::min(1.0, 2.0 / rho);
            const double end = 2.0 * cut;
            const auto& g = gauss_legendre(n);
            for (double a = split; a < end; a += width)
            {
                const double b = std::min(end, a + width);
                for (int i = 0; i < n; ++i)
                {
                    const double t = a + 0.5 * (b - a) * (g.nodes[i] + 1.0);
                    const double w = 1.0 - smooth_step((t - cut) / cut);
                    if (w == 0.0)
                        continue;
                    acc += 0.5 * (b - a) * g.weights[i] * w * std::exp(I * (rho * t)) / std::sqrt(t * t - 1.0);
                }
            }
            return acc;
        }
    } // namespace

    void QuadratureSpec::validate() const
    {
        if (node_count < 8)
            throw Error(ErrorCode::domain, "quadrature node_count must be >= 8");
        if (!(truncation > 1.0))
            throw Error(ErrorCode::domain, "quadrature truncation must exceed 1");
    }

    double smooth_step(double s)
    {
        if (s <= 0.0)
            return 0.0;
        if (s >= 1.0)
            return 1.0;
        const double a = std::exp(-1.0 / s);
        const double b = std::exp(-1.0 / (1.0 - s));
        return a / (a + b);
    }

    cplx hankel1_asymptotic(cplx z)
    {
        cplx sum = 1.0, power = 1.0;
        double prev = std::numeric_limits<double>::infinity();
        double a = 1.0;
        for (int k = 1; k < 60; ++k)
        {
            a *= -double(2 * k - 1) * (2 * k - 1) / (8.0 * k);
            power *= I / z;
            const double mag = std::abs(a * power);
            if (mag > prev)
                break;
            sum += a * power;
            prev = mag;
            if (mag < 1e-17)
                break;
        }
        return std::sqrt(2.0 / (pi * z)) * std::exp(I * (z - 0.25 * pi)) * sum;
    }

    double bessel_j0(double x)
    {
        x = std::abs(x);
        if (!std::isfinite(x))
            throw Error(ErrorCode::domain, "bessel_j0 argument not finite");
        if (x <= 8.0)
            return j0_series(x);
        if (x <= 25.0)
            return miller(x).j0;
        return hankel1_asymptotic(x).real();
    }

    double bessel_y0(double x)
    {
        if (!(x > 0.0) || !std::isfinite(x))
            throw Error(ErrorCode::domain, "bessel_y0 requires finite x > 0");
        if (x <= 8.0)
            return y0_series(x);
        if (x <= 25.0)
            return miller(x).y0;
        return hankel1_asymptotic(x).imag();
    }

    cplx hankel0(HankelBranch branch, double rho)
    {
        if (!(rho > 0.0))
            throw Error(ErrorCode::domain, "hankel0 requires rho > 0");
        double j, y;
        if (rho <= 8.0)
        {
            j = j0_series(rho);
            y = y0_series(rho);
        }
        else if (rho <= 25.0)
        {
            const auto p = miller(rho);
            j = p.j0;
            y = p.y0;
        }
        else
        {
            const cplx h = hankel1_asymptotic(rho);
            j = h.real();
            y = h.imag();
        }
        return branch == HankelBranch::plus ? cplx{j, y} : cplx{-j, y};
    }

    cplx hankel_ft_check(HankelBranch branch, double rho, const QuadratureSpec& quad)
    {
        quad.validate();
        if (!(rho > 0.0))
            throw Error(ErrorCode::domain, "hankel_ft_check requires rho > 0");
        const cplx coarse = windowed_hankel_integral(rho, quad.truncation, quad.node_count, quad.scheme);
        const cplx fine = windowed_hankel_integral(rho, 2.0 * quad.truncation, quad.node_count + 8, quad.scheme);
        const cplx pref = 2.0 / (I * pi);
        if (std::abs(pref * (fine - coarse)) > 1e-4)
            throw Error(ErrorCode::accuracy, "hankel_ft_check did not converge under refinement");
        // The mirror integral over (-inf, -1] is the conjugate of the forward one.
        return branch == HankelBranch::plus ? pref * fine : pref * std::conj(fine);
    }

    SiCi sine_cosine_integrals(double x)
    {
        if (!(x > 0.0))
            throw Error(ErrorCode::domain, "sine_cosine_integrals requires x > 0");
        constexpr double eps = 1e-16;
        constexpr double fpmin = 1e-300;
        if (x > 2.0)
        {
            cplx b{1.0, x};
            cplx c = 1.0 / fpmin;
            cplx d = 1.0 / b;
            cplx h = d;
            for (int i = 2; i < 100000; ++i)
            {
                const double a = -double(i - 1) * (i - 1);
                b += 2.0;
                d = 1.0 / (a * d + b);
                c = b + a / c;
                const cplx del = c * d;
                h *= del;
                if (std::abs(del.real() - 1.0) + std::abs(del.imag()) < eps)
                    break;
            }
            h *= cplx{std::cos(x), -std::sin(x)};
            const cplx cs = -std::conj(h) + cplx{0.0, 0.5 * pi};
            return {cs.imag(), cs.real()};
        }
        double sum = 0.0, sums = 0.0, sumc = 0.0, sign = 1.0, fact = 1.0;
        bool odd = true;
        for (int k = 1; k < 200; ++k)
        {
            fact *= x / k;
            const double term = fact / k;
            sum += sign * term;
            const double err = term / std::abs(sum);
            if (odd)
            {
                sign = -sign;
                sums = sum;
                sum = sumc;
            }
            else
            {
                sumc = sum;
                sum = sums;
            }
            if (err < eps)
                break;
            odd = !odd;
        }
        return {sums, sumc + std::log(x) + euler_gamma};
    }

    const GaussRule& gauss_legendre(int n)
    {
        if (n < 1)
            throw Error(ErrorCode::domain, "gauss_legendre requires n >= 1");
        static std::mutex mutex;
        static std::map<int, std::unique_ptr<GaussRule>> cache;
        std::lock_guard lock(mutex);
        auto& slot = cache[n];
        if (slot)
            return *slot;
        auto rule = std::make_unique<GaussRule>();
        rule->nodes.resize(n);
        rule->weights.resize(n);
        for (int i = 0; i < (n + 1) / 2; ++i)
        {
            double z = std::cos(pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it)
            {
                double p0 = 1.0, p1 = 0.0;
                for (int k = 1; k <= n; ++k)
                {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
                }
                dp = n * (z * p0 - p1) / (z * z - 1.0);
                const double dz = p0 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16)
                    break;
            }
            rule->nodes[i] = -z;
            rule->nodes[n - 1 - i] = z;
            const double w = 2.0 / ((1.0 - z * z) * dp * dp);
            rule->weights[i] = w;
            rule->weights[n - 1 - i] = w;
        }
        slot = std::move(rule);
        return *slot;
    }

    void append_gauss_panel(double a, double b, int n, std::vector<double>& x, std::vector<double>& w)
    {
        const auto& g = gauss_legendre(n);
        const double half = 0.5 * (b - a);
        for (int i = 0; i < n; ++i)
        {
            x.push_back(a + half * (g.nodes[i] + 1.0));
            w.push_back(half * g.weights[i]);
        }
    }
} // namespace dispwave::specfun
