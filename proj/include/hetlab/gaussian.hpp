#pragma once

// Gaussian densities/CDFs and the quadrature helpers used by the closed-form
// exit-law predictions: adaptive Simpson, Gauss-Hermite nodes, and the
// truncated-power Gaussian moments E((z - N)_+)^p.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hetlab/errors.hpp"

namespace hetlab {

inline constexpr double kPi = 3.14159265358979323846;

// Centered Gaussian density with variance c.
inline double gauss_density(double x, double c) {
    return std::exp(-x * x / (2.0 * c)) / std::sqrt(2.0 * kPi * c);
}

// psi_c(x) = P{N(0,c) <= x}, evaluated through erfc for stable tails.
inline double gauss_cdf(double x, double c) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0 * c));
}

struct GaussianLaw {
    double variance = 1.0;
    double density(double x) const { return gauss_density(x, variance); }
    double cdf(double x) const { return gauss_cdf(x, variance); }
};

namespace quad {

namespace detail {
inline double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive(const std::function<double(double)>& f, double a, double m, double b,
                       double fa, double fm, double fb, double whole, double tol, int depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(a, m, fa, flm, fm);
    double right = simpson(m, b, fm, frm, fb);
    double delta = left + right - whole;
    if (depth <= 0) throw QuadratureError("adaptive Simpson: max recursion depth reached");
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

// Adaptive Simpson on [a, b] with absolute tolerance.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double abs_tol, int max_depth = 50) {
    if (!(b > a)) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    double whole = detail::simpson(a, b, fa, fm, fb);
    return detail::adaptive(f, a, m, b, fa, fm, fb, whole, abs_tol, max_depth);
}

// Integrates f to a relative tolerance by a first pass estimating the scale.
inline double adaptive_simpson_rel(const std::function<double(double)>& f, double a, double b,
                                   double rel_tol, int max_depth = 50) {
    double rough = adaptive_simpson(f, a, b, 1e-8, max_depth);
    double scale = std::max(std::abs(rough), 1e-12);
    return adaptive_simpson(f, a, b, rel_tol * scale, max_depth);
}

// Gauss-Hermite nodes/weights for int e^{-t^2} f(t) dt = sum w_i f(t_i),
// via Newton iteration on the physicists' Hermite polynomials.
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussHermite(int n) {
        nodes.resize(static_cast<size_t>(n));
        weights.resize(static_cast<size_t>(n));
        const int m = (n + 1) / 2;
        double z = 0.0;
        for (int i = 0; i < m; ++i) {
            if (i == 0)
                z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
            else if (i == 1)
                z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
            else if (i == 2)
                z = 1.86 * z - 0.86 * nodes[0];
            else if (i == 3)
                z = 1.91 * z - 0.91 * nodes[1];
            else
                z = 2.0 * z - nodes[static_cast<size_t>(i - 2)];
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p1 = 0.7511255444649425;  // pi^{-1/4}
                double p2 = 0.0;
                for (int j = 1; j <= n; ++j) {
                    double p3 = p2;
                    p2 = p1;
                    p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
                }
                pp = std::sqrt(2.0 * n) * p2;
                double dz = p1 / pp;
                z -= dz;
                if (std::abs(dz) < 1e-15) break;
            }
            nodes[static_cast<size_t>(i)] = z;
            nodes[static_cast<size_t>(n - 1 - i)] = -z;
            weights[static_cast<size_t>(i)] = 2.0 / (pp * pp);
            weights[static_cast<size_t>(n - 1 - i)] = weights[static_cast<size_t>(i)];
        }
        // reorder ascending
        std::vector<double> nn(nodes.rbegin(), nodes.rend());
        std::vector<double> ww(weights.rbegin(), weights.rend());
        nodes = nn;
        weights = ww;
    }

    // E f(N) over N ~ N(0, c)
    double expect(const std::function<double(double)>& f, double c) const {
        const double scale = std::sqrt(2.0 * c);
        double acc = 0.0;
        for (size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(scale * nodes[i]);
        return acc / std::sqrt(kPi);
    }
};

inline const GaussHermite& gh64() {
    static const GaussHermite gh(64);
    return gh;
}

}  // namespace quad

// E((z - N)_+)^p over N ~ N(0, c2), as the split integral
// int_0^inf u^p g_{c2}(z - u) du, accurate through the kink at u = 0.
inline double truncated_power_gaussian_moment(double z, double p, double c2,
                                              double abs_tol = 1e-12) {
    if (!(p > 0.0)) throw DomainError("truncated power moment: p must be > 0");
    const double sd = std::sqrt(c2);
    const double hi = z + 12.0 * sd;
    if (hi <= 0.0) {
        // whole mass beyond 12 sigma; bounded by the tail, effectively zero
        return 0.0;
    }
    auto f = [&](double u) { return std::pow(u, p) * gauss_density(z - u, c2); };
    double peak = std::max(std::abs(z), sd);
    double tol = std::max(abs_tol, 1e-14 * std::pow(peak + sd, p));
    return quad::adaptive_simpson(f, 0.0, hi, tol);
}

}  // namespace hetlab
