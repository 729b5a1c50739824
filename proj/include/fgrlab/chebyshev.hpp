// chebyshev.hpp: Chebyshev expansion of exp(-iHt) for Hermitian operators given as matvecs
//
//   exp(-i x tau) = J_0(tau) + 2 sum_{n>=1} (-i)^n J_n(tau) T_n(x),   x in [-1, 1],
//
// applied to H~ = (H - b)/a with the spectrum of H inside [b - a, b + a]. The
// series converges once n exceeds a*t, so every output time is exact to
// rounding after ~a*t + O((a*t)^(1/3)) terms.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "fgrlab/errors.hpp"

namespace fgrlab::chebyshev {

using cplx = std::complex<double>;

struct Interval {
    double lower{-1.0};
    double upper{1.0};

    double center() const { return 0.5 * (lower + upper); }
    // Padded so that the endpoints map strictly inside [-1, 1].
    double half_width() const { return 0.5 * (upper - lower) * (1.0 + 1e-9) + 1e-300; }
};

// Order beyond which |J_n(x)| is below double precision for all n.
inline std::size_t required_order(double x) {
    x = std::abs(x);
    return static_cast<std::size_t>(std::ceil(x + 9.0 * std::cbrt(x) + 30.0));
}

// J_0(x) ... J_{n_max}(x) by Miller's backward recurrence normalised with
// J_0 + 2 sum_k J_2k = 1.
inline std::vector<double> bessel_j_sequence(double x, std::size_t n_max) {
    std::vector<double> out(n_max + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }
    const double ax = std::abs(x);
    const double top = std::max(static_cast<double>(n_max), ax);
    auto start = static_cast<std::size_t>(top + 20.0 + 10.0 * std::cbrt(std::max(ax, 1.0)) +
                                          std::sqrt(40.0 * top));
    start += start % 2;
    std::vector<double> work(start + 2, 0.0);
    work[start + 1] = 0.0;
    work[start] = 1e-300;
    double norm = 0.0;
    for (std::size_t n = start; n >= 1; --n) {
        work[n - 1] = (2.0 * static_cast<double>(n) / ax) * work[n] - work[n + 1];
        if (std::abs(work[n - 1]) > 1e250) {
            for (std::size_t k = n - 1; k <= start; ++k) work[k] *= 1e-250;
            norm *= 1e-250;
        }
        if (n % 2 == 0) norm += 2.0 * work[n];
    }
    norm += work[0];
    for (std::size_t n = 0; n <= n_max; ++n) {
        out[n] = work[n] / norm;
        // J_n(-x) = (-1)^n J_n(x)
        if (x < 0.0 && n % 2 == 1) out[n] = -out[n];
    }
    return out;
}

// mu_n = <psi|T_n(H~)|psi> for n < count, using the doubling relations
// mu_2n = 2<phi_n|phi_n> - mu_0, mu_2n+1 = 2<phi_n+1|phi_n> - mu_1 (real H, real psi).
// apply(x, y) must set y = H x.
template <typename Apply>
std::vector<double> survival_moments(Apply&& apply, const Eigen::VectorXd& psi0, const Interval& iv,
                                     std::size_t count) {
    const double a = iv.half_width(), b = iv.center();
    std::vector<double> mu(std::max<std::size_t>(count, 2), 0.0);
    Eigen::VectorXd prev = psi0, cur(psi0.size()), next(psi0.size());
    auto scaled = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
        apply(x, y);
        y = (y - b * x) / a;
    };
    mu[0] = prev.squaredNorm();
    scaled(prev, cur);
    mu[1] = prev.dot(cur);
    for (std::size_t n = 1; 2 * n < mu.size(); ++n) {
        mu[2 * n] = 2.0 * cur.squaredNorm() - mu[0];
        if (2 * n + 1 >= mu.size()) break;
        scaled(cur, next);
        next = 2.0 * next - prev;
        mu[2 * n + 1] = 2.0 * next.dot(cur) - mu[1];
        std::swap(prev, cur);
        std::swap(cur, next);
    }
    mu.resize(count);
    return mu;
}

inline std::size_t moments_needed(const Interval& iv, std::span<const double> times) {
    double tmax = 0.0;
    for (double t : times) tmax = std::max(tmax, std::abs(t));
    const double x = iv.half_width() * tmax;
    if (x > 5e7) throw NumericalError("chebyshev: a*t_max too large for expansion");
    return required_order(x) + 1;
}

// <psi|exp(-iHt)|psi> at each time from the moments.
inline std::vector<cplx> amplitude_from_moments(std::span<const double> mu, const Interval& iv,
                                                std::span<const double> times) {
    const double a = iv.half_width(), b = iv.center();
    std::vector<cplx> out(times.size());
    static const cplx powers[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};  // (-i)^n
    for (std::size_t j = 0; j < times.size(); ++j) {
        const double x = a * times[j];
        const std::size_t n_max = std::min(mu.size() - 1, required_order(x));
        const auto J = bessel_j_sequence(x, n_max);
        cplx s = J[0] * mu[0];
        for (std::size_t n = 1; n <= n_max; ++n) s += 2.0 * J[n] * mu[n] * powers[n % 4];
        out[j] = std::polar(1.0, -b * times[j]) * s;
    }
    return out;
}

// Full states psi(t_j) = exp(-iH t_j) psi0 for every requested time.
// apply(x, y) must set y = H x for complex vectors.
template <typename Apply>
std::vector<Eigen::VectorXcd> evolve(Apply&& apply, const Eigen::VectorXcd& psi0, const Interval& iv,
                                     std::span<const double> times) {
    const double a = iv.half_width(), b = iv.center();
    const std::size_t count = moments_needed(iv, times);
    static const cplx powers[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
    std::vector<std::vector<double>> J(times.size());
    std::vector<std::size_t> nmax(times.size());
    std::vector<cplx> phase(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) {
        nmax[j] = std::min(count - 1, required_order(a * times[j]));
        J[j] = bessel_j_sequence(a * times[j], nmax[j]);
        phase[j] = std::polar(1.0, -b * times[j]);
    }
    std::vector<Eigen::VectorXcd> out(times.size(), Eigen::VectorXcd::Zero(psi0.size()));
    Eigen::VectorXcd prev = psi0, cur(psi0.size()), next(psi0.size());
    auto scaled = [&](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
        apply(x, y);
        y = (y - b * x) / a;
    };
    for (std::size_t j = 0; j < times.size(); ++j) out[j] = (phase[j] * J[j][0]) * prev;
    if (count < 2) return out;
    scaled(prev, cur);
    for (std::size_t n = 1; n < count; ++n) {
        for (std::size_t j = 0; j < times.size(); ++j)
            if (n <= nmax[j]) out[j] += (phase[j] * (2.0 * J[j][n]) * powers[n % 4]) * cur;
        if (n + 1 >= count) break;
        scaled(cur, next);
        next = 2.0 * next - prev;
        std::swap(prev, cur);
        std::swap(cur, next);
    }
    return out;
}

} // namespace fgrlab::chebyshev
