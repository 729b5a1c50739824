// fitting.hpp: Least-squares fits for decay rates, relaxation curves and phase drifts

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "fgrlab/errors.hpp"

namespace fgrlab::fit {

struct LinearFit {
    double slope{0.0};
    double intercept{0.0};
    double rms_residual{0.0};
    double slope_stderr{0.0};
    std::size_t points{0};
};

inline LinearFit least_squares_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("least_squares_line: size mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("least_squares_line: need at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("least_squares_line: abscissae are all equal");
    LinearFit f;
    f.points = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        rss += r * r;
    }
    f.rms_residual = std::sqrt(rss / static_cast<double>(n));
    f.slope_stderr = n > 2 ? std::sqrt(rss / static_cast<double>(n - 2) / sxx) : 0.0;
    return f;
}

struct DecayFit {
    double rate{0.0};
    double log_amplitude{0.0};
    double residual{0.0};  // RMS residual of ln P
    double rate_stderr{0.0};
    std::size_t points{0};
};

// Fits ln P(t) = c - rate * t on the samples with t0 <= t <= t1.
inline DecayFit fit_decay(std::span<const double> t, std::span<const double> p, double t0, double t1) {
    if (t.size() != p.size()) throw std::invalid_argument("fit_decay: size mismatch");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0 || t[i] > t1) continue;
        if (!(p[i] > 0.0))
            throw std::domain_error("fit_decay: non-positive population at t = " + std::to_string(t[i]));
        xs.push_back(t[i]);
        ys.push_back(std::log(p[i]));
    }
    if (xs.size() < 2)
        throw std::invalid_argument("fit_decay: fewer than two samples in window [" + std::to_string(t0) +
                                    ", " + std::to_string(t1) + "]");
    const LinearFit lf = least_squares_line(xs, ys);
    return {-lf.slope, lf.intercept, lf.rms_residual, lf.slope_stderr, lf.points};
}

// P(t) = P_inf + A exp(-Gamma t): the two-state rate equation with
// dP/dt = -down P + up (1 - P), so Gamma = down + up and P_inf = up / Gamma.
struct RelaxationFit {
    double total_rate{0.0};
    double equilibrium{0.0};
    double amplitude{0.0};
    double down_rate{0.0};
    double up_rate{0.0};
    double total_rate_stderr{0.0};
    double equilibrium_stderr{0.0};
    double down_rate_stderr{0.0};
    double rms_residual{0.0};
    std::size_t points{0};
};

inline RelaxationFit fit_relaxation(std::span<const double> t, std::span<const double> p, double t0,
                                    double t1) {
    if (t.size() != p.size()) throw std::invalid_argument("fit_relaxation: size mismatch");
    std::vector<double> ts, ps;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t0 && t[i] <= t1) {
            ts.push_back(t[i]);
            ps.push_back(p[i]);
        }
    const std::size_t n = ts.size();
    if (n < 4) throw std::invalid_argument("fit_relaxation: fewer than four samples in window");
    const double span_t = ts.back() - ts.front();
    if (!(span_t > 0.0)) throw std::invalid_argument("fit_relaxation: empty time span");

    // For fixed Gamma the model is linear in (P_inf, A).
    auto solve_linear = [&](double gamma, double& pinf, double& amp) {
        double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(-gamma * ts[i]);
            s11 += 1.0;
            s12 += e;
            s22 += e * e;
            b1 += ps[i];
            b2 += ps[i] * e;
        }
        const double det = s11 * s22 - s12 * s12;
        if (!(std::abs(det) > 1e-300)) {
            pinf = b1 / s11;
            amp = 0.0;
        } else {
            pinf = (b1 * s22 - b2 * s12) / det;
            amp = (s11 * b2 - s12 * b1) / det;
        }
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = ps[i] - (pinf + amp * std::exp(-gamma * ts[i]));
            rss += r * r;
        }
        return rss;
    };

    const double lo = std::log(1e-3 / span_t), hi = std::log(1e3 / span_t);
    const int coarse = 120;
    double best_x = lo, best_rss = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= coarse; ++k) {
        const double x = lo + (hi - lo) * k / coarse;
        double a, b;
        const double r = solve_linear(std::exp(x), a, b);
        if (r < best_rss) {
            best_rss = r;
            best_x = x;
        }
    }
    const double step = (hi - lo) / coarse;
    auto objective = [&](double x) {
        double a, b;
        return solve_linear(std::exp(x), a, b);
    };
    const auto res = boost::math::tools::brent_find_minima(objective, std::max(lo, best_x - step),
                                                           std::min(hi, best_x + step), 52);
    RelaxationFit f;
    f.points = n;
    f.total_rate = std::exp(res.first);
    const double rss = solve_linear(f.total_rate, f.equilibrium, f.amplitude);
    f.rms_residual = std::sqrt(rss / static_cast<double>(n));
    f.down_rate = f.total_rate * (1.0 - f.equilibrium);
    f.up_rate = f.total_rate * f.equilibrium;

    Eigen::MatrixXd J(static_cast<Eigen::Index>(n), 3);
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std::exp(-f.total_rate * ts[i]);
        const auto r = static_cast<Eigen::Index>(i);
        J(r, 0) = 1.0;
        J(r, 1) = e;
        J(r, 2) = -f.amplitude * ts[i] * e;
    }
    const double s2 = rss / static_cast<double>(n - 3);
    const Eigen::Matrix3d cov = s2 * (J.transpose() * J).inverse();
    f.equilibrium_stderr = std::sqrt(std::max(0.0, cov(0, 0)));
    f.total_rate_stderr = std::sqrt(std::max(0.0, cov(2, 2)));
    // down = Gamma (1 - P_inf); delta method.
    const Eigen::Vector3d grad(-f.total_rate, 0.0, 1.0 - f.equilibrium);
    f.down_rate_stderr = std::sqrt(std::max(0.0, double(grad.transpose() * cov * grad)));
    return f;
}

// Unwraps a phase sequence so consecutive samples differ by less than pi.
inline std::vector<double> unwrap_phase(std::span<const std::complex<double>> z) {
    std::vector<double> out(z.size());
    double offset = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double a = std::arg(z[i]);
        if (i > 0) {
            double d = a + offset - out[i - 1];
            while (d > std::numbers::pi) {
                offset -= 2.0 * std::numbers::pi;
                d -= 2.0 * std::numbers::pi;
            }
            while (d < -std::numbers::pi) {
                offset += 2.0 * std::numbers::pi;
                d += 2.0 * std::numbers::pi;
            }
        }
        out[i] = a + offset;
    }
    return out;
}

} // namespace fgrlab::fit
