// bixon_jortner.hpp: One state coupled to a uniformly spaced quasi-continuum
//
// The Hamiltonian is the real symmetric arrowhead matrix
//
//        [ 0    g_-K  ...  g_M  ]
//    H = [ g_-K -K dw           ]
//        [ ...       ...        ]
//        [ g_M            M dw  ]
//
// in the basis (|psi>, |k = -K>, ..., |k = M>), evolved as exp(-iHt). Its
// eigenvalues are the roots of the secular function
//
//    f(lambda) = lambda - sum_k g_k^2 / (lambda - k dw),
//
// and the overlap of eigenvector n with |psi> is
// |v_n0|^2 = (1 + sum_k g_k^2 / (lambda_n - k dw)^2)^-1.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "fgrlab/chebyshev.hpp"
#include "fgrlab/errors.hpp"
#include "fgrlab/fitting.hpp"
#include "fgrlab/parallel.hpp"

namespace fgrlab::bj {

using cplx = std::complex<double>;

struct QuasiContinuumSpec {
    double spacing{1.0};
    std::size_t below{0};  // K: levels at -K dw ... -dw
    std::size_t above{1};  // M: levels at dw ... M dw
    double uniform_coupling{0.0};
    std::vector<double> per_level;  // K + M + 1 entries; overrides uniform_coupling when non-empty

    static QuasiContinuumSpec uniform(double dw, std::size_t K, std::size_t M, double g) {
        QuasiContinuumSpec s;
        s.spacing = dw;
        s.below = K;
        s.above = M;
        s.uniform_coupling = g;
        return s;
    }
    static QuasiContinuumSpec per_level_couplings(double dw, std::size_t K, std::size_t M,
                                                  std::vector<double> g) {
        QuasiContinuumSpec s;
        s.spacing = dw;
        s.below = K;
        s.above = M;
        s.per_level = std::move(g);
        return s;
    }

    std::size_t level_count() const { return below + above + 1; }
    double lower_edge() const { return -static_cast<double>(below) * spacing; }
    double upper_edge() const { return static_cast<double>(above) * spacing; }
    double level_energy(std::size_t i) const {
        return (static_cast<double>(i) - static_cast<double>(below)) * spacing;
    }
    double coupling(std::size_t i) const { return per_level.empty() ? uniform_coupling : per_level[i]; }
    bool is_uniform() const { return per_level.empty(); }

    void validate() const {
        if (!(spacing > 0.0) || !std::isfinite(spacing))
            throw std::invalid_argument("QuasiContinuumSpec: spacing must be positive");
        if (above < 1) throw std::invalid_argument("QuasiContinuumSpec: need M >= 1");
        if (per_level.empty()) {
            if (!(uniform_coupling != 0.0) || !std::isfinite(uniform_coupling))
                throw std::invalid_argument("QuasiContinuumSpec: uniform coupling must be finite and nonzero");
        } else {
            if (per_level.size() != level_count())
                throw std::invalid_argument("QuasiContinuumSpec: per-level couplings need K + M + 1 entries");
            bool any = false;
            for (double g : per_level) {
                if (!std::isfinite(g)) throw std::invalid_argument("QuasiContinuumSpec: non-finite coupling");
                any = any || g != 0.0;
            }
            if (!any) throw std::invalid_argument("QuasiContinuumSpec: all couplings are zero");
        }
    }
};

struct EigenSolution {
    std::vector<double> eigenvalues;   // ascending, N + 2 entries
    std::vector<double> head_weights;  // |v_n0|^2

    double weight_sum() const { return std::accumulate(head_weights.begin(), head_weights.end(), 0.0); }
};

struct AmplitudeTrace {
    std::vector<double> times;
    std::vector<cplx> amplitude;
    std::vector<double> population;

    static AmplitudeTrace from_amplitudes(std::vector<double> t, std::vector<cplx> d) {
        AmplitudeTrace a;
        a.times = std::move(t);
        a.amplitude = std::move(d);
        a.population.resize(a.amplitude.size());
        for (std::size_t i = 0; i < a.amplitude.size(); ++i) a.population[i] = std::norm(a.amplitude[i]);
        return a;
    }
};

struct SolverOptions {
    std::size_t max_iterations{200};
    double tolerance{1e-9};  // relative Newton step that triggers the final polishing step
    bool closed_form_sums{true};  // digamma sums for uniform coupling; false forces direct summation
};

// ---------------------------------------------------------------------------
// Secular root finding
// ---------------------------------------------------------------------------

namespace detail {

// Active (nonzero-coupling) poles in ascending order with weights g^2.
struct PoleSet {
    std::vector<double> pole;
    std::vector<double> weight;
    std::vector<double> inactive;  // poles with zero coupling: trivial eigenpairs
    double lower{0.0};             // Gershgorin bracket for the exterior roots
    double upper{0.0};
    double scale{1.0};
    // Equal weights on consecutive grid points: sums have a closed form.
    bool uniform{false};
    double spacing{1.0};
};

inline PoleSet make_poles(const QuasiContinuumSpec& spec, const SolverOptions& opt) {
    spec.validate();
    PoleSet ps;
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < spec.level_count(); ++i) {
        const double g = spec.coupling(i);
        const double p = spec.level_energy(i);
        if (g == 0.0) {
            ps.inactive.push_back(p);
            continue;
        }
        ps.pole.push_back(p);
        ps.weight.push_back(g * g);
        abs_sum += std::abs(g);
    }
    // Widened slightly so that a root on the bound stays strictly inside.
    ps.lower = std::min(0.0, ps.pole.front()) - abs_sum * (1.0 + 1e-6);
    ps.upper = std::max(0.0, ps.pole.back()) + abs_sum * (1.0 + 1e-6);
    ps.scale = std::max({std::abs(ps.lower), std::abs(ps.upper), spec.spacing});
    ps.uniform = spec.is_uniform() && opt.closed_form_sums;
    ps.spacing = spec.spacing;
    return ps;
}

// Sums over all poles except `skip`, evaluated at lambda = origin + s with the
// differences formed as (origin - pole) + s.
struct PoleSums {
    double first{0.0};   // sum w / (lambda - p)
    double second{0.0};  // sum w / (lambda - p)^2
};

inline PoleSums direct_pole_sums(const PoleSet& ps, double origin, double s, std::size_t skip) {
    const double* p = ps.pole.data();
    const double* w = ps.weight.data();
    const std::size_t n = ps.pole.size();
    double r1 = 0.0, r2 = 0.0;
#pragma omp simd reduction(+ : r1, r2)
    for (std::size_t k = 0; k < skip; ++k) {
        const double inv = 1.0 / ((origin - p[k]) + s);
        const double t = w[k] * inv;
        r1 += t;
        r2 += t * inv;
    }
    double q1 = 0.0, q2 = 0.0;
#pragma omp simd reduction(+ : q1, q2)
    for (std::size_t k = skip + 1; k < n; ++k) {
        const double inv = 1.0 / ((origin - p[k]) + s);
        const double t = w[k] * inv;
        q1 += t;
        q2 += t * inv;
    }
    return {r1 + q1, r2 + q2};
}


// Uniform grid, lambda = p_o + s with u = s / dw:
//   sum_{m=1..a} 1/(u+m) = psi(u+a+1) - psi(u+1),
//   sum_{m=1..b} 1/(m-u) = psi(b+1-u) - psi(1-u),
// and the squared sums from the trigamma function.
inline PoleSums uniform_pole_sums(const PoleSet& ps, std::size_t o, double s) {
    using boost::math::digamma;
    using boost::math::trigamma;
    const double dw = ps.spacing, w = ps.weight[o];
    const double u = s / dw;
    const double a = static_cast<double>(o);
    const double b = static_cast<double>(ps.pole.size() - 1 - o);
    double first = 0.0, second = 0.0;
    if (a > 0) {
        first += digamma(u + a + 1.0) - digamma(u + 1.0);
        second += trigamma(u + 1.0) - trigamma(u + a + 1.0);
    }
    if (b > 0) {
        first -= digamma(b + 1.0 - u) - digamma(1.0 - u);
        second += trigamma(1.0 - u) - trigamma(b + 1.0 - u);
    }
    return {w / dw * first, w / (dw * dw) * second};
}

// Sums over every pole except o at lambda = p_o + s.
inline PoleSums pole_sums(const PoleSet& ps, std::size_t o, double s) {
    if (ps.uniform) return uniform_pole_sums(ps, o, s);
    return direct_pole_sums(ps, ps.pole[o], s, o);
}

struct Root {
    double lambda{0.0};
    double weight{0.0};
};

// Root number j (0 = below all poles, n = above all poles, otherwise between
// poles j-1 and j). Newton on F(s) = (lambda - origin) f(lambda), which
// removes the pole at the origin; bisection keeps the iterate bracketed.
inline Root secular_root(const PoleSet& ps, std::size_t j, const SolverOptions& opt) {
    const std::size_t n = ps.pole.size();
    std::size_t o;
    double lo, hi;  // bracket in s
    if (j == 0) {
        o = 0;
        lo = ps.lower - ps.pole[0];
        hi = 0.0;
    } else if (j == n) {
        o = n - 1;
        lo = 0.0;
        hi = ps.upper - ps.pole[n - 1];
    } else {
        const double left = ps.pole[j - 1], right = ps.pole[j];
        const double mid = 0.5 * (left + right);
        PoleSums sm = pole_sums(ps, j - 1, mid - left);
        const double wl = ps.weight[j - 1], dl = mid - left;
        sm.first += wl / dl;
        sm.second += wl / (dl * dl);
        const double fmid = mid - sm.first;
        if (fmid > 0.0) {
            o = j - 1;
            lo = 0.0;
            hi = mid - left;
        } else if (fmid < 0.0) {
            o = j;
            lo = mid - right;
            hi = 0.0;
        } else {
            const double w = 1.0 / (1.0 + sm.second);
            return {mid, w};
        }
    }
    const double origin = ps.pole[o];
    const double w_o = ps.weight[o];
    // F is negative at s = 0 and positive at the far end of the bracket for
    // origin on the left; for origin on the right the signs are reversed.
    const bool increasing = lo >= 0.0;
    auto F_at = [&](double s, PoleSums& sm) {
        sm = pole_sums(ps, o, s);
        const double A = origin + s - sm.first;
        return s * A - w_o;
    };
    double s = 0.0;
    PoleSums sm;
    double F = F_at(s, sm);
    bool polish = false;
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
        const double A = origin + s - sm.first;
        const double dF = A + s * (1.0 + sm.second);
        double next = 0.5 * (lo + hi);
        bool newton = false;
        if (dF != 0.0) {
            const double trial = s - F / dF;
            if (trial >= lo && trial <= hi) {
                next = trial;
                newton = true;
            }
        }
        const double step = next - s;
        s = next;
        F = F_at(s, sm);
        const bool below_root = increasing ? (F < 0.0) : (F > 0.0);
        if (F == 0.0) {
            lo = hi = s;
        } else if (below_root) {
            lo = s;
        } else {
            hi = s;
        }
        const double eps = std::numeric_limits<double>::epsilon();
        // One extra Newton step after the relative step drops below the
        // tolerance; quadratic convergence puts that step at rounding level.
        const bool done = F == 0.0 || (newton && (polish || std::abs(step) <= 4.0 * eps * std::abs(s))) ||
                          (hi - lo) <= 4.0 * eps * std::max(std::abs(lo), std::abs(hi));
        if (newton && std::abs(step) <= opt.tolerance * std::abs(s)) polish = true;
        if (done) {
            const double inv_o = 1.0 / s;
            const double wsum = w_o * inv_o * inv_o + sm.second;
            return {origin + s, s == 0.0 ? 0.0 : 1.0 / (1.0 + wsum)};
        }
    }
    throw NumericalError("solve_arrowhead: no convergence for root " + std::to_string(j) + " in interval [" +
                         std::to_string(origin + lo) + ", " + std::to_string(origin + hi) + "]");
}

} // namespace detail

inline EigenSolution solve_arrowhead(const QuasiContinuumSpec& spec, const SolverOptions& opt = {}) {
    const detail::PoleSet ps = detail::make_poles(spec, opt);
    const std::size_t roots = ps.pole.size() + 1;
    std::vector<detail::Root> found(roots);
    parallel::for_each_index(roots, [&](std::size_t j) { found[j] = detail::secular_root(ps, j, opt); });
    std::vector<std::pair<double, double>> all;
    all.reserve(roots + ps.inactive.size());
    for (const auto& r : found) all.emplace_back(r.lambda, r.weight);
    for (double p : ps.inactive) all.emplace_back(p, 0.0);
    std::sort(all.begin(), all.end());
    EigenSolution sol;
    sol.eigenvalues.reserve(all.size());
    sol.head_weights.reserve(all.size());
    for (const auto& [l, w] : all) {
        sol.eigenvalues.push_back(l);
        sol.head_weights.push_back(w);
    }
    return sol;
}

// Lowest and highest eigenvalue only.
inline std::pair<double, double> extreme_eigenvalues(const QuasiContinuumSpec& spec, const SolverOptions& opt = {}) {
    const detail::PoleSet ps = detail::make_poles(spec, opt);
    const double lo = detail::secular_root(ps, 0, opt).lambda;
    const double hi = detail::secular_root(ps, ps.pole.size(), opt).lambda;
    return {lo, hi};
}

// Explicit (N+2) x (N+2) arrowhead matrix, for dense cross-checks.
inline Eigen::MatrixXd arrowhead_matrix(const QuasiContinuumSpec& spec) {
    spec.validate();
    const auto n = static_cast<Eigen::Index>(spec.level_count());
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double g = spec.coupling(static_cast<std::size_t>(i));
        H(0, i + 1) = H(i + 1, 0) = g;
        H(i + 1, i + 1) = spec.level_energy(static_cast<std::size_t>(i));
    }
    return H;
}

// Large-N Lorentzian form of |v_n0|^2 for uniform coupling.
inline double analytic_head_weight(double lambda, double g, double dw) {
    const double gd = std::numbers::pi * g * g / dw;
    const double r = dw / (g * std::numbers::pi);
    return g * g / (gd * gd * (1.0 + r * r) + lambda * lambda);
}

// True when (dw/g)^2 << pi^2 is comfortably satisfied (ratio below 0.1 pi^2).
inline bool lorentzian_normalised(double g, double dw) {
    const double r = dw / g;
    return r * r < 0.1 * std::numbers::pi * std::numbers::pi;
}

// ---------------------------------------------------------------------------
// Time evolution
// ---------------------------------------------------------------------------

// d(t) = sum_n |v_n0|^2 exp(-i lambda_n t), summed in eigenvalue order.
inline AmplitudeTrace amplitude_series(const EigenSolution& sol, std::span<const double> times) {
    std::vector<cplx> d(times.size());
    std::vector<double> lam, w;
    for (std::size_t n = 0; n < sol.eigenvalues.size(); ++n) {
        if (sol.head_weights[n] == 0.0) continue;
        lam.push_back(sol.eigenvalues[n]);
        w.push_back(sol.head_weights[n]);
    }
    parallel::for_each_index(times.size(), [&](std::size_t j) {
        const double t = times[j];
        double re = 0.0, im = 0.0;
        for (std::size_t n = 0; n < lam.size(); ++n) {
            const double ph = lam[n] * t;
            re += w[n] * std::cos(ph);
            im -= w[n] * std::sin(ph);
        }
        d[j] = {re, im};
    });
    return AmplitudeTrace::from_amplitudes(std::vector<double>(times.begin(), times.end()), std::move(d));
}

// Same survival amplitude from a Chebyshev expansion of exp(-iHt) applied to
// the arrowhead matrix directly; no eigenvalues are formed.
inline AmplitudeTrace chebyshev_survival(const QuasiContinuumSpec& spec, std::span<const double> times) {
    const auto [lmin, lmax] = extreme_eigenvalues(spec);
    const chebyshev::Interval iv{lmin, lmax};
    const auto n = static_cast<Eigen::Index>(spec.level_count());
    Eigen::VectorXd pole(n), g(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        pole(i) = spec.level_energy(static_cast<std::size_t>(i));
        g(i) = spec.coupling(static_cast<std::size_t>(i));
    }
    auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
        y.resize(x.size());
        const double x0 = x(0);
        y(0) = g.dot(x.tail(n));
        y.tail(n) = pole.cwiseProduct(x.tail(n)) + x0 * g;
    };
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(n + 1);
    psi(0) = 1.0;
    const std::size_t count = chebyshev::moments_needed(iv, times);
    const auto mu = chebyshev::survival_moments(apply, psi, iv, count);
    auto d = chebyshev::amplitude_from_moments(mu, iv, times);
    return AmplitudeTrace::from_amplitudes(std::vector<double>(times.begin(), times.end()), std::move(d));
}

// ---------------------------------------------------------------------------
// Decay-rate fits and deviation estimators
// ---------------------------------------------------------------------------

inline double markovian_timescale(double omega_upper) {
    if (!(omega_upper > 0.0)) throw std::invalid_argument("markovian_timescale: Omega must be positive");
    return 2.0 * std::numbers::pi / omega_upper;
}

struct FitWindow {
    double begin{0.0};
    double end{0.0};
};

// [5 tau, min(2/gamma, pi/dw)]: past the initial slip, before the first revival.
inline FitWindow default_fit_window(double gamma, double omega_upper, double dw) {
    return {5.0 * markovian_timescale(omega_upper), std::min(2.0 / gamma, 0.5 * 2.0 * std::numbers::pi / dw)};
}

struct RateFit {
    double rate{0.0};
    double residual{0.0};
    double rate_stderr{0.0};
    std::size_t points{0};
};

inline RateFit fit_decay_rate(const AmplitudeTrace& trace, FitWindow window) {
    const auto f = fit::fit_decay(trace.times, trace.population, window.begin, window.end);
    return {f.rate, f.residual, f.rate_stderr, f.points};
}

// Central-difference dP/dt on a possibly non-uniform grid.
inline std::vector<double> population_rate(std::span<const double> t, std::span<const double> p) {
    const std::size_t n = t.size();
    if (n < 3) throw std::invalid_argument("population_rate: need at least three samples");
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h1 = t[i] - t[i - 1], h2 = t[i + 1] - t[i];
        d[i] = (-h2 / (h1 * (h1 + h2))) * p[i - 1] + ((h2 - h1) / (h1 * h2)) * p[i] + (h1 / (h2 * (h1 + h2))) * p[i + 1];
    }
    const double h = t[1] - t[0], h2 = t[2] - t[1];
    d[0] = -((2 * h + h2) / (h * (h + h2))) * p[0] + ((h + h2) / (h * h2)) * p[1] - (h / (h2 * (h + h2))) * p[2];
    const double a = t[n - 2] - t[n - 3], b = t[n - 1] - t[n - 2];
    d[n - 1] = (b / (a * (a + b))) * p[n - 3] - ((a + b) / (a * b)) * p[n - 2] + ((a + 2 * b) / (b * (a + b))) * p[n - 1];
    return d;
}

// Deviation of dP/dt from ideal decay at rate gamma: P'(t) + gamma exp(-gamma t).
inline std::vector<double> rate_deviation(const AmplitudeTrace& trace, double gamma) {
    auto d = population_rate(trace.times, trace.population);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += gamma * std::exp(-gamma * trace.times[i]);
    return d;
}

struct MarkovianLag {
    double lag{0.0};                  // first t with dP/dt <= -gamma P(t)
    double inflection{0.0};           // most negative dP/dt within [0, 4 tau]
    double estimate{0.0};             // 2 pi / Omega
    double curvature_at_zero{0.0};    // d''(0) from the trace
    double predicted_curvature{0.0};  // -gamma Omega / pi
};

inline MarkovianLag measure_markovian_lag(const AmplitudeTrace& trace, double gamma, double omega_upper) {
    MarkovianLag r;
    r.estimate = markovian_timescale(omega_upper);
    r.predicted_curvature = -gamma * omega_upper / std::numbers::pi;
    const auto& t = trace.times;
    if (t.size() < 3 || t.front() != 0.0)
        throw std::invalid_argument("measure_markovian_lag: trace must start at t = 0 with >= 3 samples");
    for (std::size_t i = 1; i < t.size() && t[i - 1] < 4.0 * r.estimate; ++i)
        if (t[i] - t[i - 1] > r.estimate / 10.0)
            throw std::invalid_argument("measure_markovian_lag: trace too coarse (spacing must be <= tau/10)");
    const auto dp = population_rate(t, trace.population);
    double prev = dp[0] + gamma * trace.population[0];
    bool found = false;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double h = dp[i] + gamma * trace.population[i];
        if (h <= 0.0) {
            r.lag = t[i - 1] + (t[i] - t[i - 1]) * prev / (prev - h);
            found = true;
            break;
        }
        prev = h;
    }
    if (!found) throw NumericalError("measure_markovian_lag: dP/dt never reached -gamma P");
    std::size_t steepest = 0;
    for (std::size_t i = 1; i < t.size() && t[i] <= 4.0 * r.estimate; ++i)
        if (dp[i] < dp[steepest]) steepest = i;
    r.inflection = t[steepest];
    r.curvature_at_zero = 2.0 * (trace.amplitude[1].real() - 1.0) / (t[1] * t[1]);
    return r;
}

// d''(0) = -sum_n w_n lambda_n^2 = -sum_k g_k^2.
inline double initial_curvature(const EigenSolution& sol) {
    double s = 0.0;
    for (std::size_t n = 0; n < sol.eigenvalues.size(); ++n)
        s += sol.head_weights[n] * sol.eigenvalues[n] * sol.eigenvalues[n];
    return -s;
}

// Frequency shift from spectral asymmetry, spectrum [-omega_minus, omega_plus].
// The initial (upper) level is pushed down by this amount, so arg d(t) grows
// at +lamb_shift; the error term is O(gamma^2 / omega_minus).
inline double lamb_shift(double gamma, double omega_plus, double omega_minus) {
    if (!(omega_plus > 0.0) || !(omega_minus > 0.0))
        throw std::invalid_argument("lamb_shift: band edges must be positive");
    return gamma / (2.0 * std::numbers::pi) * std::log(omega_plus / omega_minus);
}

// Slope of the unwrapped phase of d(t) on the window.
inline fit::LinearFit measure_phase_drift(const AmplitudeTrace& trace, FitWindow window) {
    const auto phase = fit::unwrap_phase(trace.amplitude);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < trace.times.size(); ++i)
        if (trace.times[i] >= window.begin && trace.times[i] <= window.end) {
            xs.push_back(trace.times[i]);
            ys.push_back(phase[i]);
        }
    return fit::least_squares_line(xs, ys);
}

inline double asymmetry_distortion(double gamma, double omega) {
    if (!(omega > 0.0)) throw std::invalid_argument("asymmetry_distortion: omega must be positive");
    return gamma / (2.0 * std::numbers::pi * omega);
}

// d(t) ~ int_0^Omega F cos(lambda t) + i int_omega^Omega F sin(lambda t),
// F(lambda) = (gamma/pi) / (gamma_d^2 + lambda^2), gamma = 2 gamma_d.
inline AmplitudeTrace lopsided_fourier_amplitude(double gamma_d, double omega, double omega_upper,
                                                 std::span<const double> times, double abs_tol = 1e-8) {
    if (!(omega <= omega_upper)) throw std::invalid_argument("lopsided_fourier_amplitude: need omega <= Omega");
    if (!(gamma_d > 0.0)) throw std::invalid_argument("lopsided_fourier_amplitude: gamma_d must be positive");
    const double gamma = 2.0 * gamma_d;
    auto F = [&](double l) { return (gamma / std::numbers::pi) / (gamma_d * gamma_d + l * l); };
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto integrate = [&](auto&& f, double a, double b) {
        if (!(b > a)) return 0.0;
        // Split where F is sharply peaked so the adaptive rule sees both scales.
        const double knee = std::min(b, std::max(a, 20.0 * gamma_d));
        double total = 0.0;
        for (auto [x0, x1] : {std::pair{a, knee}, std::pair{knee, b}}) {
            if (!(x1 > x0)) continue;
            double err = 0.0;
            const double v = GK::integrate(f, x0, x1, 30, 1e-12, &err);
            if (!(err <= 0.5 * abs_tol))
                throw NumericalError("lopsided_fourier_amplitude: quadrature did not converge (error " +
                                     std::to_string(err) + ")");
            total += v;
        }
        return total;
    };
    std::vector<cplx> d(times.size());
    parallel::for_each_index(times.size(), [&](std::size_t j) {
        const double t = times[j];
        const double c = integrate([&](double l) { return F(l) * std::cos(l * t); }, 0.0, omega_upper);
        const double s = integrate([&](double l) { return F(l) * std::sin(l * t); }, omega, omega_upper);
        d[j] = {c, s};
    });
    return AmplitudeTrace::from_amplitudes(std::vector<double>(times.begin(), times.end()), std::move(d));
}

// Uniform grid helper: count points from 0 to t_end inclusive.
inline std::vector<double> uniform_times(double t_end, std::size_t count) {
    if (count < 2) throw std::invalid_argument("uniform_times: need at least two points");
    std::vector<double> t(count);
    for (std::size_t i = 0; i < count; ++i)
        t[i] = t_end * static_cast<double>(i) / static_cast<double>(count - 1);
    return t;
}

} // namespace fgrlab::bj
