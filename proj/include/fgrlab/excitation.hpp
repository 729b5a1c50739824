// excitation.hpp: Several upper levels sharing one zero-temperature oscillator bath
//
// Single-excitation basis {|e_i, 0>} U {|g, 1_k>}:
//
//    H = [ diag(w_i)   C       ]      C_ik = g_i,   p_k = k dw,  k = 0..N
//        [ C^T         diag(p) ]
//
// Because every upper level couples to every oscillator with a k-independent
// strength, the bath enters the Schur complement only through the scalar
// R(l) = sum_k 1/(l - p_k), which has a closed form on the uniform grid:
//
//    M(l) = l - diag(w) - R(l) c c^T,   #{eig(H) < l} = #{p_k < l} + #{eig(M(l)) > 0}.
//
// Eigenvalues follow by bisection on this count inside the Cauchy brackets
// [p_{n-m}, p_n]; the system part a of eigenvector n spans the null space of
// M(l_n) and is normalised by a^T (1 + R'(l_n) c c^T) a.

#pragma once

#include <algorithm>
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
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "fgrlab/bixon_jortner.hpp"
#include "fgrlab/errors.hpp"
#include "fgrlab/fitting.hpp"
#include "fgrlab/krylov.hpp"
#include "fgrlab/model.hpp"
#include "fgrlab/parallel.hpp"

namespace fgrlab::excitation {

using cplx = std::complex<double>;

struct UpperLevel {
    double energy{0.0};
    double coupling_scale{1.0};  // g_i = coupling_scale * bath.coupling
};

struct SingleExcitationModel {
    std::vector<double> energies;   // after optional snapping
    std::vector<double> couplings;  // g_i
    std::vector<bool> snapped;
    model::BathSpec bath;
    bool snap_to_grid{false};

    std::size_t levels() const { return energies.size(); }
    std::size_t bath_size() const { return bath.oscillator_count; }
    std::size_t dimension() const { return levels() + bath_size(); }

    // y = H x for a state laid out as (upper levels, oscillators 0..N).
    template <typename In>
    void apply(const In& x, Eigen::VectorXcd& y) const {
        const auto m = static_cast<Eigen::Index>(levels());
        const auto nb = static_cast<Eigen::Index>(bath_size());
        y.resize(m + nb);
        const cplx bath_sum = x.tail(nb).sum();
        cplx sys_sum = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double g = couplings[static_cast<std::size_t>(i)];
            y(i) = energies[static_cast<std::size_t>(i)] * x(i) + g * bath_sum;
            sys_sum += g * x(i);
        }
        const double dw = bath.spacing;
        for (Eigen::Index k = 0; k < nb; ++k) y(m + k) = (static_cast<double>(k) * dw) * x(m + k) + sys_sum;
    }

    Eigen::MatrixXd dense() const {
        const auto m = static_cast<Eigen::Index>(levels());
        const auto n = static_cast<Eigen::Index>(dimension());
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < m; ++i) {
            H(i, i) = energies[static_cast<std::size_t>(i)];
            for (Eigen::Index k = m; k < n; ++k) H(i, k) = H(k, i) = couplings[static_cast<std::size_t>(i)];
        }
        for (Eigen::Index k = m; k < n; ++k) H(k, k) = static_cast<double>(k - m) * bath.spacing;
        return H;
    }
};

inline SingleExcitationModel build_single_excitation_model(std::span<const UpperLevel> levels,
                                                           const model::BathSpec& bath, bool snap_to_grid = false) {
    bath.validate();
    if (bath.temperature != 0.0)
        throw std::invalid_argument("build_single_excitation_model: the single-excitation sector needs temperature 0");
    if (levels.empty()) throw std::invalid_argument("build_single_excitation_model: no upper levels");
    SingleExcitationModel m;
    m.bath = bath;
    m.snap_to_grid = snap_to_grid;
    for (const auto& l : levels) {
        if (!(l.energy > 0.0 && l.energy < bath.cutoff()))
            throw std::invalid_argument("build_single_excitation_model: level energy " + std::to_string(l.energy) +
                                        " outside the bath band (0, " + std::to_string(bath.cutoff()) + ")");
        if (!std::isfinite(l.coupling_scale))
            throw std::invalid_argument("build_single_excitation_model: non-finite coupling scale");
        double e = l.energy;
        bool snapped = false;
        if (snap_to_grid) {
            const double k = std::round(e / bath.spacing);
            if (std::abs(e - k * bath.spacing) <= 0.5 * bath.spacing) {
                e = k * bath.spacing;
                snapped = true;
            }
        }
        m.energies.push_back(e);
        m.couplings.push_back(l.coupling_scale * bath.coupling);
        m.snapped.push_back(snapped);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Exact eigendecomposition
// ---------------------------------------------------------------------------

namespace detail {

// R(l) = sum_{k=0}^{N} 1/(l - k dw) and R'(l) = sum 1/(l - k dw)^2, from
// digamma/trigamma with the nearest pole handled by the reflection formula
// so that the singular part is evaluated from the exact offset l - k0 dw.
struct GridSums {
    double first{0.0};
    double second{0.0};
    std::size_t below{0};  // #{p_k < l}
};

inline GridSums grid_sums(double l, double dw, std::size_t N) {
    using boost::math::digamma;
    using boost::math::trigamma;
    const double n = static_cast<double>(N);
    const double x = l / dw;
    GridSums r;
    if (x < -0.5) {
        r.first = -(digamma(n + 1.0 - x) - digamma(-x)) / dw;
        r.second = (trigamma(-x) - trigamma(n + 1.0 - x)) / (dw * dw);
        r.below = 0;
    } else if (x > n + 0.5) {
        r.first = (digamma(x + 1.0) - digamma(x - n)) / dw;
        r.second = (trigamma(x - n) - trigamma(x + 1.0)) / (dw * dw);
        r.below = N + 1;
    } else {
        const double k0 = std::round(std::clamp(x, 0.0, n));
        const double u = (l - k0 * dw) / dw;  // offset from the nearest pole
        const double pi = std::numbers::pi;
        const double s = std::sin(pi * u);
        // Reflection: psi(-x) = psi(1 + x) + pi cot(pi x), psi1(-x) = pi^2 / sin^2(pi x) - psi1(1 + x).
        r.first = (digamma(1.0 + x) - digamma(n + 1.0 - x) + pi * std::cos(pi * u) / s) / dw;
        r.second = (pi * pi / (s * s) - trigamma(1.0 + x) - trigamma(n + 1.0 - x)) / (dw * dw);
        // The side of the nearest pole comes from the same offset as the singular term.
        r.below = static_cast<std::size_t>(k0) + (u > 0.0 ? 1 : 0);
    }
    return r;
}

inline Eigen::MatrixXd schur_matrix(const SingleExcitationModel& mdl, double l, double R) {
    const auto m = static_cast<Eigen::Index>(mdl.levels());
    Eigen::MatrixXd M(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            M(i, j) = (i == j ? l - mdl.energies[static_cast<std::size_t>(i)] : 0.0) -
                      R * mdl.couplings[static_cast<std::size_t>(i)] * mdl.couplings[static_cast<std::size_t>(j)];
    return M;
}

inline std::size_t count_below(const SingleExcitationModel& mdl, double l) {
    auto gs = grid_sums(l, mdl.bath.spacing, mdl.bath.top_index());
    if (!std::isfinite(gs.first)) {
        // l sits on a pole: count just above it.
        l += 1e-12 * mdl.bath.spacing;
        gs = grid_sums(l, mdl.bath.spacing, mdl.bath.top_index());
    }
    const Eigen::MatrixXd M = schur_matrix(mdl, l, gs.first);
    std::size_t positive = 0;
    if (M.rows() == 1) {
        positive = M(0, 0) > 0.0 ? 1 : 0;
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) positive += es.eigenvalues()(i) > 0.0 ? 1 : 0;
    }
    return gs.below + positive;
}

} // namespace detail

struct ExactSolution {
    std::vector<double> eigenvalues;
    Eigen::MatrixXd system_vectors;  // row n: system components of eigenvector n
};

inline ExactSolution solve_exact(const SingleExcitationModel& mdl) {
    const std::size_t m = mdl.levels(), nb = mdl.bath_size(), total = m + nb;
    const double dw = mdl.bath.spacing;
    double gsum = 0.0, emin = 0.0, emax = mdl.bath.cutoff();
    for (std::size_t i = 0; i < m; ++i) {
        gsum += std::abs(mdl.couplings[i]) * std::sqrt(static_cast<double>(nb));
        emin = std::min(emin, mdl.energies[i]);
        emax = std::max(emax, mdl.energies[i]);
    }
    // Spectral-norm bound of the border: ||C|| = |g| sqrt(N + 1).
    const double lower = emin - gsum - 1.0, upper = emax + gsum + 1.0;
    ExactSolution sol;
    sol.eigenvalues.resize(total);
    sol.system_vectors.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(m));
    parallel::for_each_index(total, [&](std::size_t n) {
        // Cauchy interlacing with the bath diagonal: p_{n-m} <= l_n <= p_n.
        double lo = n >= m ? static_cast<double>(n - m) * dw : lower;
        double hi = n < nb ? static_cast<double>(n) * dw : upper;
        lo = std::min(lo, hi);
        // Invariant: count(lo) <= n < count(hi).
        if (detail::count_below(mdl, lo) > n) lo = lower;
        if (detail::count_below(mdl, hi) <= n) hi = upper;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            (detail::count_below(mdl, mid) > n ? hi : lo) = mid;
        }
        const double l = 0.5 * (lo + hi);
        sol.eigenvalues[n] = l;
        const auto gs = detail::grid_sums(l, dw, mdl.bath.top_index());
        Eigen::VectorXd a(static_cast<Eigen::Index>(m));
        if (!std::isfinite(gs.first)) {
            // Pure bath state: no system component.
            a.setZero();
        } else {
            const Eigen::MatrixXd M = detail::schur_matrix(mdl, l, gs.first);
            if (m == 1) {
                a(0) = 1.0;
            } else {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
                Eigen::Index best = 0;
                es.eigenvalues().cwiseAbs().minCoeff(&best);
                a = es.eigenvectors().col(best);
            }
            Eigen::VectorXd c(static_cast<Eigen::Index>(m));
            for (std::size_t i = 0; i < m; ++i) c(static_cast<Eigen::Index>(i)) = mdl.couplings[i];
            const double ca = c.dot(a);
            const double norm2 = a.squaredNorm() + ca * ca * gs.second;
            a /= std::sqrt(norm2);
        }
        sol.system_vectors.row(static_cast<Eigen::Index>(n)) = a.transpose();
    });
    return sol;
}

// ---------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------

enum class Method { Auto, Exact, Krylov };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::Auto: return "auto";
        case Method::Exact: return "exact";
        case Method::Krylov: return "krylov";
    }
    return "?";
}

struct PopulationTraces {
    std::vector<double> times;
    std::vector<std::vector<double>> populations;  // [level][time]
    std::vector<std::vector<cplx>> amplitudes;     // [level][time]
    std::vector<double> bath_population;
    std::vector<double> norm;
    std::vector<double> energy;
    Method method{Method::Auto};
    krylov::Stats krylov_stats;
};

struct PropagateOptions {
    Method method{Method::Auto};
    double tolerance{1e-10};         // Krylov per-step error bound
    std::size_t krylov_dimension{30};
};

inline PopulationTraces propagate(const SingleExcitationModel& mdl, std::span<const cplx> initial,
                                  std::span<const double> times, const PropagateOptions& opt = {}) {
    const std::size_t m = mdl.levels();
    if (initial.size() != m) throw std::invalid_argument("excitation::propagate: one amplitude per upper level");
    double n0 = 0.0;
    for (const auto& c : initial) n0 += std::norm(c);
    if (std::abs(n0 - 1.0) > 1e-12) throw std::invalid_argument("excitation::propagate: initial state must be normalised");
    for (std::size_t j = 1; j < times.size(); ++j)
        if (times[j] < times[j - 1]) throw std::invalid_argument("excitation::propagate: times must be ascending");

    PopulationTraces out;
    out.times.assign(times.begin(), times.end());
    const std::size_t T = times.size();
    out.populations.assign(m, std::vector<double>(T));
    out.amplitudes.assign(m, std::vector<cplx>(T));
    out.bath_population.resize(T);
    out.norm.resize(T);
    out.energy.resize(T);
    out.method = opt.method == Method::Auto ? (m <= 2 ? Method::Exact : Method::Krylov) : opt.method;

    if (out.method == Method::Exact) {
        const auto sol = solve_exact(mdl);
        const std::size_t total = sol.eigenvalues.size();
        // z_n = <v_n|psi0>, restricted to the system block.
        std::vector<cplx> z(total);
        double zsum = 0.0, esum = 0.0;
        for (std::size_t n = 0; n < total; ++n) {
            cplx s = 0.0;
            for (std::size_t i = 0; i < m; ++i)
                s += sol.system_vectors(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) * initial[i];
            z[n] = s;
            zsum += std::norm(s);
            esum += std::norm(s) * sol.eigenvalues[n];
        }
        parallel::for_each_index(T, [&](std::size_t j) {
            const double t = times[j];
            double pop = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                cplx a = 0.0;
                for (std::size_t n = 0; n < total; ++n) {
                    const double u = sol.system_vectors(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i));
                    if (u == 0.0) continue;
                    a += (u * z[n]) * std::polar(1.0, -sol.eigenvalues[n] * t);
                }
                out.amplitudes[i][j] = a;
                out.populations[i][j] = std::norm(a);
                pop += std::norm(a);
            }
            // The eigenbasis is complete, so the norm is sum |z_n|^2 at every time.
            out.norm[j] = zsum;
            out.bath_population[j] = zsum - pop;
            out.energy[j] = esum;
        });
        return out;
    }

    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(mdl.dimension()));
    for (std::size_t i = 0; i < m; ++i) psi(static_cast<Eigen::Index>(i)) = initial[i];
    auto apply = [&](const auto& x, Eigen::VectorXcd& y) { mdl.apply(x, y); };
    krylov::Options ko;
    ko.tolerance = opt.tolerance;
    ko.dimension = opt.krylov_dimension;
    krylov::LanczosPropagator<decltype(apply)> prop(apply, ko);
    double t = 0.0;
    Eigen::VectorXcd Hpsi;
    const auto mi = static_cast<Eigen::Index>(m);
    for (std::size_t j = 0; j < T; ++j) {
        if (times[j] > t) prop.advance(psi, times[j] - t);
        t = times[j];
        double pop = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            out.amplitudes[i][j] = psi(static_cast<Eigen::Index>(i));
            out.populations[i][j] = std::norm(psi(static_cast<Eigen::Index>(i)));
            pop += out.populations[i][j];
        }
        out.bath_population[j] = psi.tail(psi.size() - mi).squaredNorm();
        out.norm[j] = pop + out.bath_population[j];
        mdl.apply(psi, Hpsi);
        out.energy[j] = psi.dot(Hpsi).real();
    }
    out.krylov_stats = prop.stats();
    return out;
}

// ---------------------------------------------------------------------------
// Two-transition experiment
// ---------------------------------------------------------------------------

enum class Initial { Upper, Lower };

inline const char* to_string(Initial i) { return i == Initial::Upper ? "high" : "low"; }

struct TwoTransitionParams {
    double omega{5.5};  // lower transition frequency
    double gamma{0.025};
    double cutoff{32.0};
    std::size_t oscillators{16000};  // N + 1
    bool snap_to_grid{false};
    PropagateOptions propagation{};
};

inline model::BathSpec two_transition_bath(const TwoTransitionParams& p) {
    if (p.oscillators < 2) throw std::invalid_argument("two_transition_bath: need at least two oscillators");
    const double dw = p.cutoff / static_cast<double>(p.oscillators - 1);
    return {dw, p.oscillators, model::coupling_for_rate(p.gamma, dw), 0.0};
}

struct TwoTransitionPoint {
    double delta_omega{0.0};
    Initial initial{Initial::Upper};
    PopulationTraces traces;
    std::vector<double> p_high, p_low;
    double cross_population{0.0};       // max_t P of the unpopulated level
    double max_exponential_error{0.0};  // max |P_populated - exp(-gamma t)| on [0, 4/gamma]
    double integrated_excess{0.0};      // int P_populated / int exp(-gamma t) - 1 on [0, 6/gamma]
    double fitted_rate{0.0};
};

inline double trapezoid(std::span<const double> t, std::span<const double> y, double t_end) {
    double s = 0.0;
    for (std::size_t i = 1; i < t.size() && t[i] <= t_end + 1e-12; ++i) s += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

inline TwoTransitionPoint two_transition_point(const TwoTransitionParams& p, double delta_omega, Initial which,
                                               std::span<const double> times) {
    if (!(delta_omega > 0.0)) throw std::invalid_argument("two_transition_point: delta_omega must be positive");
    const auto bath = two_transition_bath(p);
    const UpperLevel levels[2] = {{p.omega, 1.0}, {p.omega + delta_omega, 1.0}};
    const auto mdl = build_single_excitation_model(levels, bath, p.snap_to_grid);
    const cplx init[2] = {which == Initial::Lower ? 1.0 : 0.0, which == Initial::Upper ? 1.0 : 0.0};
    TwoTransitionPoint r;
    r.delta_omega = delta_omega;
    r.initial = which;
    r.traces = propagate(mdl, init, times, p.propagation);
    r.p_low = r.traces.populations[0];
    r.p_high = r.traces.populations[1];
    const auto& populated = which == Initial::Upper ? r.p_high : r.p_low;
    const auto& other = which == Initial::Upper ? r.p_low : r.p_high;
    std::vector<double> ref(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) {
        ref[j] = std::exp(-p.gamma * times[j]);
        r.cross_population = std::max(r.cross_population, other[j]);
        if (times[j] <= 4.0 / p.gamma)
            r.max_exponential_error = std::max(r.max_exponential_error, std::abs(populated[j] - ref[j]));
    }
    const double horizon = 6.0 / p.gamma;
    r.integrated_excess = trapezoid(times, populated, horizon) / trapezoid(times, ref, horizon) - 1.0;
    const auto window = bj::default_fit_window(p.gamma, p.cutoff - p.omega, bath.spacing);
    r.fitted_rate = fit::fit_decay(times, populated, window.begin, std::min(window.end, 4.0 / p.gamma)).rate;
    return r;
}

inline std::vector<TwoTransitionPoint> two_transition_experiment(const TwoTransitionParams& p,
                                                                 std::span<const double> delta_omegas, Initial which,
                                                                 std::span<const double> times) {
    std::vector<TwoTransitionPoint> out;
    for (double d : delta_omegas) out.push_back(two_transition_point(p, d, which, times));
    return out;
}

// ---------------------------------------------------------------------------
// Superposition conjecture
// ---------------------------------------------------------------------------

struct SuperpositionReport {
    std::vector<double> basis_rates;          // per level, started alone
    std::vector<double> superposition_rates;  // per level, from the superposition (population / |w_i|^2)
    double max_relative_difference{0.0};
    double tolerance{0.02};
    bool pass{false};
};

inline SuperpositionReport superposition_rate_invariance(const SingleExcitationModel& mdl, std::span<const cplx> weights,
                                                         std::span<const double> times, bj::FitWindow window,
                                                         double tolerance = 0.02, const PropagateOptions& opt = {}) {
    const std::size_t m = mdl.levels();
    if (weights.size() != m) throw std::invalid_argument("superposition_rate_invariance: one weight per level");
    const double gamma_max = [&] {
        double g = 0.0;
        for (double c : mdl.couplings) g = std::max(g, model::golden_rate(std::abs(c), mdl.bath.spacing));
        return g;
    }();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            if (std::abs(mdl.energies[i] - mdl.energies[j]) < 40.0 * gamma_max)
                throw std::invalid_argument("superposition_rate_invariance: levels " + std::to_string(i) + " and " +
                                            std::to_string(j) + " are closer than 40 gamma");
    SuperpositionReport r;
    r.tolerance = tolerance;
    const auto sup = propagate(mdl, weights, times, opt);
    for (std::size_t i = 0; i < m; ++i) {
        const double w2 = std::norm(weights[i]);
        if (w2 == 0.0) {
            r.basis_rates.push_back(0.0);
            r.superposition_rates.push_back(0.0);
            continue;
        }
        std::vector<cplx> basis(m, 0.0);
        basis[i] = 1.0;
        const auto single = propagate(mdl, basis, times, opt);
        const double rb = fit::fit_decay(times, single.populations[i], window.begin, window.end).rate;
        std::vector<double> scaled(sup.populations[i]);
        for (auto& v : scaled) v /= w2;
        const double rs = fit::fit_decay(times, scaled, window.begin, window.end).rate;
        r.basis_rates.push_back(rb);
        r.superposition_rates.push_back(rs);
        r.max_relative_difference = std::max(r.max_relative_difference, std::abs(rs / rb - 1.0));
    }
    r.pass = r.max_relative_difference <= tolerance;
    return r;
}

} // namespace fgrlab::excitation
