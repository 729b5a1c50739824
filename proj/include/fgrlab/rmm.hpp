// rmm.hpp: Random-matrix bath with an exponential density of states
//
// Bath levels E_k fill [E_min, E_max] with density rho(E) ~ exp(beta E) on a
// deterministic inverse-CDF grid. A two-level system (0, dE) couples through
// X (x) Y with X = sigma_x and Y a real symmetric Gaussian matrix
// (off-diagonal variance eps^2, diagonal 2 eps^2). In the basis
// (|g>|k>, |e>|k>):
//
//    H = [ diag(E)   Y            ]
//        [ Y         dE + diag(E) ]
//
// The golden-rule downward rate is 2 pi eps^2 rho(E_dest), so a system that
// reaches |e> with the bath at E decays at a rate set by rho(E + dE).

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fgrlab/bixon_jortner.hpp"
#include "fgrlab/chebyshev.hpp"
#include "fgrlab/errors.hpp"
#include "fgrlab/fitting.hpp"
#include "fgrlab/model.hpp"
#include "fgrlab/parallel.hpp"
#include "fgrlab/random.hpp"
#include "fgrlab/stochastic.hpp"

namespace fgrlab::rmm {

using cplx = std::complex<double>;

struct RmmBathSpec {
    std::size_t level_count{2000};
    double beta{1.0};  // density ~ exp(beta E); beta = 0 gives a uniform grid
    double energy_min{0.0};
    double energy_max{3.2};
    double coupling{std::sqrt(1.89e-5)};  // eps
    std::uint64_t seed{0};
    std::size_t bandwidth{0};  // |i - j| > bandwidth entries of Y vanish; 0 keeps Y full
    double min_spacing{0.0};   // smallest admissible grid spacing

    void validate() const {
        if (level_count < 2) throw std::invalid_argument("RmmBathSpec: need at least two levels");
        if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("RmmBathSpec: beta must be >= 0");
        if (!(energy_max > energy_min)) throw std::invalid_argument("RmmBathSpec: empty energy window");
        if (!(coupling >= 0.0)) throw std::invalid_argument("RmmBathSpec: coupling must be >= 0");
    }

    double effective_temperature() const {
        return beta > 0.0 ? 1.0 / beta : std::numeric_limits<double>::infinity();
    }

    // Continuum density of the grid, (N_b - 1) beta e^{beta E} / (e^{beta E_max} - e^{beta E_min}).
    double density(double e) const {
        const double w = energy_max - energy_min;
        const double n = static_cast<double>(level_count - 1);
        if (beta == 0.0) return n / w;
        return n * beta * std::exp(beta * (e - energy_min)) / std::expm1(beta * w);
    }
};

// E_k = F^{-1}(k / (N_b - 1)): the grid spans the window with density exactly rho(E).
inline std::vector<double> build_rmm_bath(const RmmBathSpec& spec) {
    spec.validate();
    const std::size_t n = spec.level_count;
    const double w = spec.energy_max - spec.energy_min;
    std::vector<double> e(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(n - 1);
        e[k] = spec.beta == 0.0 ? spec.energy_min + u * w
                                : spec.energy_min + std::log1p(u * std::expm1(spec.beta * w)) / spec.beta;
    }
    e.back() = spec.energy_max;
    // The densest spacing is at the top of the window.
    const double top = e.back() - e[n - 2];
    if (!(top > std::max(spec.min_spacing, 1e-12 * w)))
        throw std::invalid_argument("build_rmm_bath: window too narrow for " + std::to_string(n) +
                                    " levels (top spacing " + std::to_string(top) + ", minimum " +
                                    std::to_string(spec.min_spacing) + ")");
    return e;
}

inline Eigen::MatrixXd sample_random_coupling(std::size_t n, double eps, std::uint64_t seed, std::size_t bandwidth = 0) {
    if (!(eps >= 0.0)) throw std::invalid_argument("sample_random_coupling: eps must be >= 0");
    auto rng = random::make_stream(seed, 0, random::Purpose::Coupling);
    std::normal_distribution<double> N(0.0, 1.0);
    const auto m = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i; j < m; ++j) {
            // Draw every entry regardless of bandwidth so banded and full Y share samples.
            const double z = N(rng);
            if (bandwidth > 0 && static_cast<std::size_t>(j - i) > bandwidth) continue;
            Y(i, j) = Y(j, i) = (i == j ? std::sqrt(2.0) : 1.0) * eps * z;
        }
    return Y;
}

struct RmmJointModel {
    RmmBathSpec spec;
    double level_gap{1.0};   // dE
    std::vector<double> bath_energies;
    Eigen::MatrixXd Y;

    std::size_t bath_size() const { return bath_energies.size(); }
    std::size_t dimension() const { return 2 * bath_size(); }

    // y = H x, x laid out as (g block, e block).
    void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
        const auto n = static_cast<Eigen::Index>(bath_size());
        Eigen::MatrixXd blocks(n, 4);
        blocks.col(0) = x.head(n).real();
        blocks.col(1) = x.head(n).imag();
        blocks.col(2) = x.tail(n).real();
        blocks.col(3) = x.tail(n).imag();
        const Eigen::MatrixXd Yb = Y * blocks;
        y.resize(2 * n);
        for (Eigen::Index k = 0; k < n; ++k) {
            const double e = bath_energies[static_cast<std::size_t>(k)];
            y(k) = e * x(k) + cplx(Yb(k, 2), Yb(k, 3));
            y(n + k) = (e + level_gap) * x(n + k) + cplx(Yb(k, 0), Yb(k, 1));
        }
    }

    Eigen::MatrixXd dense() const {
        const auto n = static_cast<Eigen::Index>(bath_size());
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        for (Eigen::Index k = 0; k < n; ++k) {
            H(k, k) = bath_energies[static_cast<std::size_t>(k)];
            H(n + k, n + k) = H(k, k) + level_gap;
        }
        H.topRightCorner(n, n) = Y;
        H.bottomLeftCorner(n, n) = Y;
        return H;
    }

    // Extreme Ritz values of a Lanczos run, widened by twice the largest
    // Ritz residual plus 2% of the width. Never wider than the diagonal range
    // padded by ||Y||_inf >= ||Y||_2. A bound that is too tight shows up as
    // norm drift in propagate().
    chebyshev::Interval spectral_bounds(std::size_t lanczos_steps = 80) const {
        const double ynorm = Y.size() ? Y.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
        const chebyshev::Interval safe{bath_energies.front() - ynorm, bath_energies.back() + level_gap + ynorm};
        const auto n = static_cast<Eigen::Index>(dimension());
        const auto k = static_cast<Eigen::Index>(std::min<std::size_t>(lanczos_steps, dimension()));
        if (k < 4) return safe;
        Eigen::VectorXcd v = Eigen::VectorXcd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
        for (Eigen::Index i = 0; i < n; ++i) v(i) *= 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i));
        v.normalize();
        Eigen::MatrixXcd V(n, k);
        Eigen::VectorXd alpha(k), beta(k);
        Eigen::VectorXcd w;
        Eigen::Index m = k;
        for (Eigen::Index j = 0; j < k; ++j) {
            V.col(j) = v;
            apply(v, w);
            alpha(j) = v.dot(w).real();
            w -= alpha(j) * v;
            if (j > 0) w -= beta(j - 1) * V.col(j - 1);
            w -= V.leftCols(j + 1) * (V.leftCols(j + 1).adjoint() * w);  // full reorthogonalisation
            beta(j) = w.norm();
            if (beta(j) < 1e-12) {
                m = j + 1;
                break;
            }
            v = w / beta(j);
        }
        Eigen::MatrixXd Tm = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index j = 0; j < m; ++j) {
            Tm(j, j) = alpha(j);
            if (j + 1 < m) Tm(j, j + 1) = Tm(j + 1, j) = beta(j);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tm);
        const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(m - 1);
        const double rlo = std::abs(beta(m - 1) * es.eigenvectors()(m - 1, 0));
        const double rhi = std::abs(beta(m - 1) * es.eigenvectors()(m - 1, m - 1));
        const double pad = 0.02 * (hi - lo);
        return {std::max(safe.lower, lo - 2.0 * rlo - pad), std::min(safe.upper, hi + 2.0 * rhi + pad)};
    }
};

inline RmmJointModel build_rmm_model(const RmmBathSpec& spec, double level_gap = 1.0) {
    if (!(level_gap > 0.0)) throw std::invalid_argument("build_rmm_model: level gap must be positive");
    RmmJointModel m;
    m.spec = spec;
    m.level_gap = level_gap;
    m.bath_energies = build_rmm_bath(spec);
    m.Y = sample_random_coupling(spec.level_count, spec.coupling, spec.seed, spec.bandwidth);
    return m;
}

// ---------------------------------------------------------------------------
// Propagation and protocols
// ---------------------------------------------------------------------------

enum class Protocol { StartExcited, StartGroundThenUp };

inline const char* to_string(Protocol p) {
    return p == Protocol::StartExcited ? "start-excited" : "start-ground-then-up";
}

struct BathWindow {
    double center{1.6};
    double width{0.4};
};

// Uniform-amplitude, random-phase bath state on the levels inside the window.
inline Eigen::VectorXcd initial_state(const RmmJointModel& m, Protocol p, BathWindow w, std::uint64_t stream = 0) {
    const auto n = static_cast<Eigen::Index>(m.bath_size());
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(2 * n);
    auto rng = random::make_stream(m.spec.seed, stream, random::Purpose::Phases);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const Eigen::Index offset = p == Protocol::StartExcited ? n : 0;
    std::size_t count = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double e = m.bath_energies[static_cast<std::size_t>(k)];
        const double ph = phase(rng);  // one draw per level keeps phases window-independent
        if (std::abs(e - w.center) <= 0.5 * w.width) {
            psi(offset + k) = std::polar(1.0, ph);
            ++count;
        }
    }
    if (count == 0)
        throw std::invalid_argument("initial_state: no bath levels inside the window around " +
                                    std::to_string(w.center));
    psi /= std::sqrt(static_cast<double>(count));
    return psi;
}

struct RmmTrace {
    std::vector<double> times;
    std::vector<double> excited_population;
    double max_norm_drift{0.0};
};

inline RmmTrace propagate(const RmmJointModel& m, const Eigen::VectorXcd& psi0, std::span<const double> times) {
    const auto n = static_cast<Eigen::Index>(m.bath_size());
    auto apply = [&](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) { m.apply(x, y); };
    const auto states = chebyshev::evolve(apply, psi0, m.spectral_bounds(), times);
    RmmTrace tr;
    tr.times.assign(times.begin(), times.end());
    for (const auto& s : states) {
        tr.excited_population.push_back(s.tail(n).squaredNorm());
        tr.max_norm_drift = std::max(tr.max_norm_drift, std::abs(s.squaredNorm() - 1.0));
    }
    if (tr.max_norm_drift > 1e-9)
        throw NumericalError("rmm::propagate: norm drift " + std::to_string(tr.max_norm_drift));
    return tr;
}

struct ProtocolResult {
    Protocol protocol{Protocol::StartExcited};
    RmmTrace trace;
    fit::RelaxationFit fit;
    double destination_energy{0.0};  // bath energy after the downward jump
    double predicted_down_rate{0.0};
    double peak_excitation{0.0};
};

struct ExperimentOptions {
    BathWindow window{};
    double fit_begin{2.0};
};

// Both protocols are analysed with the two-state relaxation model
// P_e(t) = P_inf + A e^{-Gamma t}, whose downward rate is Gamma (1 - P_inf).
inline ProtocolResult rmm_rate_experiment(const RmmJointModel& m, Protocol p, std::span<const double> times,
                                          const ExperimentOptions& opt = {}) {
    ProtocolResult r;
    r.protocol = p;
    r.trace = propagate(m, initial_state(m, p, opt.window), times);
    r.peak_excitation = *std::max_element(r.trace.excited_population.begin(), r.trace.excited_population.end());
    if (p == Protocol::StartGroundThenUp && r.peak_excitation < 1e-3)
        throw NumericalError("rmm_rate_experiment: peak excitation " + std::to_string(r.peak_excitation) +
                             " below 1e-3; increase the coupling");
    // StartExcited lands at E_bath + dE; a quantum taken from the bath returns it to E_bath.
    r.destination_energy = p == Protocol::StartExcited ? opt.window.center + m.level_gap : opt.window.center;
    const double eps2 = m.spec.coupling * m.spec.coupling;
    r.predicted_down_rate = 2.0 * std::numbers::pi * eps2 * m.spec.density(r.destination_energy);
    r.fit = fit::fit_relaxation(times, r.trace.excited_population, opt.fit_begin, times.back());
    return r;
}

struct MeanWithError {
    double mean{0.0};
    double stderr_{0.0};
    std::size_t samples{0};
};

inline MeanWithError mean_with_error(std::span<const double> xs) {
    MeanWithError m;
    m.samples = xs.size();
    if (xs.empty()) return m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double v = 0.0;
        for (double x : xs) v += (x - m.mean) * (x - m.mean);
        m.stderr_ = std::sqrt(v / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    }
    return m;
}

// Leave-one-out jackknife of a statistic computed from the pooled samples.
template <typename Stat>
MeanWithError jackknife(std::size_t samples, Stat&& stat) {
    MeanWithError r;
    r.samples = samples;
    std::vector<std::size_t> all(samples);
    std::iota(all.begin(), all.end(), std::size_t{0});
    r.mean = stat(std::span<const std::size_t>(all));
    if (samples < 2) return r;
    std::vector<double> loo(samples);
    std::vector<std::size_t> keep;
    for (std::size_t s = 0; s < samples; ++s) {
        keep.clear();
        for (std::size_t k = 0; k < samples; ++k)
            if (k != s) keep.push_back(k);
        loo[s] = stat(std::span<const std::size_t>(keep));
    }
    const double bar = std::accumulate(loo.begin(), loo.end(), 0.0) / static_cast<double>(samples);
    double v = 0.0;
    for (double x : loo) v += (x - bar) * (x - bar);
    r.stderr_ = std::sqrt(v * static_cast<double>(samples - 1) / static_cast<double>(samples));
    return r;
}

struct StateDependenceReport {
    // Per seed: relaxation fits of each realisation.
    std::vector<double> excited_rates, ground_rates, ratios;
    MeanWithError per_seed_ratio;
    // Pooled: fits of the seed-averaged traces, jackknife errors over seeds.
    std::vector<double> times, mean_excited_trace, mean_ground_trace;
    MeanWithError excited, ground, ratio;
    double predicted_excited{0.0}, predicted_ground{0.0};
    double predicted_ratio{1.0};
    double deviation_in_se{0.0};  // (pooled ratio - 1) / jackknife SE
};

// Each seed draws its own Y and bath phases. Rates come from relaxation fits of
// the seed-averaged P_e(t); single realisations carry O(1) finite-size
// fluctuations that a fit of the mean averages out.
inline StateDependenceReport rmm_state_dependence(const RmmBathSpec& base, double level_gap,
                                                  std::span<const std::uint64_t> seeds, std::span<const double> times,
                                                  const ExperimentOptions& opt = {}) {
    if (seeds.size() < 2) throw std::invalid_argument("rmm_state_dependence: need at least two seeds");
    const std::size_t S = seeds.size(), T = times.size();
    StateDependenceReport rep;
    rep.times.assign(times.begin(), times.end());
    rep.excited_rates.resize(S);
    rep.ground_rates.resize(S);
    rep.ratios.resize(S);
    std::vector<std::vector<double>> traces[2];
    traces[0].resize(S);
    traces[1].resize(S);
    for (std::size_t s = 0; s < S; ++s) {
        RmmBathSpec spec = base;
        spec.seed = seeds[s];
        const auto m = build_rmm_model(spec, level_gap);
        ProtocolResult res[2];
        parallel::for_each_index(2, [&](std::size_t i) {
            res[i] = rmm_rate_experiment(m, i == 0 ? Protocol::StartExcited : Protocol::StartGroundThenUp, times, opt);
        });
        for (int i = 0; i < 2; ++i) traces[i][s] = res[i].trace.excited_population;
        rep.excited_rates[s] = res[0].fit.down_rate;
        rep.ground_rates[s] = res[1].fit.down_rate;
        rep.ratios[s] = res[0].fit.down_rate / res[1].fit.down_rate;
        rep.predicted_excited = res[0].predicted_down_rate;
        rep.predicted_ground = res[1].predicted_down_rate;
    }
    rep.predicted_ratio = rep.predicted_excited / rep.predicted_ground;
    rep.per_seed_ratio = mean_with_error(rep.ratios);

    auto mean_trace = [&](int protocol, std::span<const std::size_t> subset) {
        std::vector<double> m(T, 0.0);
        for (std::size_t s : subset)
            for (std::size_t j = 0; j < T; ++j) m[j] += traces[protocol][s][j] / static_cast<double>(subset.size());
        return m;
    };
    auto down_rate = [&](int protocol, std::span<const std::size_t> subset) {
        return fit::fit_relaxation(times, mean_trace(protocol, subset), opt.fit_begin, times.back()).down_rate;
    };
    rep.excited = jackknife(S, [&](std::span<const std::size_t> k) { return down_rate(0, k); });
    rep.ground = jackknife(S, [&](std::span<const std::size_t> k) { return down_rate(1, k); });
    rep.ratio = jackknife(S, [&](std::span<const std::size_t> k) { return down_rate(0, k) / down_rate(1, k); });
    std::vector<std::size_t> all(S);
    std::iota(all.begin(), all.end(), std::size_t{0});
    rep.mean_excited_trace = mean_trace(0, all);
    rep.mean_ground_trace = mean_trace(1, all);
    rep.deviation_in_se = rep.ratio.stderr_ > 0.0 ? (rep.ratio.mean - 1.0) / rep.ratio.stderr_ : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Oscillator-bath control
// ---------------------------------------------------------------------------

// The same two protocols for a harmonic bath: the downward coupling to
// oscillator k is g sqrt(n_k + 1). Reaching |e> by absorption removes one
// quantum from an oscillator drawn with probability ~ n_k; the decay that
// follows is computed with that occupation lowered by one.
struct ControlOptions {
    std::size_t levels{1u << 12};   // quasi-continuum size N (symmetric band)
    double bandwidth{40.0};
    double gamma{0.05};             // zero-temperature rate 2 pi g^2 / dw
    double n_mean{1.0 / std::numbers::e_v<double> / (1.0 - 1.0 / std::numbers::e_v<double>)};  // n_T at beta dE = 1
    std::size_t instances{20};
};

struct ControlReport {
    std::vector<double> excited_rates, ground_rates, ratios;
    MeanWithError ratio;
    double deviation_in_se{0.0};
};

inline ControlReport oscillator_control(std::span<const std::uint64_t> seeds, const ControlOptions& opt = {}) {
    if (seeds.size() < 2) throw std::invalid_argument("oscillator_control: need at least two seeds");
    const std::size_t N = opt.levels;
    const double dw = opt.bandwidth / static_cast<double>(N);
    const double g = model::coupling_for_rate(opt.gamma, dw);
    const auto base = stochastic::symmetric_band(opt.bandwidth, N, g);
    const double gamma_down = opt.gamma * (opt.n_mean + 1.0);
    const auto times = bj::uniform_times(2.0 / gamma_down, 161);
    const auto window = bj::default_fit_window(gamma_down, 0.5 * opt.bandwidth, dw);
    ControlReport rep;
    for (std::uint64_t seed : seeds) {
        double rate[2];
        for (int protocol = 0; protocol < 2; ++protocol) {
            std::vector<std::vector<double>> traces(opt.instances);
            parallel::for_each_index(opt.instances, [&](std::size_t i) {
                // Independent draws per protocol: stream 2i or 2i + 1.
                const std::uint64_t stream = 2 * i + static_cast<std::uint64_t>(protocol);
                auto occ = stochastic::sample_occupations(base.level_count(), opt.n_mean, seed, stream);
                if (protocol == 1) {
                    auto rng = random::make_stream(seed, stream, random::Purpose::Donor);
                    std::vector<double> w(occ.occupations.begin(), occ.occupations.end());
                    if (std::any_of(w.begin(), w.end(), [](double x) { return x > 0.0; })) {
                        std::discrete_distribution<std::size_t> donor(w.begin(), w.end());
                        --occ.occupations[donor(rng)];
                    }
                }
                auto c = stochastic::randomize_couplings(occ, g, stochastic::Direction::Downward).couplings;
                const auto spec = bj::QuasiContinuumSpec::per_level_couplings(dw, base.below, base.above, std::move(c));
                traces[i] = bj::chebyshev_survival(spec, times).population;
            });
            std::vector<double> mean(times.size(), 0.0);
            for (const auto& tr : traces)
                for (std::size_t j = 0; j < times.size(); ++j) mean[j] += tr[j] / static_cast<double>(opt.instances);
            rate[protocol] = fit::fit_decay(times, mean, window.begin, window.end).rate;
        }
        rep.excited_rates.push_back(rate[0]);
        rep.ground_rates.push_back(rate[1]);
        rep.ratios.push_back(rate[0] / rate[1]);
    }
    rep.ratio = mean_with_error(rep.ratios);
    rep.deviation_in_se = rep.ratio.stderr_ > 0.0 ? (rep.ratio.mean - 1.0) / rep.ratio.stderr_ : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Thermalisation
// ---------------------------------------------------------------------------

struct ThermalizationReport {
    double mean_excited{0.0};  // long-time average of P_e over the second half of the grid
    double population_ratio{0.0};  // P_e / P_g
    double boltzmann_ratio{0.0};   // e^{-beta dE}
    double l1_distance{0.0};
    double max_population_change{0.0};
};

inline ThermalizationReport rmm_thermalization_check(const RmmJointModel& m, std::span<const double> times,
                                                     BathWindow window = {}, Protocol p = Protocol::StartExcited) {
    const auto tr = propagate(m, initial_state(m, p, window), times);
    ThermalizationReport r;
    std::size_t cnt = 0;
    const double half = 0.5 * (times.front() + times.back());
    for (std::size_t j = 0; j < times.size(); ++j) {
        r.max_population_change = std::max(r.max_population_change,
                                           std::abs(tr.excited_population[j] - tr.excited_population[0]));
        if (times[j] < half) continue;
        r.mean_excited += tr.excited_population[j];
        ++cnt;
    }
    r.mean_excited /= static_cast<double>(std::max<std::size_t>(cnt, 1));
    r.population_ratio = r.mean_excited / (1.0 - r.mean_excited);
    r.boltzmann_ratio = std::exp(-m.spec.beta * m.level_gap);
    const double pe = r.boltzmann_ratio / (1.0 + r.boltzmann_ratio);
    r.l1_distance = 2.0 * std::abs(r.mean_excited - pe);
    return r;
}

} // namespace fgrlab::rmm
