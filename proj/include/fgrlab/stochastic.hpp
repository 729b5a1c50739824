// stochastic.hpp: Randomised couplings drawn from Boltzmann-sampled oscillator occupations
//
// Level k of the quasi-continuum stands for an oscillator holding n_k quanta,
// so the matrix element that adds a quantum is g sqrt(n_k + 1) and the one
// that removes a quantum is g sqrt(n_k). Ensembles average P(t) over draws.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgrlab/bixon_jortner.hpp"
#include "fgrlab/errors.hpp"
#include "fgrlab/model.hpp"
#include "fgrlab/parallel.hpp"
#include "fgrlab/random.hpp"

namespace fgrlab::stochastic {

struct OccupationSample {
    std::vector<unsigned> occupations;
    std::uint64_t seed{0};
    double mean_target{0.0};

    double empirical_mean() const {
        double s = 0.0;
        for (unsigned n : occupations) s += n;
        return occupations.empty() ? 0.0 : s / static_cast<double>(occupations.size());
    }
};

namespace detail {

inline unsigned draw_geometric(random::Engine& rng, double n_mean) {
    if (n_mean == 0.0) return 0;
    // P(n) = (1 - p) p^n with p = n/(1+n): success probability 1/(1+n).
    std::geometric_distribution<unsigned> dist(1.0 / (1.0 + n_mean));
    return dist(rng);
}

} // namespace detail

// i.i.d. geometric occupations with a single mean (stream selects the instance).
inline OccupationSample sample_occupations(std::size_t count, double n_mean, std::uint64_t seed,
                                           std::uint64_t stream = 0) {
    if (!(n_mean >= 0.0) || !std::isfinite(n_mean))
        throw std::invalid_argument("sample_occupations: mean occupation must be finite and >= 0");
    OccupationSample s;
    s.seed = seed;
    s.mean_target = n_mean;
    s.occupations.resize(count);
    auto rng = random::make_stream(seed, stream, random::Purpose::Occupations);
    for (auto& n : s.occupations) n = detail::draw_geometric(rng, n_mean);
    return s;
}

// Occupation of each oscillator drawn at its own frequency and temperature.
inline OccupationSample sample_thermal_occupations(std::span<const double> frequencies, double theta,
                                                   std::uint64_t seed, std::uint64_t stream = 0) {
    OccupationSample s;
    s.seed = seed;
    s.occupations.resize(frequencies.size());
    auto rng = random::make_stream(seed, stream, random::Purpose::Occupations);
    double mean = 0.0;
    for (std::size_t k = 0; k < frequencies.size(); ++k) {
        const double n = model::thermal_occupation(frequencies[k], theta);
        mean += n;
        s.occupations[k] = detail::draw_geometric(rng, n);
    }
    s.mean_target = frequencies.empty() ? 0.0 : mean / static_cast<double>(frequencies.size());
    return s;
}

enum class Direction { Downward, Upward };

inline const char* to_string(Direction d) { return d == Direction::Downward ? "downward" : "upward"; }

struct RandomizedCouplingSet {
    Direction direction{Direction::Downward};
    double base_coupling{0.0};
    std::vector<double> couplings;

    double mean_square() const {
        double s = 0.0;
        for (double x : couplings) s += x * x;
        return couplings.empty() ? 0.0 : s / static_cast<double>(couplings.size());
    }
};

inline RandomizedCouplingSet randomize_couplings(const OccupationSample& occ, double g, Direction dir) {
    RandomizedCouplingSet r{dir, g, {}};
    r.couplings.resize(occ.occupations.size());
    const double shift = dir == Direction::Downward ? 1.0 : 0.0;
    for (std::size_t k = 0; k < r.couplings.size(); ++k)
        r.couplings[k] = g * std::sqrt(static_cast<double>(occ.occupations[k]) + shift);
    return r;
}

// Ensemble mean square g^2 (n + 1) or g^2 n.
inline double expected_mean_square(double g, double n_mean, Direction dir) {
    return g * g * (n_mean + (dir == Direction::Downward ? 1.0 : 0.0));
}

inline double stochastic_golden_rate(double mean_square_x, double dw) {
    if (!(mean_square_x > 0.0) || !(dw > 0.0))
        throw std::invalid_argument("stochastic_golden_rate: inputs must be positive");
    return 2.0 * std::numbers::pi * mean_square_x / dw;
}

enum class OccupationMode { FixedMean, Thermal };

struct EnsembleOptions {
    std::size_t instances{1000};
    std::uint64_t seed{0};
    Direction direction{Direction::Upward};
    OccupationMode mode{OccupationMode::FixedMean};
    double n_mean{3.0};
    // Thermal mode: level k has oscillator frequency transition_frequency + level_energy(k).
    double transition_frequency{0.0};
    double temperature{0.0};
    // Replace every coupling by the ensemble RMS value g sqrt(<n> + shift).
    bool rms_constant{false};
};

struct EnsembleResult {
    std::vector<double> times;
    std::vector<double> mean_population;
    std::vector<double> variance;  // across instances (unbiased; zero for one instance)
    double mean_square_coupling{0.0};  // empirical <x^2> over all instances and levels
    double mean_occupation{0.0};
    std::size_t instances{0};
};

// Couplings for one instance; the base spec supplies dw, K, M and the bare g.
inline std::vector<double> instance_couplings(const bj::QuasiContinuumSpec& base, const EnsembleOptions& opt,
                                              std::size_t instance, double* mean_occ = nullptr) {
    const std::size_t n = base.level_count();
    const double g = base.uniform_coupling;
    if (opt.rms_constant) {
        double n_mean = opt.n_mean;
        if (opt.mode == OccupationMode::Thermal) {
            n_mean = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                n_mean += model::thermal_occupation(opt.transition_frequency + base.level_energy(k), opt.temperature);
            n_mean /= static_cast<double>(n);
        }
        if (mean_occ) *mean_occ = n_mean;
        return std::vector<double>(n, std::sqrt(expected_mean_square(g, n_mean, opt.direction)));
    }
    OccupationSample occ;
    if (opt.mode == OccupationMode::FixedMean) {
        occ = sample_occupations(n, opt.n_mean, opt.seed, instance);
    } else {
        std::vector<double> freq(n);
        for (std::size_t k = 0; k < n; ++k) freq[k] = opt.transition_frequency + base.level_energy(k);
        occ = sample_thermal_occupations(freq, opt.temperature, opt.seed, instance);
    }
    if (mean_occ) *mean_occ = occ.empirical_mean();
    return randomize_couplings(occ, g, opt.direction).couplings;
}

// Survival probability averaged over instances. Instance i draws from stream i,
// so its couplings do not depend on the instance count or the schedule.
inline EnsembleResult ensemble_survival(const bj::QuasiContinuumSpec& base, const EnsembleOptions& opt,
                                        std::span<const double> times) {
    if (opt.instances < 1) throw std::invalid_argument("ensemble_survival: need at least one instance");
    if (!base.is_uniform()) throw std::invalid_argument("ensemble_survival: base spec must carry a uniform coupling");
    base.validate();
    const std::size_t T = times.size();
    std::vector<std::vector<double>> traces(opt.instances);
    std::vector<double> msq(opt.instances), occ(opt.instances);
    parallel::for_each_index(opt.instances, [&](std::size_t i) {
        try {
            auto g = instance_couplings(base, opt, i, &occ[i]);
            double s = 0.0;
            for (double x : g) s += x * x;
            msq[i] = s / static_cast<double>(g.size());
            bool any = false;
            for (double x : g) any = any || x != 0.0;
            if (!any) {
                // Nothing couples: the state stays put.
                traces[i].assign(T, 1.0);
                return;
            }
            const auto spec = bj::QuasiContinuumSpec::per_level_couplings(base.spacing, base.below, base.above,
                                                                          std::move(g));
            traces[i] = bj::chebyshev_survival(spec, times).population;
        } catch (const std::exception& e) {
            throw NumericalError("ensemble_survival: instance " + std::to_string(i) + ": " + e.what());
        }
    });
    EnsembleResult r;
    r.times.assign(times.begin(), times.end());
    r.instances = opt.instances;
    r.mean_population.assign(T, 0.0);
    r.variance.assign(T, 0.0);
    for (std::size_t i = 0; i < opt.instances; ++i) {
        for (std::size_t j = 0; j < T; ++j) r.mean_population[j] += traces[i][j];
        r.mean_square_coupling += msq[i];
        r.mean_occupation += occ[i];
    }
    const double inv = 1.0 / static_cast<double>(opt.instances);
    for (auto& p : r.mean_population) p *= inv;
    r.mean_square_coupling *= inv;
    r.mean_occupation *= inv;
    if (opt.instances > 1) {
        for (std::size_t i = 0; i < opt.instances; ++i)
            for (std::size_t j = 0; j < T; ++j) {
                const double d = traces[i][j] - r.mean_population[j];
                r.variance[j] += d * d;
            }
        for (auto& v : r.variance) v /= static_cast<double>(opt.instances - 1);
    }
    return r;
}

// Deviation-scan family: symmetric band of total width W, bare coupling mu, and a
// uniform reference with g = sqrt(<x^2>). The bare coupling is rescaled as
// mu^2 ~ 1/N so that every N has the same golden-rule rate.
struct DeviationParams {
    double bandwidth{40.0};
    double mu{std::sqrt(2.0) * 1e-3};
    std::size_t reference_levels{1u << 16};
    EnsembleOptions ensemble{};
};

struct DeviationTrace {
    std::size_t levels{0};  // N
    double spacing{0.0};
    double bare_coupling{0.0};
    double uniform_coupling{0.0};
    double gamma{0.0};
    std::vector<double> uniform_population;
    EnsembleResult ensemble;
    std::vector<double> deviation;  // ensemble mean - uniform
    double max_abs_deviation{0.0};  // over t <= 2/gamma
};

inline bj::QuasiContinuumSpec symmetric_band(double bandwidth, std::size_t N, double g) {
    if (N < 2 || N % 2 != 0) throw std::invalid_argument("symmetric_band: N must be even and >= 2");
    return bj::QuasiContinuumSpec::uniform(bandwidth / static_cast<double>(N), N / 2, N / 2, g);
}

inline DeviationTrace deviation_for(std::size_t N, const DeviationParams& p, std::span<const double> times) {
    DeviationTrace d;
    d.levels = N;
    d.spacing = p.bandwidth / static_cast<double>(N);
    d.bare_coupling = p.mu * std::sqrt(static_cast<double>(p.reference_levels) / static_cast<double>(N));
    d.uniform_coupling = std::sqrt(expected_mean_square(d.bare_coupling, p.ensemble.n_mean, p.ensemble.direction));
    d.gamma = model::golden_rate(d.uniform_coupling, d.spacing);
    d.uniform_population =
        bj::chebyshev_survival(symmetric_band(p.bandwidth, N, d.uniform_coupling), times).population;
    d.ensemble = ensemble_survival(symmetric_band(p.bandwidth, N, d.bare_coupling), p.ensemble, times);
    d.deviation.resize(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) {
        d.deviation[j] = d.ensemble.mean_population[j] - d.uniform_population[j];
        if (times[j] <= 2.0 / d.gamma) d.max_abs_deviation = std::max(d.max_abs_deviation, std::abs(d.deviation[j]));
    }
    return d;
}

inline std::vector<DeviationTrace> uniform_vs_random_deviation(std::span<const std::size_t> levels,
                                                               const DeviationParams& p,
                                                               std::span<const double> times) {
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (levels[i] <= levels[i - 1])
            throw std::invalid_argument("uniform_vs_random_deviation: N list must be ascending");
    std::vector<DeviationTrace> out;
    for (std::size_t N : levels) out.push_back(deviation_for(N, p, times));
    return out;
}

} // namespace fgrlab::stochastic
