#include <cmath>

#include <gtest/gtest.h>

#include "fgrlab/bixon_jortner.hpp"
#include "fgrlab/parallel.hpp"
#include "fgrlab/stochastic.hpp"

using namespace fgrlab;
using namespace fgrlab::stochastic;

TEST(Occupations, ZeroMeanGivesGroundState) {
    const auto s = sample_occupations(1000, 0.0, 3);
    for (unsigned n : s.occupations) EXPECT_EQ(n, 0u);
    EXPECT_THROW(sample_occupations(10, -1.0, 3), std::invalid_argument);
}

TEST(Occupations, GeometricMoments) {
    const std::size_t count = 200000;
    for (double n : {0.5, 3.0, 10.0}) {
        const auto s = sample_occupations(count, n, 42);
        // Geometric distribution: variance n (n + 1).
        const double sigma = std::sqrt(n * (n + 1.0) / static_cast<double>(count));
        EXPECT_NEAR(s.empirical_mean(), n, 3.0 * sigma) << n;
        std::size_t zeros = 0;
        for (unsigned k : s.occupations) zeros += k == 0;
        const double p0 = 1.0 / (1.0 + n);
        EXPECT_NEAR(static_cast<double>(zeros) / count, p0, 4.0 * std::sqrt(p0 * (1 - p0) / count));
    }
}

TEST(Occupations, SeedAndStreamDeterminism) {
    const auto a = sample_occupations(500, 3.0, 9, 4);
    const auto b = sample_occupations(500, 3.0, 9, 4);
    const auto c = sample_occupations(500, 3.0, 9, 5);
    EXPECT_EQ(a.occupations, b.occupations);
    EXPECT_NE(a.occupations, c.occupations);
}

TEST(Occupations, ThermalMeans) {
    std::vector<double> freq(100000, 1.0);
    const auto s = sample_thermal_occupations(freq, 1.0, 1);
    const double n = model::thermal_occupation(1.0, 1.0);
    EXPECT_NEAR(s.mean_target, n, 1e-12);
    EXPECT_NEAR(s.empirical_mean(), n, 3.0 * std::sqrt(n * (n + 1) / 100000.0));
}

TEST(Couplings, DirectionAndRates) {
    OccupationSample occ;
    occ.occupations = {0, 1, 3, 8};
    const auto down = randomize_couplings(occ, 0.5, Direction::Downward);
    const auto up = randomize_couplings(occ, 0.5, Direction::Upward);
    EXPECT_DOUBLE_EQ(down.couplings[2], 1.0);
    EXPECT_DOUBLE_EQ(up.couplings[3], 0.5 * std::sqrt(8.0));
    EXPECT_EQ(up.couplings[0], 0.0);
    EXPECT_DOUBLE_EQ(up.mean_square(), 0.25 * 12.0 / 4.0);
    EXPECT_DOUBLE_EQ(expected_mean_square(0.5, 3.0, Direction::Downward), 1.0);
    EXPECT_DOUBLE_EQ(expected_mean_square(0.5, 3.0, Direction::Upward), 0.75);
    EXPECT_NEAR(stochastic_golden_rate(6e-6, 40.0 / 65536.0), 0.0618, 1e-4);
    EXPECT_THROW(stochastic_golden_rate(0.0, 1.0), std::invalid_argument);
}

TEST(Ensemble, RmsConstantMatchesUniform) {
    const std::size_t N = 1u << 12;
    const double mu = 4e-3;
    const auto base = symmetric_band(40.0, N, mu);
    EnsembleOptions opt;
    opt.instances = 1;
    opt.rms_constant = true;
    const auto t = bj::uniform_times(40.0, 81);
    const auto ens = ensemble_survival(base, opt, t);
    const auto ref = bj::chebyshev_survival(symmetric_band(40.0, N, mu * std::sqrt(3.0)), t);
    for (std::size_t j = 0; j < t.size(); ++j) {
        EXPECT_NEAR(ens.mean_population[j], ref.population[j], 1e-12);
        EXPECT_EQ(ens.variance[j], 0.0);
    }
}

TEST(Ensemble, ErrorOfMeanShrinksAndThreadsAgree) {
    const std::size_t N = 1u << 12;
    const auto base = symmetric_band(40.0, N, 4e-3);
    const auto t = bj::uniform_times(40.0, 41);
    EnsembleOptions opt;
    opt.seed = 5;
    opt.instances = 40;
    const auto small = ensemble_survival(base, opt, t);
    opt.instances = 160;
    parallel::set_thread_count(1);
    const auto large = ensemble_survival(base, opt, t);
    parallel::set_thread_count(4);
    const auto large4 = ensemble_survival(base, opt, t);
    parallel::set_thread_count(0);
    EXPECT_EQ(large.mean_population, large4.mean_population);
    EXPECT_EQ(small.mean_population[0], 1.0);
    const std::size_t mid = 20;
    EXPECT_GT(large.variance[mid], 0.0);
    EXPECT_LT(large.variance[mid] / 160.0, small.variance[mid] / 40.0);
    EXPECT_THROW(ensemble_survival(base, EnsembleOptions{.instances = 0}, t), std::invalid_argument);
}

TEST(Ensemble, AllZeroCouplingsStayPut) {
    EnsembleOptions opt;
    opt.instances = 3;
    opt.n_mean = 0.0;  // upward couplings g sqrt(0)
    const auto t = bj::uniform_times(10.0, 11);
    const auto ens = ensemble_survival(symmetric_band(40.0, 64, 0.01), opt, t);
    for (double p : ens.mean_population) EXPECT_EQ(p, 1.0);
}

TEST(Deviation, RateMatchesStochasticGoldenRule) {
    DeviationParams p;
    p.ensemble.instances = 200;
    p.ensemble.seed = 7;
    const std::size_t N = 1u << 15;
    const double gamma = 2.0 * std::numbers::pi * 3.0 * p.mu * p.mu / (p.bandwidth / 65536.0);
    const auto t = bj::uniform_times(2.0 / gamma, 161);
    const auto d = deviation_for(N, p, t);
    EXPECT_EQ(d.deviation[0], 0.0);
    EXPECT_NEAR(d.gamma, gamma, 1e-12 * gamma);
    const auto window = bj::default_fit_window(d.gamma, 0.5 * p.bandwidth, d.spacing);
    const double fitted = fit::fit_decay(t, d.ensemble.mean_population, window.begin, window.end).rate;
    const double predicted = stochastic_golden_rate(d.ensemble.mean_square_coupling, d.spacing);
    EXPECT_NEAR(fitted / predicted, 1.0, 0.05);
    EXPECT_LT(d.max_abs_deviation, 0.02);
    const std::size_t bad[2] = {1u << 12, 1u << 11};
    EXPECT_THROW(uniform_vs_random_deviation(bad, p, t), std::invalid_argument);
}
