#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fgrlab/bixon_jortner.hpp"
#include "fgrlab/excitation.hpp"
#include "fgrlab/lindblad.hpp"

using namespace fgrlab;
using namespace fgrlab::lindblad;

namespace {

model::SystemSpec ladder(std::vector<double> e) {
    const auto n = static_cast<Eigen::Index>(e.size());
    Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) X(i, i + 1) = X(i + 1, i) = 1.0;
    return {std::move(e), X};
}

model::SystemSpec vee(double w1, double w2) {
    Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(3, 3);
    X(0, 1) = X(1, 0) = X(0, 2) = X(2, 0) = 1.0;
    return {{0.0, w1, w2}, X};
}

model::BathSpec bath_for(double gamma, double theta, double dw = 0.001, std::size_t count = 32001) {
    return {dw, count, model::coupling_for_rate(gamma, dw), theta};
}

LindbladModel qubit(double nu, double gamma, double theta, bool lamb = false) {
    const auto sys = ladder({0.0, nu});
    const auto bath = bath_for(gamma, theta);
    return build_lindblad(sys, model::build_transition_catalog(sys, bath), bath, {.include_lamb = lamb});
}

Matrix random_density(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> N;
    Matrix A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = cplx(N(rng), N(rng));
    Matrix rho = A * A.adjoint();
    return rho / rho.trace();
}

} // namespace

TEST(Dissipator, HandValues) {
    Matrix c = Matrix::Zero(2, 2);
    const Matrix rho = pure_state(2, 1);
    EXPECT_EQ(dissipator_apply(c, rho).norm(), 0.0);
    c(0, 1) = 1.0;
    Matrix expect = Matrix::Zero(2, 2);
    expect(0, 0) = 1.0;
    expect(1, 1) = -1.0;
    EXPECT_LT((dissipator_apply(c, rho) - expect).norm(), 1e-15);
    EXPECT_THROW(dissipator_apply(Matrix::Zero(3, 3), rho), std::invalid_argument);
}

TEST(Dissipator, TracelessOnRandomInputs) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> N;
    for (int k = 0; k < 50; ++k) {
        const std::size_t n = 2 + k % 5;
        Matrix c(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < c.rows(); ++i)
            for (Eigen::Index j = 0; j < c.cols(); ++j) c(i, j) = cplx(N(rng), N(rng));
        EXPECT_LT(std::abs(dissipator_apply(c, random_density(n, rng)).trace()), 1e-12);
    }
}

TEST(Density, Checks) {
    EXPECT_TRUE(check_density(pure_state(3, 2)).valid);
    Matrix bad = pure_state(2, 0);
    bad(0, 0) = 0.9;
    EXPECT_FALSE(check_density(bad).valid);
    Matrix neg = Matrix::Zero(2, 2);
    neg(0, 0) = 1.2;
    neg(1, 1) = -0.2;
    EXPECT_FALSE(check_density(neg).valid);
}

TEST(Build, QubitChannels) {
    const auto zero = qubit(1.0, 0.01, 0.0);
    ASSERT_EQ(zero.channels.size(), 1u);
    EXPECT_NEAR(zero.channels[0].rate, 0.01, 1e-16);
    EXPECT_EQ(zero.channels[0].jump(0, 1), 1.0);
    EXPECT_EQ(zero.channels[0].jump(1, 0), 0.0);
    const double theta = 1.0 / std::log(2.0);  // n_T(1) = 1
    const auto hot = qubit(1.0, 0.01, theta);
    ASSERT_EQ(hot.channels.size(), 2u);
    EXPECT_NEAR(hot.channels[0].rate, 0.02, 1e-15);
    EXPECT_NEAR(hot.channels[1].rate, 0.01, 1e-15);
    EXPECT_EQ(hot.channels[1].jump(1, 0), 1.0);
    EXPECT_EQ(hot.channels[1].kind, ChannelKind::Absorption);
}

TEST(Build, TwoSeparatedTransitions) {
    const double gamma = 0.025;
    const auto sys = vee(5.5, 5.5 + 40 * gamma);
    const auto bath = bath_for(gamma, 0.0, 0.002, 16001);
    const auto m = build_lindblad(sys, model::build_transition_catalog(sys, bath), bath);
    ASSERT_EQ(m.channels.size(), 2u);
    for (const auto& ch : m.channels) EXPECT_NEAR(ch.rate, gamma, 1e-15);
    const auto close = vee(5.5, 5.5 + gamma);
    const auto cat = model::build_transition_catalog(close, bath);
    EXPECT_THROW(build_lindblad(close, cat, bath), std::invalid_argument);
    const auto forced = build_lindblad(close, cat, bath, {.allow_ambiguous = true});
    EXPECT_EQ(forced.channels.size(), 2u);
    EXPECT_FALSE(forced.warnings.empty());
}

TEST(Build, StrongDampingNeedsOverride) {
    const auto sys = ladder({0.0, 0.2});
    const auto bath = bath_for(0.2, 0.0);
    const auto cat = model::build_transition_catalog(sys, bath);
    EXPECT_THROW(build_lindblad(sys, cat, bath), std::invalid_argument);
    EXPECT_NO_THROW(build_lindblad(sys, cat, bath, {.allow_strong = true}));
}

TEST(Build, LambShiftLowersUpperLevel) {
    const double nu = 5.0, gamma = 0.2;
    const auto m = qubit(nu, gamma, 0.0, true);
    const double cutoff = 32.0;
    EXPECT_NEAR(m.lamb_shifts[1], -gamma / (2 * std::numbers::pi) * std::log((cutoff - nu) / nu), 1e-14);
    EXPECT_EQ(m.lamb_shifts[0], 0.0);
    // A middle ladder level collects shifts from both transitions it takes part in.
    const auto sys = ladder({0.0, 4.0, 9.0});
    const auto bath = bath_for(0.01, 0.0);
    const auto l3 = build_lindblad(sys, model::build_transition_catalog(sys, bath), bath, {.include_lamb = true});
    EXPECT_LT(l3.lamb_shifts[1], 0.0);
    EXPECT_NEAR(l3.lamb_shifts[2], -bj::lamb_shift(0.01, cutoff - 5.0, 5.0), 1e-14);
}

TEST(Propagate, QubitClosedForms) {
    const double nu = 1.0, gamma = 0.05;
    for (double theta : {0.0, 0.7, 2.0}) {
        const auto m = qubit(nu, gamma, theta);
        const double n = model::thermal_occupation(nu, theta);
        Matrix rho0(2, 2);
        rho0 << 0.4, cplx(0.2, 0.1), cplx(0.2, -0.1), 0.6;
        const auto t = bj::uniform_times(60.0, 121);
        const auto tr = propagate_rho(m, rho0, t);
        const double G = gamma * (2 * n + 1), peq = n / (2 * n + 1);
        for (std::size_t j = 0; j < t.size(); ++j) {
            const double pe = peq + (0.6 - peq) * std::exp(-G * t[j]);
            EXPECT_NEAR(tr.states[j](1, 1).real(), pe, 1e-8);
            const cplx coh = cplx(0.2, -0.1) * std::exp(cplx(-0.5 * G * t[j], -nu * t[j]));
            EXPECT_LT(std::abs(tr.states[j](1, 0) - coh), 1e-8);
        }
        EXPECT_LT(tr.max_trace_drift, 1e-9);
        EXPECT_GT(tr.min_eigenvalue, -1e-8);
    }
}

TEST(Propagate, UnitaryWithoutChannels) {
    std::mt19937_64 rng(8);
    LindbladModel m;
    m.energies = {0.0, 1.3, 2.9, 3.1};
    m.lamb_shifts.assign(4, 0.0);
    const Matrix rho0 = random_density(4, rng);
    Eigen::SelfAdjointEigenSolver<Matrix> e0(rho0, Eigen::EigenvaluesOnly);
    const auto tr = propagate_rho(m, rho0, bj::uniform_times(20.0, 21));
    for (const auto& rho : tr.states) {
        Eigen::SelfAdjointEigenSolver<Matrix> e(rho, Eigen::EigenvaluesOnly);
        EXPECT_LT((e.eigenvalues() - e0.eigenvalues()).cwiseAbs().maxCoeff(), 1e-9);
    }
    const double back[2] = {1.0, 0.5};
    EXPECT_THROW(propagate_rho(m, rho0, back), std::invalid_argument);
    EXPECT_THROW(propagate_rho(m, Matrix::Identity(4, 4), bj::uniform_times(1.0, 3)), std::invalid_argument);
}

TEST(Propagate, PopulationsDecoupleFromCoherences) {
    std::mt19937_64 rng(21);
    const auto sys = ladder({0.0, 1.0, 2.7});
    const auto bath = bath_for(0.02, 0.8);
    const auto m = build_lindblad(sys, model::build_transition_catalog(sys, bath), bath);
    const Matrix rho = random_density(3, rng);
    Matrix diag = Matrix::Zero(3, 3);
    for (int i = 0; i < 3; ++i) diag(i, i) = rho(i, i);
    const auto t = bj::uniform_times(50.0, 26);
    const auto a = propagate_rho(m, rho, t), b = propagate_rho(m, diag, t);
    for (std::size_t j = 0; j < t.size(); ++j)
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(a.states[j](i, i).real(), b.states[j](i, i).real(), 1e-9);
}

TEST(SteadyState, QubitAndZeroTemperature) {
    const auto hot = steady_state(qubit(1.0, 0.01, 1.0 / std::log(2.0)));
    EXPECT_NEAR(hot.rho(0, 0).real(), 2.0 / 3.0, 1e-10);
    EXPECT_NEAR(hot.rho(1, 1).real(), 1.0 / 3.0, 1e-10);
    EXPECT_LT(hot.residual, 1e-8);
    const auto cold = steady_state(qubit(1.0, 0.01, 0.0));
    EXPECT_NEAR(cold.rho(0, 0).real(), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(cold.rho(1, 1)), 0.0, 1e-12);
}

TEST(SteadyState, LadderIsBoltzmann) {
    for (double theta : {0.4, 1.3, 5.0}) {
        const auto sys = ladder({0.0, 1.0, 2.7, 3.2});
        const auto bath = bath_for(0.01, theta);
        const auto m = build_lindblad(sys, model::build_transition_catalog(sys, bath), bath);
        const auto ss = steady_state(m);
        const auto boltz = boltzmann_populations(sys.level_energies, theta);
        double l1 = 0.0;
        for (std::size_t i = 0; i < boltz.size(); ++i)
            l1 += std::abs(ss.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real() - boltz[i]);
        EXPECT_LT(l1, 1e-8) << theta;
        EXPECT_LT(ss.residual, 1e-8);
        for (const auto& ch : m.channels)
            if (ch.kind == ChannelKind::Absorption) {
                const auto& down = m.channels[&ch - &m.channels[0] - 1];
                EXPECT_NEAR(ch.rate / down.rate, std::exp(-ch.frequency / theta), 1e-14);
            }
    }
}

TEST(SteadyState, DisconnectedBlocksRejected) {
    Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(3, 3);
    X(0, 1) = X(1, 0) = 1.0;
    const model::SystemSpec sys{{0.0, 1.0, 2.5}, X};
    const auto bath = bath_for(0.01, 1.0);
    const auto m = build_lindblad(sys, model::build_transition_catalog(sys, bath), bath);
    EXPECT_THROW(steady_state(m), std::invalid_argument);
}

TEST(Compare, IdenticalInputs) {
    const auto t = bj::uniform_times(10.0, 101);
    PopulationSeries a{t, {{}}};
    for (double x : t) a.populations[0].push_back(std::exp(-0.3 * x));
    const auto r = compare_micro_vs_mew(a, a);
    EXPECT_EQ(r.max_abs, 0.0);
    EXPECT_EQ(r.levels[0].rms, 0.0);
    EXPECT_NEAR(r.levels[0].lag, 0.0, 1e-6);
}

TEST(Compare, InitialSlipScalesWithBand) {
    const double gamma = 0.2, dw = 0.008;
    std::vector<double> lags;
    for (double omega : {100.0, 20.0}) {
        const auto K = static_cast<std::size_t>(omega / dw);
        const auto spec = bj::QuasiContinuumSpec::uniform(dw, K, K, model::coupling_for_rate(gamma, dw));
        const auto t = bj::uniform_times(25.0, 2501);
        PopulationSeries micro{t, {bj::chebyshev_survival(spec, t).population}}, mew{t, {{}}};
        for (double x : t) mew.populations[0].push_back(std::exp(-gamma * x));
        const auto r = compare_micro_vs_mew(micro, mew, 0.5);
        const double tau = 2 * std::numbers::pi / omega;
        EXPECT_GT(r.levels[0].lag, 0.0);
        EXPECT_LT(r.levels[0].lag, tau);
        EXPECT_LT(r.levels[0].rms_at_lag, 0.5 * r.levels[0].rms);
        lags.push_back(r.levels[0].lag * omega);
    }
    EXPECT_NEAR(lags[0] / lags[1], 1.0, 0.05);
}

TEST(Compare, CloseTransitionsBreakIndependentChannels) {
    excitation::TwoTransitionParams p;
    const auto t = bj::uniform_times(6.0 / p.gamma, 301);
    const auto micro = excitation::two_transition_point(p, p.gamma, excitation::Initial::Upper, t);
    const auto bath = excitation::two_transition_bath(p);
    const auto sys = vee(p.omega, p.omega + p.gamma);
    const auto m = build_lindblad(sys, model::build_transition_catalog(sys, bath), bath, {.allow_ambiguous = true});
    const auto mew = propagate_rho(m, pure_state(3, 2), t);
    const std::size_t levels[2] = {1, 2};
    const auto r = compare_micro_vs_mew({t, {micro.p_low, micro.p_high}}, populations_of(mew, levels));
    EXPECT_GT(r.max_abs, 0.05);
}
