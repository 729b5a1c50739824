#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fgrlab/model.hpp"

using namespace fgrlab::model;

namespace {

SystemSpec ladder(std::vector<double> energies, bool couple_ends = false) {
    const auto n = static_cast<Eigen::Index>(energies.size());
    Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) X(i, i + 1) = X(i + 1, i) = 1.0;
    if (couple_ends && n > 2) X(0, n - 1) = X(n - 1, 0) = 1.0;
    return {std::move(energies), X};
}

BathSpec bath_for_rate(double gamma, double dw = 0.001, double theta = 0.0) {
    return {dw, 32001, coupling_for_rate(gamma, dw), theta};
}

} // namespace

TEST(ThermalOccupation, Values) {
    EXPECT_NEAR(thermal_occupation(0.7 * std::log(2.0), 0.7), 1.0, 1e-14);
    EXPECT_EQ(thermal_occupation(1.0, 0.0), 0.0);
    EXPECT_NEAR(thermal_occupation(1.0, 1.0), 0.5819767068693265, 1e-15);
    EXPECT_THROW(thermal_occupation(0.0, 1.0), std::domain_error);
    EXPECT_THROW(thermal_occupation(-1.0, 1.0), std::domain_error);
}

TEST(ThermalOccupation, MonotoneAndClassicalLimit) {
    double prev = thermal_occupation(0.1, 1.0);
    for (double w = 0.2; w < 10.0; w += 0.1) {
        const double n = thermal_occupation(w, 1.0);
        EXPECT_LT(n, prev);
        prev = n;
    }
    prev = thermal_occupation(1.0, 0.1);
    for (double th = 0.2; th < 10.0; th += 0.1) {
        const double n = thermal_occupation(1.0, th);
        EXPECT_GT(n, prev);
        prev = n;
    }
    const double theta = 3.0, w = 1e-6 * theta;
    EXPECT_NEAR(thermal_occupation(w, theta) / (theta / w), 1.0, 1e-4);
}

TEST(GoldenRate, Values) {
    EXPECT_NEAR(golden_rate(0.3, 0.3), 2.0 * std::numbers::pi * 0.3, 1e-15);
    EXPECT_NEAR(golden_rate(std::sqrt(6e-6), 40.0 / 65536.0), 0.0618, 1e-4);
    EXPECT_NEAR(golden_rate(0.001, 0.001), 0.006283, 1e-6);
    EXPECT_THROW(golden_rate(0.0, 1.0), std::invalid_argument);
}

TEST(GoldenRate, RefinementInvariance) {
    const double g = 0.013, dw = 0.002, gamma = golden_rate(g, dw);
    for (int m = 2; m <= 64; m *= 2)
        EXPECT_NEAR(golden_rate(g / std::sqrt(m), dw / m), gamma, 1e-14 * gamma);
    EXPECT_NEAR(golden_rate(coupling_for_rate(0.025, 0.003), 0.003), 0.025, 1e-16);
}

TEST(JumpRates, Values) {
    const auto zero = jump_rates(1.0, 1.0, 0.0);
    EXPECT_EQ(zero.up, 0.0);
    EXPECT_EQ(zero.down, 1.0);
    const double theta = 0.8;
    const auto one = jump_rates(1.0, theta * std::log(2.0), theta);
    EXPECT_NEAR(one.up, 1.0, 1e-14);
    EXPECT_NEAR(one.down, 2.0, 1e-14);
    const auto fig5 = jump_rates(0.025, 5.5, 0.0);
    EXPECT_EQ(fig5.up, 0.0);
    EXPECT_EQ(fig5.down, 0.025);
    EXPECT_THROW(jump_rates(1.0, 0.0, 1.0), std::domain_error);
}

TEST(JumpRates, DetailedBalance) {
    for (double nu : {0.1, 1.0, 5.5}) {
        for (double theta : {0.3, 1.0, 4.0}) {
            const auto r = jump_rates(0.7, nu, theta);
            EXPECT_NEAR(r.down - r.up, 0.7, 1e-14 * r.down);
            EXPECT_NEAR(r.up / r.down, std::exp(-nu / theta), 4e-16);
        }
    }
}

TEST(Catalog, QubitSingleGroup) {
    const auto cat = build_transition_catalog(ladder({0.0, 1.0}), bath_for_rate(0.01));
    ASSERT_EQ(cat.groups.size(), 1u);
    EXPECT_EQ(cat.groups[0].degeneracy(), 1u);
    Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(2, 2);
    L(0, 1) = 1.0;
    EXPECT_LT((cat.groups[0].jump_operator - L).norm(), 1e-15);
    EXPECT_NEAR(cat.groups[0].rate, 0.01, 1e-15);
}

TEST(Catalog, EquallySpacedLadderIsDegenerate) {
    const double w = 2.0;
    const auto cat = build_transition_catalog(ladder({0.0, w, 2.0 * w}), bath_for_rate(0.01));
    ASSERT_EQ(cat.groups.size(), 1u);
    EXPECT_EQ(cat.groups[0].degeneracy(), 2u);
    EXPECT_NEAR(cat.groups[0].frequency, w, 1e-15);
    Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(3, 3);
    L(0, 1) = L(1, 2) = 1.0;
    EXPECT_LT((cat.groups[0].jump_operator - L).norm(), 1e-15);
    EXPECT_EQ(cat.ambiguous_count(), 0u);
}

TEST(Catalog, NearDegenerateLadderFlaggedAmbiguous) {
    const double gamma = 0.025;
    const auto cat = build_transition_catalog(ladder({0.0, 5.5, 11.05}), bath_for_rate(gamma), 0.1, 10.0);
    ASSERT_EQ(cat.groups.size(), 2u);
    ASSERT_EQ(cat.grouping_report.size(), 1u);
    const auto& p = cat.grouping_report[0];
    EXPECT_NEAR(p.separation, 0.05, 1e-12);
    // 0.1 * gamma < 0.05 < 10 * gamma
    EXPECT_GT(p.separation, 0.1 * gamma);
    EXPECT_LT(p.separation, 10.0 * gamma);
    EXPECT_EQ(p.classification, PairClass::Ambiguous);
    EXPECT_FALSE(weak_damping_report(cat).applicable);
}

TEST(Catalog, PartitionProperty) {
    const auto sys = ladder({0.0, 1.0, 2.0, 3.5, 7.0}, true);
    const auto cat = build_transition_catalog(sys, bath_for_rate(0.001));
    std::vector<int> seen(cat.transitions.size(), 0);
    for (const auto& g : cat.groups)
        for (auto m : g.members) ++seen[m];
    for (int s : seen) EXPECT_EQ(s, 1);
    EXPECT_EQ(cat.transitions.size(), 5u);
    EXPECT_EQ(cat.transitions.size(), cat.groups[0].degeneracy() + (cat.groups.size() - 1));
}

TEST(Catalog, ZeroFrequencyCoupledLevelsRejected) {
    EXPECT_THROW(build_transition_catalog(ladder({0.0, 0.0}), bath_for_rate(0.01)), std::invalid_argument);
    SystemSpec bad = ladder({0.0, 1.0});
    bad.coupling_operator(0, 0) = 1.0;
    EXPECT_THROW(build_transition_catalog(bad, bath_for_rate(0.01)), std::invalid_argument);
    EXPECT_THROW(build_transition_catalog(ladder({0.0, 1.0}), bath_for_rate(0.01), 10.0, 1.0),
                 std::invalid_argument);
}

TEST(WeakDamping, Ratios) {
    const auto fig5 = weak_damping_report(build_transition_catalog(ladder({0.0, 5.5}), bath_for_rate(0.025)));
    ASSERT_EQ(fig5.transitions.size(), 1u);
    EXPECT_NEAR(fig5.transitions[0].ratio, 0.025 / 5.5, 1e-12);
    EXPECT_TRUE(fig5.applicable);
    const auto strong = weak_damping_report(build_transition_catalog(ladder({0.0, 0.2}), bath_for_rate(0.2)));
    EXPECT_FALSE(strong.applicable);
    EXPECT_FALSE(strong.warnings.empty());
    SystemSpec lone{{0.0, 1.0}, Eigen::MatrixXcd::Zero(2, 2)};
    const auto empty = weak_damping_report(build_transition_catalog(lone, bath_for_rate(0.01)));
    EXPECT_TRUE(empty.applicable);
    ASSERT_EQ(empty.warnings.size(), 1u);
}

TEST(TimescaleChain, TwoTransitionBath) {
    // Independent evaluation of the three links at the 128001-oscillator bath.
    const double dw = 32.0 / 128000.0, omega = 5.5, g = coupling_for_rate(0.025, dw);
    const BathSpec bath{dw, 128001, g, 0.0};
    const auto r = timescale_chain_report(bath, omega, g);
    EXPECT_NEAR(r.links[0].ratio, std::sqrt(32.0 / 5.5), 1e-9);
    EXPECT_NEAR(r.links[1].ratio, std::sqrt(omega / dw) / (g / dw), 1e-9);
    EXPECT_NEAR(r.links[2].ratio, g / dw, 1e-9);
    // sqrt(32/5.5) = 2.41: the first link is not "much greater" at threshold 10.
    EXPECT_FALSE(r.links[0].pass);
    EXPECT_TRUE(r.links[1].pass);
    EXPECT_FALSE(r.links[2].pass);
    EXPECT_EQ(r.first_failure, 0u);
}

TEST(TimescaleChain, Degenerate) {
    const BathSpec bath{1.0, 2, 0.1, 0.0};
    const auto r = timescale_chain_report(bath, 1.0, 0.1);
    EXPECT_FALSE(r.holds);
    EXPECT_EQ(r.first_failure, 0u);
    EXPECT_THROW(timescale_chain_report(bath, 0.0, 0.1), std::invalid_argument);
}

TEST(TimescaleChain, ReferenceDecaySetup) {
    const double dw = 40.0 / 65536.0, g = std::sqrt(6e-6);
    const BathSpec bath{dw, 65537, g, 0.0};
    const auto r = timescale_chain_report(bath, 20.0, g);
    EXPECT_NEAR(r.sqrt_levels, 256.0, 1e-9);
    EXPECT_NEAR(r.coupling_ratio, g / dw, 1e-12);
    EXPECT_EQ(r.links.size(), 3u);
}
