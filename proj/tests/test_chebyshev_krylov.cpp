#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <boost/math/special_functions/bessel.hpp>

#include "fgrlab/chebyshev.hpp"
#include "fgrlab/krylov.hpp"

using namespace fgrlab;

namespace {

Eigen::MatrixXd random_symmetric(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = g(rng);
    return A;
}

Eigen::VectorXcd exact_evolution(const Eigen::MatrixXd& H, const Eigen::VectorXcd& psi, double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const Eigen::MatrixXcd V = es.eigenvectors().cast<std::complex<double>>();
    Eigen::VectorXcd c = V.adjoint() * psi;
    for (Eigen::Index k = 0; k < c.size(); ++k) c(k) *= std::polar(1.0, -es.eigenvalues()(k) * t);
    return V * c;
}

} // namespace

TEST(Bessel, MatchesBoost) {
    for (double x : {0.5, 3.0, 40.0, 1234.5}) {
        const auto J = chebyshev::bessel_j_sequence(x, chebyshev::required_order(x));
        for (std::size_t n : {0u, 1u, 7u, 30u, 200u}) {
            if (n >= J.size()) continue;
            EXPECT_NEAR(J[n], boost::math::cyl_bessel_j(static_cast<double>(n), x), 1e-13) << x << " " << n;
        }
        EXPECT_LT(std::abs(J.back()), 1e-16);
    }
    const auto neg = chebyshev::bessel_j_sequence(-2.0, 5);
    EXPECT_NEAR(neg[1], -boost::math::cyl_bessel_j(1.0, 2.0), 1e-15);
}

TEST(Chebyshev, SurvivalAndStatesMatchDiagonalisation) {
    const Eigen::MatrixXd H = random_symmetric(60, 11);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const chebyshev::Interval iv{es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(60);
    psi(3) = 0.6;
    psi(10) = 0.8;
    const std::vector<double> times{0.0, 0.4, 3.0, 17.0};
    auto apply_r = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = H * x; };
    const auto mu = chebyshev::survival_moments(apply_r, psi, iv, chebyshev::moments_needed(iv, times));
    const auto d = chebyshev::amplitude_from_moments(mu, iv, times);
    auto apply_c = [&](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) { y = H.cast<std::complex<double>>() * x; };
    const Eigen::VectorXcd psic = psi.cast<std::complex<double>>();
    const auto states = chebyshev::evolve(apply_c, psic, iv, times);
    for (std::size_t j = 0; j < times.size(); ++j) {
        const Eigen::VectorXcd ref = exact_evolution(H, psic, times[j]);
        EXPECT_LT(std::abs(d[j] - psic.dot(ref)), 1e-12);
        EXPECT_LT((states[j] - ref).norm(), 1e-12);
    }
}

TEST(Krylov, MatchesDiagonalisationAndConservesNorm) {
    const Eigen::MatrixXd H = random_symmetric(300, 5);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(300);
    psi(0) = std::complex<double>(0.6, 0.0);
    psi(1) = std::complex<double>(0.0, 0.8);
    auto apply = [&](const auto& x, Eigen::VectorXcd& y) { y = H.cast<std::complex<double>>() * x; };
    const std::vector<double> times{0.0, 0.5, 2.0, 7.5};
    krylov::Stats stats;
    const auto states = krylov::propagate(apply, psi, times, {}, &stats);
    for (std::size_t j = 0; j < times.size(); ++j) {
        EXPECT_LT((states[j] - exact_evolution(H, psi, times[j])).norm(), 1e-8);
        EXPECT_NEAR(states[j].norm(), 1.0, 1e-12);
    }
    EXPECT_GT(stats.steps, 1u);
    EXPECT_GT(stats.matvecs, 0u);
}

TEST(Krylov, StepUnderflowIsReported) {
    const Eigen::MatrixXd H = random_symmetric(50, 6);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Ones(50).normalized();
    auto apply = [&](const auto& x, Eigen::VectorXcd& y) { y = H.cast<std::complex<double>>() * x; };
    krylov::Options opt;
    opt.dimension = 2;
    opt.tolerance = 1e-300;
    const std::vector<double> times{0.0, 1.0};
    EXPECT_THROW(krylov::propagate(apply, psi, times, opt), NumericalError);
}
