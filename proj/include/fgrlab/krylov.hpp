// krylov.hpp: Short-step Lanczos propagation of exp(-iHt) psi with residual-based step control

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fgrlab/errors.hpp"

namespace fgrlab::krylov {

using cplx = std::complex<double>;

struct Options {
    std::size_t dimension{30};  // Krylov subspace size
    double tolerance{1e-10};    // bound on the estimated error of each accepted step
    std::size_t max_steps{1000000};
};

struct Stats {
    std::size_t steps{0};
    std::size_t rejected{0};
    std::size_t matvecs{0};
    double max_error_estimate{0.0};
};

// apply(x, y) must set y = H x for complex vectors; H Hermitian.
template <typename Apply>
class LanczosPropagator {
public:
    LanczosPropagator(Apply apply, Options opts = {}) : apply_(std::move(apply)), opts_(opts) {
        if (opts_.dimension < 2) throw std::invalid_argument("LanczosPropagator: dimension must be >= 2");
    }

    const Stats& stats() const { return stats_; }

    // Advances psi by dt, substepping (halving on rejection) as needed.
    void advance(Eigen::VectorXcd& psi, double dt) {
        double remaining = dt;
        double trial = last_step_ > 0.0 ? std::min(remaining, 2.0 * last_step_) : remaining;
        while (remaining > 0.0) {
            if (stats_.steps >= opts_.max_steps)
                throw NumericalError("krylov: step limit reached at step " + std::to_string(stats_.steps));
            build_basis(psi);
            trial = std::min(trial, remaining);
            double err = estimate(trial);
            std::size_t halvings = 0;
            while (err > opts_.tolerance) {
                ++stats_.rejected;
                trial *= 0.5;
                if (++halvings > 60 || trial < 1e-15 * std::max(1.0, dt))
                    throw NumericalError("krylov: step size underflow at step " + std::to_string(stats_.steps));
                err = estimate(trial);
            }
            stats_.max_error_estimate = std::max(stats_.max_error_estimate, err);
            psi = beta0_ * (V_.leftCols(m_) * small_solution(trial));
            remaining -= trial;
            if (remaining < 1e-14 * std::max(1.0, dt)) remaining = 0.0;
            last_step_ = trial;
            ++stats_.steps;
            trial = halvings == 0 ? 2.0 * trial : trial;
        }
    }

private:
    void build_basis(const Eigen::VectorXcd& psi) {
        const Eigen::Index n = psi.size();
        const auto m = static_cast<Eigen::Index>(std::min<std::size_t>(opts_.dimension, static_cast<std::size_t>(n)));
        V_.resize(n, m + 1);
        alpha_.assign(static_cast<std::size_t>(m), 0.0);
        beta_.assign(static_cast<std::size_t>(m), 0.0);
        beta0_ = psi.norm();
        if (!(beta0_ > 0.0)) throw std::invalid_argument("krylov: zero state");
        V_.col(0) = psi / beta0_;
        Eigen::VectorXcd w(n);
        m_ = m;
        breakdown_ = false;
        for (Eigen::Index j = 0; j < m; ++j) {
            apply_(V_.col(j), w);
            ++stats_.matvecs;
            const double a = V_.col(j).dot(w).real();
            alpha_[static_cast<std::size_t>(j)] = a;
            // Full reorthogonalisation, applied twice.
            for (int pass = 0; pass < 2; ++pass) {
                const Eigen::VectorXcd h = V_.leftCols(j + 1).adjoint() * w;
                w -= V_.leftCols(j + 1) * h;
            }
            const double b = w.norm();
            beta_[static_cast<std::size_t>(j)] = b;
            if (b < 1e-13 * (std::abs(a) + 1.0)) {
                m_ = j + 1;
                breakdown_ = true;
                break;
            }
            V_.col(j + 1) = w / b;
        }
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m_, m_);
        for (Eigen::Index j = 0; j < m_; ++j) {
            T(j, j) = alpha_[static_cast<std::size_t>(j)];
            if (j + 1 < m_) T(j, j + 1) = T(j + 1, j) = beta_[static_cast<std::size_t>(j)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        evals_ = es.eigenvalues();
        evecs_ = es.eigenvectors();
    }

    Eigen::VectorXcd small_solution(double dt) const {
        Eigen::VectorXcd c(m_);
        for (Eigen::Index k = 0; k < m_; ++k) c(k) = std::polar(evecs_(0, k), -evals_(k) * dt);
        return evecs_.cast<cplx>() * c;
    }

    // ||residual|| estimate beta0 * beta_m * |[exp(-iT dt) e_1]_m|.
    double estimate(double dt) const {
        if (breakdown_) return 0.0;
        const Eigen::VectorXcd c = small_solution(dt);
        return beta0_ * beta_[static_cast<std::size_t>(m_ - 1)] * std::abs(c(m_ - 1));
    }

    Apply apply_;
    Options opts_;
    Stats stats_;
    Eigen::MatrixXcd V_;
    std::vector<double> alpha_, beta_;
    Eigen::VectorXd evals_;
    Eigen::MatrixXd evecs_;
    Eigen::Index m_{0};
    double beta0_{0.0};
    bool breakdown_{false};
    double last_step_{0.0};
};

// States at each requested time (ascending, starting at or after 0).
template <typename Apply>
std::vector<Eigen::VectorXcd> propagate(Apply apply, const Eigen::VectorXcd& psi0, std::span<const double> times,
                                        Options opts = {}, Stats* stats = nullptr) {
    LanczosPropagator<Apply> prop(std::move(apply), opts);
    std::vector<Eigen::VectorXcd> out;
    out.reserve(times.size());
    Eigen::VectorXcd psi = psi0;
    double t = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j) {
        if (times[j] < t) throw std::invalid_argument("krylov::propagate: times must be ascending and >= 0");
        if (times[j] > t) prop.advance(psi, times[j] - t);
        t = times[j];
        out.push_back(psi);
    }
    if (stats) *stats = prop.stats();
    return out;
}

} // namespace fgrlab::krylov
