// lindblad.hpp: Weak-damping thermal master equation
//
//    d rho/dt = -i [H + H_L, rho] + sum_j gamma_j (n_j + 1) D[L_j] rho + gamma_j n_j D[L_j^+] rho
//    D[c] rho = c rho c^+ - (c^+ c rho + rho c^+ c) / 2
//
// Jump operators come from the transition catalog (one per group). H_L is
// diagonal: each transition lowers its upper level by the Lamb shift of an
// asymmetric band [0, Omega_c], shifts being summed where a level takes part
// in several transitions.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>

#include "fgrlab/bixon_jortner.hpp"
#include "fgrlab/errors.hpp"
#include "fgrlab/model.hpp"

namespace fgrlab::lindblad {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

struct DensityCheck {
    double trace_error{0.0};
    double hermiticity_error{0.0};
    double min_eigenvalue{0.0};
    bool valid{false};
};

inline DensityCheck check_density(const Matrix& rho, double trace_tol = 1e-9, double herm_tol = 1e-12,
                                  double positivity_tol = 1e-9) {
    DensityCheck c;
    if (rho.rows() != rho.cols() || rho.rows() == 0) return c;
    c.trace_error = std::abs(rho.trace() - 1.0);
    c.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    c.min_eigenvalue = es.eigenvalues().minCoeff();
    c.valid = c.trace_error <= trace_tol && c.hermiticity_error <= herm_tol && c.min_eigenvalue >= -positivity_tol;
    return c;
}

inline void require_density(const Matrix& rho, const std::string& where) {
    const auto c = check_density(rho);
    if (!c.valid)
        throw std::invalid_argument(where + ": not a density matrix (trace error " + std::to_string(c.trace_error) +
                                    ", hermiticity " + std::to_string(c.hermiticity_error) + ", min eigenvalue " +
                                    std::to_string(c.min_eigenvalue) + ")");
}

inline Matrix pure_state(std::size_t dim, std::size_t level) {
    if (level >= dim) throw std::invalid_argument("pure_state: level out of range");
    Matrix rho = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    rho(static_cast<Eigen::Index>(level), static_cast<Eigen::Index>(level)) = 1.0;
    return rho;
}

inline Matrix dissipator_apply(const Matrix& c, const Matrix& rho) {
    if (c.rows() != c.cols() || c.rows() != rho.rows() || rho.rows() != rho.cols())
        throw std::invalid_argument("dissipator_apply: dimension mismatch");
    const Matrix cdc = c.adjoint() * c;
    return c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc);
}

enum class ChannelKind { Emission, Absorption };

struct Channel {
    double rate{0.0};
    Matrix jump;
    std::size_t group{0};
    ChannelKind kind{ChannelKind::Emission};
    double frequency{0.0};
};

struct LindbladModel {
    std::vector<double> energies;
    std::vector<double> lamb_shifts;  // diagonal of H_L
    std::vector<Channel> channels;
    bool lamb_included{false};
    std::vector<std::string> warnings;

    std::size_t dimension() const { return energies.size(); }

    Eigen::VectorXd hamiltonian_diagonal() const {
        Eigen::VectorXd h(static_cast<Eigen::Index>(energies.size()));
        for (std::size_t i = 0; i < energies.size(); ++i) h(static_cast<Eigen::Index>(i)) = energies[i] + lamb_shifts[i];
        return h;
    }

    // Liouvillian acting on rho.
    Matrix apply(const Matrix& rho) const {
        const Eigen::VectorXd h = hamiltonian_diagonal();
        const auto n = rho.rows();
        Matrix out(n, n);
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b) out(a, b) = cplx(0.0, -(h(a) - h(b))) * rho(a, b);
        for (const auto& ch : channels) out += ch.rate * dissipator_apply(ch.jump, rho);
        return out;
    }

    // Row-major vec(rho) -> vec(L rho), columns built from basis matrices.
    Matrix superoperator() const {
        const auto n = static_cast<Eigen::Index>(dimension());
        Matrix S(n * n, n * n);
        Matrix e = Matrix::Zero(n, n);
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b) {
                e(a, b) = 1.0;
                const Matrix col = apply(e);
                e(a, b) = 0.0;
                for (Eigen::Index i = 0; i < n; ++i)
                    for (Eigen::Index j = 0; j < n; ++j) S(i * n + j, a * n + b) = col(i, j);
            }
        return S;
    }
};

struct BuildOptions {
    bool include_lamb{false};
    bool allow_ambiguous{false};   // keep ambiguous pairs as independent channels
    bool allow_strong{false};      // proceed when gamma_j / nu_j fails the weak-damping threshold
    double weak_threshold{0.1};
};

inline LindbladModel build_lindblad(const model::SystemSpec& system, const model::TransitionCatalog& catalog,
                                    const model::BathSpec& bath, const BuildOptions& opt = {}) {
    system.validate();
    bath.validate();
    if (catalog.dimension != system.dimension())
        throw std::invalid_argument("build_lindblad: catalog does not match the system dimension");
    LindbladModel m;
    m.energies = system.level_energies;
    m.lamb_shifts.assign(system.dimension(), 0.0);
    m.lamb_included = opt.include_lamb;

    const auto wd = model::weak_damping_report(catalog, opt.weak_threshold);
    if (catalog.ambiguous_count() > 0) {
        if (!opt.allow_ambiguous)
            throw std::invalid_argument("build_lindblad: " + std::to_string(catalog.ambiguous_count()) +
                                        " ambiguous transition pair(s); regroup or allow ambiguous");
        m.warnings.push_back("ambiguous transition pairs treated as independent channels");
    }
    for (const auto& e : wd.transitions) {
        if (e.pass) continue;
        const auto& t = catalog.transitions[e.transition];
        const std::string msg = "transition " + std::to_string(t.upper_index) + "->" + std::to_string(t.lower_index) +
                                " has gamma/nu = " + std::to_string(e.ratio);
        if (!opt.allow_strong) throw std::invalid_argument("build_lindblad: weak damping fails: " + msg);
        m.warnings.push_back("weak damping overridden: " + msg);
    }

    const double theta = bath.temperature;
    for (std::size_t j = 0; j < catalog.groups.size(); ++j) {
        const auto& g = catalog.groups[j];
        const auto r = model::jump_rates(g.rate, g.frequency, theta);
        if (r.up > 0.0) {
            // Detailed balance holds by construction; guard against regressions.
            if (std::abs(r.up / r.down - std::exp(-g.frequency / theta)) > 1e-14)
                throw NumericalError("build_lindblad: detailed balance violated in group " + std::to_string(j));
        }
        m.channels.push_back({r.down, g.jump_operator, j, ChannelKind::Emission, g.frequency});
        if (r.up > 0.0) m.channels.push_back({r.up, g.jump_operator.adjoint(), j, ChannelKind::Absorption, g.frequency});
    }
    if (opt.include_lamb) {
        const double cutoff = bath.cutoff();
        for (const auto& t : catalog.transitions) {
            if (!(t.frequency < cutoff))
                throw std::invalid_argument("build_lindblad: transition frequency beyond the bath cutoff");
            m.lamb_shifts[t.upper_index] -= bj::lamb_shift(t.zero_t_rate, cutoff - t.frequency, t.frequency);
        }
        m.warnings.push_back("Lamb shift: per-transition upper-level shifts, summed per level");
    }
    return m;
}

// ---------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------

struct Trajectory {
    std::vector<double> times;
    std::vector<Matrix> states;
    double max_trace_drift{0.0};
    double min_eigenvalue{0.0};
    std::size_t steps{0};

    std::vector<double> population(std::size_t level) const {
        std::vector<double> p(states.size());
        for (std::size_t j = 0; j < states.size(); ++j)
            p[j] = states[j](static_cast<Eigen::Index>(level), static_cast<Eigen::Index>(level)).real();
        return p;
    }
};

struct PropagateOptions {
    double tolerance{1e-11};  // absolute and relative local error
    std::size_t max_steps_between_outputs{500000};
};

inline Trajectory propagate_rho(const LindbladModel& m, const Matrix& rho0, std::span<const double> times,
                                const PropagateOptions& opt = {}) {
    namespace odeint = boost::numeric::odeint;
    const auto n = static_cast<Eigen::Index>(m.dimension());
    if (rho0.rows() != n || rho0.cols() != n) throw std::invalid_argument("propagate_rho: dimension mismatch");
    require_density(rho0, "propagate_rho");
    if (times.empty()) throw std::invalid_argument("propagate_rho: empty time grid");
    for (std::size_t j = 1; j < times.size(); ++j)
        if (!(times[j] > times[j - 1])) throw std::invalid_argument("propagate_rho: times must be strictly ascending");

    using State = std::vector<cplx>;
    State x(rho0.data(), rho0.data() + rho0.size());
    Trajectory tr;
    tr.min_eigenvalue = std::numeric_limits<double>::infinity();
    auto rhs = [&](const State& s, State& ds, double) {
        const Eigen::Map<const Matrix> rho(s.data(), n, n);
        const Matrix d = m.apply(rho);
        ds.assign(d.data(), d.data() + d.size());
    };
    auto observe = [&](const State& s, double t) {
        Matrix rho = Eigen::Map<const Matrix>(s.data(), n, n);
        const auto c = check_density(rho);
        tr.max_trace_drift = std::max(tr.max_trace_drift, c.trace_error);
        tr.min_eigenvalue = std::min(tr.min_eigenvalue, c.min_eigenvalue);
        tr.times.push_back(t);
        tr.states.push_back(std::move(rho));
    };
    auto stepper = odeint::make_controlled(opt.tolerance, opt.tolerance, odeint::runge_kutta_dopri5<State>());
    const double span = times.back() - times.front();
    const double dt0 = span > 0.0 ? std::min(1e-3, span / 10.0) : 1e-3;
    try {
        if (times.size() == 1) {
            observe(x, times[0]);
        } else {
            tr.steps = odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), dt0, observe,
                                               odeint::max_step_checker(static_cast<int>(opt.max_steps_between_outputs)));
        }
    } catch (const odeint::odeint_error& e) {
        throw NumericalError(std::string("propagate_rho: integrator failure after ") + std::to_string(tr.times.size()) +
                             " output points: " + e.what());
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Steady state
// ---------------------------------------------------------------------------

// Connected components of the undirected graph joined by non-zero jump-operator elements.
inline std::vector<std::vector<std::size_t>> channel_components(const LindbladModel& m) {
    const std::size_t n = m.dimension();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (const auto& ch : m.channels) {
        if (ch.rate == 0.0) continue;
        for (Eigen::Index i = 0; i < ch.jump.rows(); ++i)
            for (Eigen::Index j = 0; j < ch.jump.cols(); ++j)
                if (ch.jump(i, j) != 0.0) parent[find(static_cast<std::size_t>(i))] = find(static_cast<std::size_t>(j));
    }
    std::vector<std::vector<std::size_t>> comps;
    std::vector<std::size_t> label(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        if (label[r] == n) {
            label[r] = comps.size();
            comps.emplace_back();
        }
        comps[label[r]].push_back(i);
    }
    return comps;
}

struct SteadyState {
    Matrix rho;
    double residual{0.0};  // ||L rho||
    std::size_t null_dimension{1};
    std::string method;
};

inline SteadyState steady_state(const LindbladModel& m, std::size_t dense_limit = 64) {
    const auto comps = channel_components(m);
    if (comps.size() > 1) {
        std::string msg = "steady_state: channels leave " + std::to_string(comps.size()) + " disconnected blocks:";
        for (const auto& c : comps) {
            msg += " {";
            for (std::size_t k = 0; k < c.size(); ++k) msg += (k ? "," : "") + std::to_string(c[k]);
            msg += "}";
        }
        throw std::invalid_argument(msg);
    }
    const auto n = static_cast<Eigen::Index>(m.dimension());
    SteadyState ss;
    if (m.dimension() <= dense_limit) {
        const Matrix S = m.superoperator();
        Eigen::FullPivLU<Matrix> lu(S);
        lu.setThreshold(1e-10);
        ss.null_dimension = static_cast<std::size_t>(S.cols() - lu.rank());
        if (ss.null_dimension != 1)
            throw NumericalError("steady_state: null space of the Liouvillian has dimension " +
                                 std::to_string(ss.null_dimension));
        const Eigen::VectorXcd v = lu.kernel().col(0);
        ss.rho = Matrix(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) ss.rho(i, j) = v(i * n + j);
        ss.rho /= ss.rho.trace();
        ss.rho = 0.5 * (ss.rho + ss.rho.adjoint());
        ss.method = "dense-null-space";
    } else {
        double slowest = std::numeric_limits<double>::infinity();
        for (const auto& ch : m.channels)
            if (ch.rate > 0.0) slowest = std::min(slowest, ch.rate);
        Matrix rho = Matrix::Identity(n, n) / static_cast<double>(n);
        const double horizon = 60.0 / slowest;
        const std::vector<double> t{0.0, horizon};
        rho = propagate_rho(m, rho, t).states.back();
        ss.rho = 0.5 * (rho + rho.adjoint());
        ss.method = "long-time-propagation";
    }
    ss.residual = m.apply(ss.rho).norm();
    return ss;
}

inline std::vector<double> boltzmann_populations(std::span<const double> energies, double theta) {
    std::vector<double> p(energies.size(), 0.0);
    if (energies.empty()) return p;
    const double e0 = *std::min_element(energies.begin(), energies.end());
    if (theta == 0.0) {
        std::size_t ground = 0;
        for (std::size_t i = 0; i < energies.size(); ++i)
            if (energies[i] == e0) ++ground;
        for (std::size_t i = 0; i < energies.size(); ++i) p[i] = energies[i] == e0 ? 1.0 / ground : 0.0;
        return p;
    }
    double z = 0.0;
    for (std::size_t i = 0; i < energies.size(); ++i) z += p[i] = std::exp(-(energies[i] - e0) / theta);
    for (auto& v : p) v /= z;
    return p;
}

// ---------------------------------------------------------------------------
// Microscopic vs master-equation comparison
// ---------------------------------------------------------------------------

struct PopulationSeries {
    std::vector<double> times;
    std::vector<std::vector<double>> populations;  // [level][time]
};

inline PopulationSeries populations_of(const Trajectory& tr, std::span<const std::size_t> levels) {
    PopulationSeries s{tr.times, {}};
    for (std::size_t l : levels) s.populations.push_back(tr.population(l));
    return s;
}

struct LevelComparison {
    double max_abs{0.0};
    double rms{0.0};
    double lag{0.0};          // shift s minimising RMS of micro(t) - mew(t - s)
    double rms_at_lag{0.0};
};

struct ComparisonReport {
    std::vector<LevelComparison> levels;
    double max_abs{0.0};
};

namespace detail {

inline double interpolate(std::span<const double> t, std::span<const double> y, double x) {
    if (x <= t.front()) return y.front();
    if (x >= t.back()) return y.back();
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - t.begin());
    const double w = (x - t[i - 1]) / (t[i] - t[i - 1]);
    return (1.0 - w) * y[i - 1] + w * y[i];
}

} // namespace detail

// max_lag bounds the shift search; both series share (or are interpolated onto) micro.times.
inline ComparisonReport compare_micro_vs_mew(const PopulationSeries& micro, const PopulationSeries& mew,
                                             double max_lag = 0.0) {
    if (micro.populations.size() != mew.populations.size())
        throw std::invalid_argument("compare_micro_vs_mew: level count mismatch");
    ComparisonReport rep;
    const auto& t = micro.times;
    if (t.size() < 2) throw std::invalid_argument("compare_micro_vs_mew: need at least two samples");
    if (max_lag <= 0.0) max_lag = 0.1 * (t.back() - t.front());
    for (std::size_t l = 0; l < micro.populations.size(); ++l) {
        const auto& pm = micro.populations[l];
        const auto& pe = mew.populations[l];
        LevelComparison c;
        double ss = 0.0;
        for (std::size_t j = 0; j < t.size(); ++j) {
            const double d = pm[j] - detail::interpolate(mew.times, pe, t[j]);
            c.max_abs = std::max(c.max_abs, std::abs(d));
            ss += d * d;
        }
        c.rms = std::sqrt(ss / static_cast<double>(t.size()));
        // RMS of the shifted difference on samples where the shifted MEW trace is defined.
        auto shifted_rms = [&](double s) {
            double acc = 0.0;
            std::size_t cnt = 0;
            for (std::size_t j = 0; j < t.size(); ++j) {
                const double x = t[j] - s;
                if (t[j] < t.front() + max_lag || x > mew.times.back()) continue;
                const double d = pm[j] - detail::interpolate(mew.times, pe, x);
                acc += d * d;
                ++cnt;
            }
            return cnt ? std::sqrt(acc / static_cast<double>(cnt)) : 0.0;
        };
        const auto best = boost::math::tools::brent_find_minima(shifted_rms, -max_lag, max_lag, 40);
        c.lag = best.first;
        c.rms_at_lag = best.second;
        rep.max_abs = std::max(rep.max_abs, c.max_abs);
        rep.levels.push_back(c);
    }
    return rep;
}

} // namespace fgrlab::lindblad
