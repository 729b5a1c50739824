// model.hpp: Units, bath and system descriptions, transition catalog, thermal rate formulas
//
// Unit convention: hbar = k_B = 1. Frequencies and energies share the unit 1/t_s,
// and the temperature is carried as the frequency theta = k_B T / hbar.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace fgrlab::model {

using cplx = std::complex<double>;

// Discrete flat-spectrum oscillator bath: oscillator k has frequency k * spacing,
// k = 0 ... N, so the cutoff is N * spacing.
struct BathSpec {
    double spacing{1.0};
    std::size_t oscillator_count{2};
    double coupling{1.0};
    double temperature{0.0};

    std::size_t top_index() const { return oscillator_count - 1; }
    double cutoff() const { return static_cast<double>(top_index()) * spacing; }
    double frequency(std::size_t k) const { return static_cast<double>(k) * spacing; }
    double density_of_states() const { return 1.0 / spacing; }

    void validate() const {
        if (!(spacing > 0.0) || !std::isfinite(spacing))
            throw std::invalid_argument("BathSpec: spacing must be positive");
        if (oscillator_count < 2)
            throw std::invalid_argument("BathSpec: need at least two oscillators");
        if (!(coupling > 0.0))
            throw std::invalid_argument("BathSpec: coupling must be positive");
        if (!(temperature >= 0.0))
            throw std::invalid_argument("BathSpec: temperature must be non-negative");
    }
};

// System levels plus the Hermitian coupling operator X (zero diagonal).
struct SystemSpec {
    std::vector<double> level_energies;
    Eigen::MatrixXcd coupling_operator;

    std::size_t dimension() const { return level_energies.size(); }

    void validate() const {
        const auto n = static_cast<Eigen::Index>(level_energies.size());
        if (n == 0) throw std::invalid_argument("SystemSpec: no levels");
        if (coupling_operator.rows() != n || coupling_operator.cols() != n)
            throw std::invalid_argument("SystemSpec: coupling operator dimension mismatch");
        if (!std::is_sorted(level_energies.begin(), level_energies.end()))
            throw std::invalid_argument("SystemSpec: level energies must be ascending");
        const double scale = std::max(1.0, coupling_operator.cwiseAbs().maxCoeff());
        if ((coupling_operator - coupling_operator.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw std::invalid_argument("SystemSpec: coupling operator must be Hermitian");
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::abs(coupling_operator(i, i)) > 1e-12 * scale)
                throw std::invalid_argument("SystemSpec: coupling operator must have zero diagonal");
    }
};

struct Transition {
    std::size_t upper_index{0};
    std::size_t lower_index{0};
    double frequency{0.0};
    cplx matrix_element{0.0};  // <lower|X|upper>
    double zero_t_rate{0.0};
};

enum class PairClass { Degenerate, Separated, Ambiguous };

inline const char* to_string(PairClass c) {
    switch (c) {
        case PairClass::Degenerate: return "degenerate";
        case PairClass::Separated: return "separated";
        case PairClass::Ambiguous: return "ambiguous";
    }
    return "?";
}

struct PairReport {
    std::size_t first{0};   // indices into TransitionCatalog::transitions
    std::size_t second{0};
    double separation{0.0};
    PairClass classification{PairClass::Separated};
};

// Transitions sharing one frequency nu_j. The jump operator is
// L_j = sum_k (X_gk,ek / |X_ref|) |g_jk><e_jk|, which is the plain sum of
// |g><e| when all members have the same unit matrix element; rate is the
// zero-temperature rate of the member with the largest |X|.
struct TransitionGroup {
    double frequency{0.0};
    double rate{0.0};
    std::vector<std::size_t> members;
    Eigen::MatrixXcd jump_operator;

    std::size_t degeneracy() const { return members.size(); }
};

struct TransitionCatalog {
    std::size_t dimension{0};
    std::vector<Transition> transitions;
    std::vector<TransitionGroup> groups;
    std::vector<PairReport> grouping_report;
    double tol_deg{0.1};
    double tol_sep{10.0};

    std::size_t ambiguous_count() const {
        return static_cast<std::size_t>(std::count_if(
            grouping_report.begin(), grouping_report.end(),
            [](const PairReport& p) { return p.classification == PairClass::Ambiguous; }));
    }
};

// ---------------------------------------------------------------------------
// Scalar formulas
// ---------------------------------------------------------------------------

// Mean number of quanta of an oscillator of frequency omega at temperature theta.
inline double thermal_occupation(double omega, double theta) {
    if (!(omega > 0.0))
        throw std::domain_error("thermal_occupation: frequency must be positive");
    if (!(theta >= 0.0))
        throw std::domain_error("thermal_occupation: temperature must be non-negative");
    if (theta == 0.0) return 0.0;
    return 1.0 / std::expm1(omega / theta);
}

// Fermi's golden rule for a flat quasi-continuum of spacing delta_omega.
inline double golden_rate(double g, double delta_omega) {
    if (!(g > 0.0) || !(delta_omega > 0.0))
        throw std::invalid_argument("golden_rate: g and delta_omega must be positive");
    return 2.0 * std::numbers::pi * g * g / delta_omega;
}

// Coupling that produces a given golden-rule rate.
inline double coupling_for_rate(double gamma, double delta_omega) {
    if (!(gamma > 0.0) || !(delta_omega > 0.0))
        throw std::invalid_argument("coupling_for_rate: gamma and delta_omega must be positive");
    return std::sqrt(gamma * delta_omega / (2.0 * std::numbers::pi));
}

struct JumpRates {
    double up{0.0};    // gamma n_T
    double down{0.0};  // gamma (n_T + 1)
};

inline JumpRates jump_rates(double gamma, double nu, double theta) {
    if (!(nu > 0.0)) throw std::domain_error("jump_rates: transition frequency must be positive");
    if (!(gamma > 0.0)) throw std::invalid_argument("jump_rates: rate must be positive");
    const double n = thermal_occupation(nu, theta);
    return {gamma * n, gamma * (n + 1.0)};
}

// ---------------------------------------------------------------------------
// Transition catalog
// ---------------------------------------------------------------------------

inline PairClass classify_pair(double separation, double rate_a, double rate_b, double tol_deg,
                               double tol_sep) {
    if (separation <= tol_deg * std::min(rate_a, rate_b)) return PairClass::Degenerate;
    if (separation >= tol_sep * std::max(rate_a, rate_b)) return PairClass::Separated;
    return PairClass::Ambiguous;
}

inline TransitionCatalog build_transition_catalog(const SystemSpec& system, const BathSpec& bath,
                                                  double tol_deg = 0.1, double tol_sep = 10.0) {
    system.validate();
    bath.validate();
    if (!(tol_deg < tol_sep) || !(tol_deg >= 0.0))
        throw std::invalid_argument("build_transition_catalog: need 0 <= tol_deg < tol_sep");

    TransitionCatalog cat;
    cat.dimension = system.dimension();
    cat.tol_deg = tol_deg;
    cat.tol_sep = tol_sep;

    const auto& E = system.level_energies;
    const auto& X = system.coupling_operator;
    const double xscale = std::max(1.0, X.cwiseAbs().maxCoeff());
    for (std::size_t lo = 0; lo < E.size(); ++lo) {
        for (std::size_t up = lo + 1; up < E.size(); ++up) {
            const cplx x = X(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(up));
            if (std::abs(x) <= 1e-14 * xscale) continue;
            const double freq = E[up] - E[lo];
            if (!(freq > 0.0))
                throw std::invalid_argument("build_transition_catalog: levels " + std::to_string(lo) +
                                            " and " + std::to_string(up) +
                                            " are degenerate but coupled (zero-frequency transition)");
            Transition t;
            t.upper_index = up;
            t.lower_index = lo;
            t.frequency = freq;
            t.matrix_element = x;
            t.zero_t_rate = golden_rate(bath.coupling * std::abs(x), bath.spacing);
            cat.transitions.push_back(t);
        }
    }

    const auto& T = cat.transitions;
    std::vector<std::size_t> order(T.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return T[a].frequency < T[b].frequency; });

    // Greedy clustering in frequency order: a transition joins the current
    // group only if it is degenerate with every member already in it.
    std::vector<std::size_t> group_of(T.size(), 0);
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t idx : order) {
        bool joined = false;
        if (!clusters.empty()) {
            auto& cur = clusters.back();
            joined = std::all_of(cur.begin(), cur.end(), [&](std::size_t m) {
                return classify_pair(std::abs(T[m].frequency - T[idx].frequency), T[m].zero_t_rate,
                                     T[idx].zero_t_rate, tol_deg, tol_sep) == PairClass::Degenerate;
            });
            if (joined) cur.push_back(idx);
        }
        if (!joined) clusters.push_back({idx});
        group_of[idx] = clusters.size() - 1;
    }

    for (std::size_t a = 0; a < T.size(); ++a) {
        for (std::size_t b = a + 1; b < T.size(); ++b) {
            const double sep = std::abs(T[a].frequency - T[b].frequency);
            PairClass c = classify_pair(sep, T[a].zero_t_rate, T[b].zero_t_rate, tol_deg, tol_sep);
            // Degenerate with each other but split by the clustering: no
            // consistent grouping exists, so the pair is reported ambiguous.
            if (c == PairClass::Degenerate && group_of[a] != group_of[b]) c = PairClass::Ambiguous;
            cat.grouping_report.push_back({a, b, sep, c});
        }
    }

    const auto dim = static_cast<Eigen::Index>(cat.dimension);
    for (const auto& members : clusters) {
        TransitionGroup g;
        g.members = members;
        double xref = 0.0;
        double fsum = 0.0;
        for (std::size_t m : members) {
            xref = std::max(xref, std::abs(T[m].matrix_element));
            fsum += T[m].frequency;
        }
        g.frequency = fsum / static_cast<double>(members.size());
        g.rate = golden_rate(bath.coupling * xref, bath.spacing);
        g.jump_operator = Eigen::MatrixXcd::Zero(dim, dim);
        for (std::size_t m : members)
            g.jump_operator(static_cast<Eigen::Index>(T[m].lower_index),
                            static_cast<Eigen::Index>(T[m].upper_index)) += T[m].matrix_element / xref;
        cat.groups.push_back(std::move(g));
    }
    return cat;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct WeakDampingEntry {
    std::size_t transition{0};
    double ratio{0.0};  // gamma_j / Omega_j
    bool pass{false};
};

struct WeakDampingReport {
    std::vector<WeakDampingEntry> transitions;
    std::vector<PairReport> pairs;
    std::size_t ambiguous_pairs{0};
    double threshold{0.1};
    bool applicable{true};
    std::vector<std::string> warnings;
};

// Condition 1 (gamma_j << Omega_j, made concrete as ratio < threshold) and
// condition 2 (every pair degenerate or separated) of weak damping.
inline WeakDampingReport weak_damping_report(const TransitionCatalog& cat, double threshold = 0.1) {
    WeakDampingReport r;
    r.threshold = threshold;
    for (std::size_t i = 0; i < cat.transitions.size(); ++i) {
        const auto& t = cat.transitions[i];
        WeakDampingEntry e{i, t.zero_t_rate / t.frequency, false};
        e.pass = e.ratio < threshold;
        if (!e.pass) {
            r.applicable = false;
            r.warnings.push_back("transition " + std::to_string(t.upper_index) + "->" +
                                 std::to_string(t.lower_index) + " violates gamma << Omega (ratio " +
                                 std::to_string(e.ratio) + ")");
        }
        r.transitions.push_back(e);
    }
    r.pairs = cat.grouping_report;
    r.ambiguous_pairs = cat.ambiguous_count();
    if (r.ambiguous_pairs > 0) {
        r.applicable = false;
        r.warnings.push_back(std::to_string(r.ambiguous_pairs) +
                             " transition pair(s) neither degenerate nor well separated");
    }
    if (cat.transitions.empty()) r.warnings.push_back("empty transition catalog: vacuously applicable");
    return r;
}

struct ChainLink {
    std::string name;
    double ratio{0.0};
    bool pass{false};
};

// sqrt(Omega_c/dw) >> sqrt(omega/dw) >> g/dw >> 1, each ">>" judged as ratio > threshold.
struct TimescaleChainReport {
    double sqrt_levels{0.0};      // sqrt(Omega_c / delta_omega)
    double sqrt_transition{0.0};  // sqrt(omega / delta_omega)
    double coupling_ratio{0.0};   // g / delta_omega
    double threshold{10.0};
    std::vector<ChainLink> links;
    bool holds{false};
    // Index of the first failing link, or links.size() when all pass.
    std::size_t first_failure{0};
};

inline TimescaleChainReport timescale_chain_report(const BathSpec& bath, double omega_min, double g,
                                                   double threshold = 10.0) {
    if (!(omega_min > 0.0) || !(g > 0.0) || !(bath.spacing > 0.0))
        throw std::invalid_argument("timescale_chain_report: inputs must be positive");
    TimescaleChainReport r;
    r.threshold = threshold;
    const double dw = bath.spacing;
    r.sqrt_levels = std::sqrt(bath.cutoff() / dw);
    r.sqrt_transition = std::sqrt(omega_min / dw);
    r.coupling_ratio = g / dw;
    r.links = {
        {"sqrt(Omega_c/dw) / sqrt(omega/dw)", r.sqrt_levels / r.sqrt_transition, false},
        {"sqrt(omega/dw) / (g/dw)", r.sqrt_transition / r.coupling_ratio, false},
        {"(g/dw) / 1", r.coupling_ratio, false},
    };
    r.first_failure = r.links.size();
    for (std::size_t i = 0; i < r.links.size(); ++i) {
        r.links[i].pass = r.links[i].ratio > threshold;
        if (!r.links[i].pass && r.first_failure == r.links.size()) r.first_failure = i;
    }
    r.holds = r.first_failure == r.links.size();
    return r;
}

} // namespace fgrlab::model
