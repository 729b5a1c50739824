// golden_rule: decay of one state into a uniform quasi-continuum, and the
// master-equation steady state of a thermal qubit, straight from the library.

#include <cstdio>

#include "fgrlab/fgrlab.hpp"

using namespace fgrlab;

int main() {
    // 4096 levels spanning [-20, 20], coupling chosen for gamma = 0.05.
    const double dw = 40.0 / 4096.0;
    const double gamma = 0.05;
    const auto spec = bj::QuasiContinuumSpec::uniform(dw, 2048, 2048, model::coupling_for_rate(gamma, dw));
    const auto sol = bj::solve_arrowhead(spec);
    const auto trace = bj::amplitude_series(sol, bj::uniform_times(2.0 / gamma, 401));
    const auto fit = bj::fit_decay_rate(trace, bj::default_fit_window(gamma, spec.upper_edge(), dw));
    std::printf("golden rule %.6f  fitted %.6f +- %.1e\n", gamma, fit.rate, fit.rate_stderr);
    std::printf("P(2/gamma) = %.6f  e^-2 = %.6f\n", trace.population.back(), std::exp(-2.0));

    // Qubit at n_T = 1: the steady state is (2/3, 1/3).
    Eigen::MatrixXcd X(2, 2);
    X << 0.0, 1.0, 1.0, 0.0;
    const model::SystemSpec qubit{{0.0, 1.0}, X};
    const double theta = 1.0 / std::log(2.0);
    const model::BathSpec bath{0.002, 16001, model::coupling_for_rate(0.025, 0.002), theta};
    const auto mew = lindblad::build_lindblad(qubit, model::build_transition_catalog(qubit, bath), bath);
    const auto ss = lindblad::steady_state(mew);
    std::printf("steady state %.12f %.12f\n", ss.rho(0, 0).real(), ss.rho(1, 1).real());
}
