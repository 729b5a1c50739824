// fgrlab: preset-driven experiment runner
//
//   fgrlab <preset> [flags]          run a preset with flag overrides
//   fgrlab run --config FILE [flags] run a config file (or a previous manifest.json)
//   fgrlab validate <preset>|--config FILE [flags]

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fgrlab/io/run.hpp"

using fgrlab::io::json;
using fgrlab::io::RunConfig;

namespace {

struct Flags {
    std::string config_file;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n, instances;
    std::optional<int> threads;
    std::string out, run_dir;
    std::vector<std::string> params, tols;
    // preset-specific shorthands
    std::string delta_omega, initial, system;
    std::optional<double> ntherm;
    bool quiet{false};
};

void add_common(CLI::App* app, Flags& f, bool with_config) {
    if (with_config) app->add_option("--config", f.config_file, "JSON config file or manifest.json")->check(CLI::ExistingFile);
    app->add_option("--seed", f.seed, "seed for random ensembles");
    app->add_option("--n", f.n, "problem-size override");
    app->add_option("--instances", f.instances, "ensemble-size override");
    app->add_option("--threads", f.threads, "worker threads (default: FGRLAB_THREADS or all cores)");
    app->add_option("--out", f.out, "parent directory for run directories");
    app->add_option("--run-dir", f.run_dir, "explicit run directory");
    app->add_option("--param", f.params, "parameter override key=value (value is JSON)")->take_all();
    app->add_option("--tol", f.tols, "tolerance override name=value")->take_all();
    app->add_option("--delta-omega-over-gamma", f.delta_omega, "comma-separated list (fig5)");
    app->add_option("--initial", f.initial, "initially excited level (fig5, compare)");
    app->add_option("--system", f.system, "qubit, ladder or fig5 (mew)");
    app->add_option("--ntherm", f.ntherm, "thermal occupation at the transition frequency (mew)");
    app->add_flag("--quiet", f.quiet, "no progress output");
}

std::pair<std::string, std::string> split_assignment(const std::string& s, const char* what) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw fgrlab::io::ConfigError(what, "expected key=value, got '" + s + "'");
    return {s.substr(0, eq), s.substr(eq + 1)};
}

json parse_value(const std::string& v) {
    try {
        return json::parse(v);
    } catch (const json::parse_error&) {
        return v;  // bare words are strings
    }
}

void apply_flags(RunConfig& c, const Flags& f) {
    if (f.seed) c.seed = *f.seed;
    if (f.n) c.n = *f.n;
    if (f.instances) c.instances = *f.instances;
    if (f.threads) c.threads = *f.threads;
    if (!f.out.empty()) c.output_dir = f.out;
    if (!f.run_dir.empty()) c.run_dir = f.run_dir;
    for (const auto& s : f.params) {
        const auto [k, v] = split_assignment(s, "--param");
        c.params[k] = parse_value(v);
    }
    for (const auto& s : f.tols) {
        const auto [k, v] = split_assignment(s, "--tol");
        const json t = parse_value(v);
        if (!t.is_number() || !(t.get<double>() > 0.0))
            throw fgrlab::io::ConfigError("--tol " + k, "expected a positive number");
        c.tolerances[k] = t;
    }
    if (!f.delta_omega.empty()) {
        json list = json::array();
        for (const auto& item : CLI::detail::split(f.delta_omega, ',')) list.push_back(parse_value(item));
        c.params["delta_omega_over_gamma"] = c.experiment == "fig5" ? list : (list.size() == 1 ? list[0] : list);
    }
    if (!f.initial.empty()) c.params["initial"] = f.initial;
    if (!f.system.empty()) c.params["system"] = f.system;
    if (f.ntherm) c.params["ntherm"] = *f.ntherm;
}

void print_report(const fgrlab::io::ValidationReport& r, std::ostream& os) {
    for (const auto& c : r.checks) os << (c.pass ? "  ok    " : "  FAIL  ") << c.name << " (" << c.detail << ")\n";
    for (const auto& n : r.notes) os << "  info  " << n.name << ": " << n.detail << "\n";
    for (const auto& w : r.warnings) os << "warning: " << w << "\n";
    for (const auto& e : r.errors) os << "error: " << e << "\n";
}

int execute(RunConfig cfg, const Flags& f) {
    const auto res = fgrlab::io::run(cfg, f.quiet ? nullptr : &std::cerr);
    if (res.exit_code == fgrlab::io::Usage && res.dir.empty()) {
        print_report(res.validation, std::cerr);
        return res.exit_code;
    }
    for (const auto& w : res.manifest.warnings) std::cerr << "warning: " << w << "\n";
    if (!res.manifest.error.empty()) std::cerr << "error: " << res.manifest.error << "\n";
    std::cout << res.dir.string() << "\n";
    return res.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for quasi-continuum decay and weak-damping master equations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "fgrlab " FGRLAB_VERSION);

    Flags flags;
    std::map<std::string, CLI::App*> preset_cmds;
    for (const auto& p : fgrlab::io::presets()) {
        auto* sub = app.add_subcommand(p.name, p.description);
        add_common(sub, flags, true);
        preset_cmds[p.name] = sub;
    }
    auto* run_cmd = app.add_subcommand("run", "run a configuration file");
    add_common(run_cmd, flags, true);
    run_cmd->get_option("--config")->required();

    auto* validate_cmd = app.add_subcommand("validate", "dry-run parameter checks; no computation");
    std::string validate_name;
    validate_cmd->add_option("experiment", validate_name, "preset name (or use --config)");
    add_common(validate_cmd, flags, true);
    bool as_json = false;
    validate_cmd->add_flag("--json", as_json, "print the report as JSON");

    auto* list_cmd = app.add_subcommand("list", "list presets and their default parameters");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : fgrlab::io::Usage;
    }

    try {
        if (list_cmd->parsed()) {
            for (const auto& p : fgrlab::io::presets()) std::cout << p.name << "  " << p.defaults().dump() << "\n";
            return 0;
        }
        RunConfig cfg;
        const bool have_file = !flags.config_file.empty();
        if (have_file) cfg = fgrlab::io::config_from_file(flags.config_file);
        for (const auto& [name, sub] : preset_cmds)
            if (sub->parsed()) {
                if (have_file && cfg.experiment != name)
                    throw fgrlab::io::ConfigError("experiment", "config names '" + cfg.experiment + "', command is '" + name + "'");
                cfg.experiment = name;
            }
        if (validate_cmd->parsed()) {
            if (!validate_name.empty()) cfg.experiment = validate_name;
            if (cfg.experiment.empty()) throw fgrlab::io::ConfigError("experiment", "missing experiment name");
            apply_flags(cfg, flags);
            const auto rep = fgrlab::io::validate(cfg);
            if (as_json)
                std::cout << fgrlab::io::to_json(rep).dump(2) << "\n";
            else
                print_report(rep, std::cout);
            return rep.ok() ? 0 : fgrlab::io::Usage;
        }
        apply_flags(cfg, flags);
        return execute(cfg, flags);
    } catch (const fgrlab::io::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return fgrlab::io::Usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return fgrlab::io::Internal;
    }
}
