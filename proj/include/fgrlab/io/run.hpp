// run.hpp: Dry-run validation and execution of a configured experiment
//
// Exit codes: 0 success, 2 invalid configuration (nothing is written),
// 3 numerical failure, 4 any other error. A run directory, once created,
// always receives manifest.json.

#pragma once

#include <chrono>
#include <filesystem>
#include <ostream>
#include <string>

#include "fgrlab/errors.hpp"
#include "fgrlab/io/presets.hpp"
#include "fgrlab/parallel.hpp"

namespace fgrlab::io {

enum ExitCode : int { Ok = 0, Usage = 2, Numerical = 3, Internal = 4 };

inline ValidationReport validate(const RunConfig& cfg) {
    ValidationReport rep;
    const Preset* preset = find_preset(cfg.experiment);
    if (!preset) {
        std::string names;
        for (const auto& p : presets()) names += (names.empty() ? "" : ", ") + p.name;
        rep.errors.push_back("experiment: unknown experiment '" + cfg.experiment + "' (expected one of " + names + ")");
        return rep;
    }
    rep.resolved_params = resolve_params(*preset, cfg, rep);
    if (!rep.ok()) return rep;
    try {
        preset->check(rep.resolved_params, rep);
    } catch (const std::exception& e) {
        rep.errors.push_back(std::string("check failed: ") + e.what());
    }
    return rep;
}

inline std::filesystem::path run_directory(const RunConfig& cfg, std::chrono::system_clock::time_point now) {
    namespace fs = std::filesystem;
    if (!cfg.run_dir.empty()) return cfg.run_dir;
    const fs::path base = fs::path(cfg.output_dir) /
                          (cfg.experiment + "_" + utc_stamp(now) + "_seed" + std::to_string(cfg.seed));
    fs::path dir = base;
    for (int k = 1; fs::exists(dir); ++k) dir = base.string() + "_" + std::to_string(k);
    return dir;
}

struct RunResult {
    int exit_code{Ok};
    std::filesystem::path dir;
    RunManifest manifest;
    ValidationReport validation;
};

inline RunResult run(const RunConfig& cfg, std::ostream* log = nullptr) {
    RunResult res;
    res.validation = validate(cfg);
    if (!res.validation.ok()) {
        res.exit_code = Usage;
        return res;
    }
    if (!cfg.run_dir.empty() && std::filesystem::exists(std::filesystem::path(cfg.run_dir) / "manifest.json")) {
        res.validation.errors.push_back("run_dir: " + cfg.run_dir + " already holds a run");
        res.exit_code = Usage;
        return res;
    }
    const Preset& preset = *find_preset(cfg.experiment);
    const int saved_threads = parallel::detail::thread_override();
    if (cfg.threads > 0) parallel::set_thread_count(cfg.threads);

    RunContext ctx;
    ctx.config = cfg;
    ctx.params = res.validation.resolved_params;
    ctx.log = log;
    const auto start = std::chrono::system_clock::now();
    const auto t0 = std::chrono::steady_clock::now();
    ctx.dir = run_directory(cfg, start);
    std::filesystem::create_directories(ctx.dir);
    ctx.manifest.config = to_json(cfg);
    ctx.manifest.resolved_params = ctx.params;
    ctx.manifest.started = utc_stamp(start, "%Y-%m-%dT%H:%M:%SZ");
    ctx.manifest.threads = parallel::thread_count();
    for (const auto& w : res.validation.warnings) ctx.warn(w);

    try {
        preset.run(ctx);
        atomic_write(ctx.dir / "summary.csv", to_csv(ctx.summary));
        ctx.manifest.outputs.push_back("summary.csv");
        ctx.manifest.status = "ok";
    } catch (const NumericalError& e) {
        res.exit_code = Numerical;
        ctx.manifest.error = std::string("numerical failure: ") + e.what();
    } catch (const std::invalid_argument& e) {
        res.exit_code = Usage;
        ctx.manifest.error = std::string("invalid argument: ") + e.what();
    } catch (const std::exception& e) {
        res.exit_code = Internal;
        ctx.manifest.error = e.what();
    }
    if (res.exit_code != Ok) {
        ctx.manifest.status = "failed";
        ctx.manifest.partial = !ctx.manifest.outputs.empty();
        if (!ctx.summary.rows.empty()) {
            atomic_write(ctx.dir / "summary.csv", to_csv(ctx.summary));
            ctx.manifest.outputs.push_back("summary.csv");
        }
    }
    ctx.manifest.finished = utc_stamp(std::chrono::system_clock::now(), "%Y-%m-%dT%H:%M:%SZ");
    ctx.manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(ctx.dir / "manifest.json", ctx.manifest);
    parallel::set_thread_count(saved_threads);
    res.dir = ctx.dir;
    res.manifest = std::move(ctx.manifest);
    return res;
}

} // namespace fgrlab::io
