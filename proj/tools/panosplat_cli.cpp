// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Talks to the library only through panosplat.h.

#include <CLI11.hpp>

#include <cstdio>
#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "panosplat/panosplat.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitPipeline = 3;

struct Failure {
    ps_status status;
    std::string message;
};

int exit_code_for(ps_status s) {
    switch (s) {
    case PS_OK: return kExitOk;
    case PS_ERR_INVALID_ARGUMENT:
    case PS_ERR_NOT_FOUND:
    case PS_ERR_PARSE: return kExitUsage;
    default: return kExitPipeline;
    }
}

void check(ps_status s) {
    if (s != PS_OK) throw Failure{s, ps_last_error()};
}

// Owns a library string and prints it.
void emit(char* s) {
    if (s == nullptr) return;
    std::fputs(s, stdout);
    if (*s != '\0' && s[std::strlen(s) - 1] != '\n') std::fputc('\n', stdout);
    ps_string_free(s);
}

struct Config {
    ps_config* ptr = nullptr;
    ~Config() { ps_config_free(ptr); }
};

struct Run {
    ps_run* ptr = nullptr;
    ~Run() { ps_run_free(ptr); }
};

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    int threads = 0;
    bool verbose = false;
    bool quiet = false;
};

void on_log(ps_log_level level, const char* message, void* user) {
    const auto* g = static_cast<const Globals*>(user);
    if (g->quiet && level < PS_LOG_WARN) return;
    if (!g->verbose && level == PS_LOG_DEBUG) return;
    static const char* names[] = {"debug", "info", "warn", "error"};
    std::fprintf(stderr, "[%s] %s\n", names[level], message);
}

// Config file, then --set overrides, then stage flags, then --seed.
void load_config(const Globals& g, Config& cfg, const std::vector<std::pair<std::string, std::string>>& stage) {
    if (g.config_path.empty())
        check(ps_config_new(&cfg.ptr));
    else
        check(ps_config_load(g.config_path.c_str(), &cfg.ptr));
    for (const std::string& kv : g.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Failure{PS_ERR_INVALID_ARGUMENT, "--set expects key=value, got " + kv};
        check(ps_config_set(cfg.ptr, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
    }
    for (const auto& [k, v] : stage) check(ps_config_set(cfg.ptr, k.c_str(), v.c_str()));
    if (g.seed) check(ps_config_set_seed(cfg.ptr, *g.seed));
}

using Overrides = std::vector<std::pair<std::string, std::string>>;

template <class T>
void add_if(Overrides& o, const char* key, const std::optional<T>& v) {
    if (!v) return;
    if constexpr (std::is_same_v<T, std::string>) {
        o.emplace_back(key, *v);
    } else {
        o.emplace_back(key, std::to_string(*v));
    }
}

std::vector<fs::path> verify_targets(const std::vector<std::string>& paths) {
    std::vector<fs::path> out;
    for (const std::string& p : paths) {
        if (fs::exists(fs::path(p) / "manifest.json") || !fs::is_directory(p)) {
            out.emplace_back(p);
            continue;
        }
        std::vector<fs::path> samples;
        for (const auto& e : fs::directory_iterator(p))
            if (e.is_directory() && e.path().filename().string().rfind("sample_", 0) == 0) samples.push_back(e.path());
        std::sort(samples.begin(), samples.end());
        if (samples.empty()) out.emplace_back(p);
        out.insert(out.end(), samples.begin(), samples.end());
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"panosplat: panoramic 3D Gaussian scene generation by restoration and refinement"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "JSON pipeline config");
    app.add_option("--seed", g.seed, "Seed for every random choice");
    app.add_option("--set", g.overrides, "Config override key=value (repeatable)");
    app.add_option("--threads", g.threads, "Cap worker threads (sets PANOSPLAT_THREADS)")->check(CLI::PositiveNumber);
    app.add_flag("-v,--verbose", g.verbose, "Debug logging");
    app.add_flag("-q,--quiet", g.quiet, "Only warnings and errors");

    std::function<void()> action;
    std::string out;

    // init
    std::string pano, depth;
    std::optional<int> stride;
    std::optional<double> depth_scale;
    auto* init = app.add_subcommand("init", "Lift an RGB-D panorama into a coarse Gaussian scene");
    init->add_option("--pano", pano, "Panorama PNG (2:1)")->required();
    init->add_option("--depth", depth, "Depth PFM in meters, 0 = invalid")->required();
    init->add_option("--out", out, "Run directory")->required();
    init->add_option("--stride", stride, "Pixel stride");
    init->add_option("--depth-scale", depth_scale, "Depth multiplier");

    // plan
    std::optional<int> tau;
    auto* plan = app.add_subcommand("plan", "Plan radial exploration trajectories");
    plan->add_option("--out", out, "Run directory")->required();
    plan->add_option("--tau", tau, "Number of trajectories");

    auto* render = app.add_subcommand("render-degraded", "Render the coarse scene along every trajectory");
    render->add_option("--out", out, "Run directory")->required();

    // restore
    std::optional<std::string> backend, exchange_dir, reference_restore;
    std::optional<int> target_scale;
    std::optional<double> timeout;
    auto* restore = app.add_subcommand("restore", "Restore degraded videos");
    restore->add_option("--out", out, "Run directory")->required();
    restore->add_option("--backend", backend, "identity | pushpull | external | oracle")
        ->check(CLI::IsMember({"identity", "pushpull", "external", "oracle"}));
    restore->add_option("--exchange-dir", exchange_dir, "Exchange directory of the external backend");
    restore->add_option("--target-scale", target_scale, "Output upscale factor");
    restore->add_option("--timeout", timeout, "External backend timeout in seconds");
    restore->add_option("--reference", reference_restore, "Reference scene for the oracle backend");

    // refine
    std::optional<int> iters;
    auto* refine = app.add_subcommand("refine", "Refine the scene against restored pseudo ground truth");
    refine->add_option("--out", out, "Run directory")->required();
    refine->add_option("--iters", iters, "Optimization iterations");

    // eval
    std::string reference, mode = "fps5";
    std::optional<int> view_size;
    auto* eval = app.add_subcommand("eval", "Render evaluation views and score them");
    eval->add_option("--out", out, "Run directory")->required();
    eval->add_option("--reference", reference, "Reference scene (.gsb) to score against");
    eval->add_option("--mode", mode, "Camera selection, fpsN = N farthest-point locations");
    eval->add_option("--view-size", view_size, "Evaluation view size in pixels");

    // dataset-gen
    std::string kind = "box_room";
    int count = 1;
    std::optional<int> height, frames;
    auto* dgen = app.add_subcommand("dataset-gen", "Generate paired GT / degraded samples from fixtures");
    dgen->add_option("--out", out, "Dataset root")->required();
    dgen->add_option("--kind", kind, "box_room | corridor | cluttered");
    dgen->add_option("--count", count, "Number of samples")->check(CLI::PositiveNumber);
    dgen->add_option("--height", height, "ERP height");
    dgen->add_option("--frames", frames, "Frames per sample");

    std::vector<std::string> verify_paths;
    auto* verify = app.add_subcommand("verify", "Check dataset samples against their manifests");
    verify->add_option("paths", verify_paths, "Sample directories or dataset roots")->required();

    int fixture_height = 128;
    auto* fixture = app.add_subcommand("fixture", "Write a fixture scene and its origin RGB-D panorama");
    fixture->add_option("--out", out, "Output directory")->required();
    fixture->add_option("--kind", kind, "box_room | corridor | cluttered");
    fixture->add_option("--height", fixture_height, "ERP height")->check(CLI::PositiveNumber);

    auto* show = app.add_subcommand("config", "Print the effective config");
    std::string save_to;
    show->add_option("--save", save_to, "Write it to a file instead");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return e.get_exit_code() == 0 ? code : kExitUsage;
    }

    if (g.threads > 0) ::setenv("PANOSPLAT_THREADS", std::to_string(g.threads).c_str(), 1);
    ps_set_log_callback(on_log, &g);

    try {
        Config cfg;
        Overrides o;
        auto open_run = [&](Run& run) { check(ps_run_open(out.c_str(), cfg.ptr, &run.ptr)); };
        char* summary = nullptr;

        if (init->parsed()) {
            add_if(o, "init.lift.stride", stride);
            add_if(o, "init.depth_scale", depth_scale);
            load_config(g, cfg, o);
            Run run;
            open_run(run);
            check(ps_run_init(run.ptr, pano.c_str(), depth.c_str(), &summary));
        } else if (plan->parsed()) {
            add_if(o, "plan.tau", tau);
            load_config(g, cfg, o);
            Run run;
            open_run(run);
            check(ps_run_plan(run.ptr, &summary));
        } else if (render->parsed()) {
            load_config(g, cfg, o);
            Run run;
            open_run(run);
            check(ps_run_render_degraded(run.ptr, &summary));
        } else if (restore->parsed()) {
            add_if(o, "restore.backend", backend);
            add_if(o, "restore.external.exchange_dir", exchange_dir);
            add_if(o, "restore.target_scale", target_scale);
            add_if(o, "restore.external.timeout_s", timeout);
            add_if(o, "restore.reference_scene", reference_restore);
            load_config(g, cfg, o);
            Run run;
            open_run(run);
            check(ps_run_restore(run.ptr, &summary));
        } else if (refine->parsed()) {
            add_if(o, "refine.iters", iters);
            load_config(g, cfg, o);
            Run run;
            open_run(run);
            check(ps_run_refine(run.ptr, &summary));
        } else if (eval->parsed()) {
            if (mode.rfind("fps", 0) != 0 || mode.size() == 3 ||
                mode.find_first_not_of("0123456789", 3) != std::string::npos)
                throw Failure{PS_ERR_INVALID_ARGUMENT, "--mode must look like fps5, got " + mode};
            o.emplace_back("eval.n_cameras", mode.substr(3));
            add_if(o, "eval.view_size", view_size);
            load_config(g, cfg, o);
            Run run;
            open_run(run);
            check(ps_run_eval(run.ptr, reference.empty() ? nullptr : reference.c_str(), &summary));
        } else if (dgen->parsed()) {
            add_if(o, "dataset.height", height);
            add_if(o, "dataset.n_frames", frames);
            load_config(g, cfg, o);
            check(ps_dataset_generate(kind.c_str(), ps_config_get_seed(cfg.ptr), count, cfg.ptr, out.c_str(), &summary));
        } else if (verify->parsed()) {
            int failed = 0;
            for (const fs::path& p : verify_targets(verify_paths)) {
                int ok = 0;
                char* problems = nullptr;
                check(ps_dataset_verify(p.string().c_str(), &ok, &problems));
                std::printf("%s %s\n", ok ? "ok  " : "FAIL", p.string().c_str());
                if (!ok) {
                    ++failed;
                    std::fputs(problems, stdout);
                }
                ps_string_free(problems);
            }
            return failed == 0 ? kExitOk : kExitPipeline;
        } else if (fixture->parsed()) {
            load_config(g, cfg, o);
            check(ps_fixture_write(kind.c_str(), ps_config_get_seed(cfg.ptr), fixture_height, cfg.ptr, out.c_str()));
            std::printf("wrote %s/{gt.gsb,pano.png,depth.pfm}\n", out.c_str());
        } else if (show->parsed()) {
            load_config(g, cfg, o);
            if (!save_to.empty())
                check(ps_config_save(cfg.ptr, save_to.c_str()));
            else
                check(ps_config_to_json(cfg.ptr, &summary));
        }
        emit(summary);
    } catch (const Failure& f) {
        std::fprintf(stderr, "panosplat: %s: %s\n", ps_status_name(f.status), f.message.c_str());
        return exit_code_for(f.status);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "panosplat: %s\n", e.what());
        return kExitPipeline;
    }
    return kExitOk;
}
