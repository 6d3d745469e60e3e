// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "panosplat/panosplat.h"

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "panosplat/config.hpp"
#include "panosplat/dataset_tool.hpp"
#include "panosplat/error.hpp"
#include "panosplat/log.hpp"
#include "panosplat/parallel.hpp"
#include "panosplat/pipeline.hpp"
#include "panosplat/scene_model.hpp"

struct ps_config {
    panosplat::PipelineConfig cfg;
};

struct ps_scene {
    panosplat::GaussianScene scene;
};

struct ps_run {
    panosplat::Pipeline pipeline;
};

namespace {

thread_local std::string g_last_error;

ps_status to_status(panosplat::ErrorCode code) {
    using panosplat::ErrorCode;
    switch (code) {
    case ErrorCode::InvalidArgument: return PS_ERR_INVALID_ARGUMENT;
    case ErrorCode::Domain: return PS_ERR_DOMAIN;
    case ErrorCode::NotFound: return PS_ERR_NOT_FOUND;
    case ErrorCode::Io: return PS_ERR_IO;
    case ErrorCode::Parse: return PS_ERR_PARSE;
    case ErrorCode::Protocol: return PS_ERR_PROTOCOL;
    case ErrorCode::Timeout: return PS_ERR_TIMEOUT;
    case ErrorCode::Pipeline: return PS_ERR_PIPELINE;
    }
    return PS_ERR_INTERNAL;
}

template <class F>
ps_status guarded(F&& body) {
    g_last_error.clear();
    try {
        body();
        return PS_OK;
    } catch (const panosplat::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
    } catch (const std::exception& e) {
        g_last_error = e.what();
    } catch (...) {
        g_last_error = "unknown error";
    }
    return PS_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
    if (p == nullptr) panosplat::fail(panosplat::ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void put_summary(char** out, const std::string& s) {
    if (out != nullptr) *out = dup_string(s);
}

const panosplat::PipelineConfig& config_or_default(const ps_config* cfg) {
    static const panosplat::PipelineConfig defaults;
    return cfg != nullptr ? cfg->cfg : defaults;
}

}  // namespace

extern "C" {

const char* ps_version(void) { return "0.1.0"; }

const char* ps_status_name(ps_status status) {
    switch (status) {
    case PS_OK: return "ok";
    case PS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PS_ERR_DOMAIN: return "domain error";
    case PS_ERR_NOT_FOUND: return "not found";
    case PS_ERR_IO: return "i/o error";
    case PS_ERR_PARSE: return "parse error";
    case PS_ERR_PROTOCOL: return "protocol error";
    case PS_ERR_TIMEOUT: return "timeout";
    case PS_ERR_PIPELINE: return "pipeline error";
    case PS_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* ps_last_error(void) { return g_last_error.c_str(); }

void ps_string_free(char* s) { std::free(s); }

void ps_set_log_callback(ps_log_fn fn, void* user) {
    if (fn == nullptr) {
        panosplat::set_log_sink({});
        return;
    }
    panosplat::set_log_sink([fn, user](panosplat::LogLevel level, const std::string& msg) {
        fn(static_cast<ps_log_level>(level), msg.c_str(), user);
    });
}

int ps_worker_count(void) { return panosplat::worker_count(); }

ps_status ps_config_new(ps_config** out) {
    return guarded([&] {
        need(out, "out");
        *out = new ps_config{};
    });
}

ps_status ps_config_load(const char* path, ps_config** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new ps_config{panosplat::load_config(path)};
    });
}

ps_status ps_config_parse(const char* json, ps_config** out) {
    return guarded([&] {
        need(json, "json");
        need(out, "out");
        *out = new ps_config{panosplat::parse_config(json)};
    });
}

ps_status ps_config_set(ps_config* cfg, const char* key, const char* value) {
    return guarded([&] {
        need(cfg, "cfg");
        need(key, "key");
        need(value, "value");
        panosplat::apply_override(cfg->cfg, key, value);
    });
}

ps_status ps_config_set_seed(ps_config* cfg, uint64_t seed) {
    return guarded([&] {
        need(cfg, "cfg");
        cfg->cfg.seed = seed;
    });
}

uint64_t ps_config_get_seed(const ps_config* cfg) { return config_or_default(cfg).seed; }

ps_status ps_config_to_json(const ps_config* cfg, char** out) {
    return guarded([&] {
        need(cfg, "cfg");
        need(out, "out");
        *out = dup_string(panosplat::serialize_config(cfg->cfg));
    });
}

ps_status ps_config_save(const ps_config* cfg, const char* path) {
    return guarded([&] {
        need(cfg, "cfg");
        need(path, "path");
        panosplat::save_config(path, cfg->cfg);
    });
}

void ps_config_free(ps_config* cfg) { delete cfg; }

ps_status ps_scene_load(const char* path, ps_scene** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new ps_scene{panosplat::load_scene(path)};
    });
}

ps_status ps_scene_save(const ps_scene* scene, const char* path) {
    return guarded([&] {
        need(scene, "scene");
        need(path, "path");
        panosplat::save_scene(scene->scene, path);
    });
}

ps_status ps_scene_fixture(const char* kind, uint64_t seed, ps_scene** out) {
    return guarded([&] {
        need(kind, "kind");
        need(out, "out");
        *out = new ps_scene{panosplat::synth_fixture_scene(panosplat::parse_fixture_kind(kind), seed).gt_scene};
    });
}

size_t ps_scene_size(const ps_scene* scene) { return scene != nullptr ? scene->scene.size() : 0; }

ps_status ps_scene_bounds(const ps_scene* scene, double min_out[3], double max_out[3]) {
    return guarded([&] {
        need(scene, "scene");
        need(min_out, "min_out");
        need(max_out, "max_out");
        const panosplat::SceneBounds b = panosplat::scene_bounds(scene->scene);
        for (int i = 0; i < 3; ++i) {
            min_out[i] = b.min[i];
            max_out[i] = b.max[i];
        }
    });
}

void ps_scene_free(ps_scene* scene) { delete scene; }

ps_status ps_run_open(const char* dir, const ps_config* cfg, ps_run** out) {
    return guarded([&] {
        need(dir, "dir");
        need(out, "out");
        *out = new ps_run{panosplat::Pipeline(dir, config_or_default(cfg))};
    });
}

ps_status ps_run_init(ps_run* run, const char* pano_png, const char* depth_pfm, char** summary_out) {
    return guarded([&] {
        need(run, "run");
        need(pano_png, "pano_png");
        need(depth_pfm, "depth_pfm");
        put_summary(summary_out, run->pipeline.init(pano_png, depth_pfm));
    });
}

ps_status ps_run_plan(ps_run* run, char** summary_out) {
    return guarded([&] {
        need(run, "run");
        put_summary(summary_out, run->pipeline.plan());
    });
}

ps_status ps_run_render_degraded(ps_run* run, char** summary_out) {
    return guarded([&] {
        need(run, "run");
        put_summary(summary_out, run->pipeline.render_degraded());
    });
}

ps_status ps_run_restore(ps_run* run, char** summary_out) {
    return guarded([&] {
        need(run, "run");
        put_summary(summary_out, run->pipeline.restore());
    });
}

ps_status ps_run_refine(ps_run* run, char** summary_out) {
    return guarded([&] {
        need(run, "run");
        const int every = 500;
        put_summary(summary_out, run->pipeline.refine([every](const panosplat::LossRecord& r) {
            if (r.iter % every == 0) {
                char line[160];
                std::snprintf(line, sizeof line, "refine: iter %d loss %.6f K=%zu", r.iter, r.total, r.gaussians);
                panosplat::log_info(line);
            }
            return true;
        }));
    });
}

ps_status ps_run_eval(ps_run* run, const char* reference_scene, char** summary_out) {
    return guarded([&] {
        need(run, "run");
        put_summary(summary_out, run->pipeline.eval(reference_scene != nullptr ? reference_scene : ""));
    });
}

void ps_run_free(ps_run* run) { delete run; }

ps_status ps_fixture_write(const char* kind, uint64_t seed, int height, const ps_config* cfg, const char* out_dir) {
    return guarded([&] {
        need(kind, "kind");
        need(out_dir, "out_dir");
        const auto& c = config_or_default(cfg);
        c.validate();
        panosplat::FixtureOptions fo;
        fo.sheet_spacing = c.dataset.sheet_spacing;
        const auto spec = panosplat::synth_fixture_scene(panosplat::parse_fixture_kind(kind), seed, fo);
        panosplat::write_fixture_inputs(spec, panosplat::ErpGrid(height, 2 * height), out_dir, c.render);
    });
}

ps_status ps_dataset_generate(const char* kind, uint64_t seed, int count, const ps_config* cfg, const char* out_dir,
                              char** summary_out) {
    return guarded([&] {
        need(kind, "kind");
        need(out_dir, "out_dir");
        if (count < 1) panosplat::fail(panosplat::ErrorCode::InvalidArgument, "count must be at least 1");
        const auto& c = config_or_default(cfg);
        c.validate();
        const auto k = panosplat::parse_fixture_kind(kind);
        panosplat::FixtureOptions fo;
        fo.sheet_spacing = c.dataset.sheet_spacing;
        std::vector<panosplat::SceneSpec> specs;
        for (int i = 0; i < count; ++i) specs.push_back(panosplat::synth_fixture_scene(k, seed + i, fo));
        const auto results = panosplat::generate_dataset(
            specs, panosplat::ErpGrid(c.dataset.height, 2 * c.dataset.height), out_dir, panosplat::dataset_options(c));
        nlohmann::json samples = nlohmann::json::array();
        int written = 0;
        for (std::size_t i = 0; i < results.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "sample_%05zu", i);
            nlohmann::json s = {{"sample", name}, {"seed", seed + i}, {"written", results[i].written}};
            if (results[i].written) {
                ++written;
                s["frames"] = results[i].manifest.n_frames;
                s["length"] = results[i].trajectory.length();
            } else {
                s["skip_reason"] = results[i].skip_reason;
                panosplat::log_warn(std::string(name) + " skipped: " + results[i].skip_reason);
            }
            samples.push_back(s);
        }
        put_summary(summary_out, nlohmann::json{{"written", written}, {"samples", samples}}.dump(2));
    });
}

ps_status ps_dataset_verify(const char* sample_dir, int* ok_out, char** problems_out) {
    return guarded([&] {
        need(sample_dir, "sample_dir");
        need(ok_out, "ok_out");
        const panosplat::VerifyReport r = panosplat::verify_sample(sample_dir);
        *ok_out = r.ok() ? 1 : 0;
        std::string text;
        for (const auto& p : r.problems) text += p + "\n";
        put_summary(problems_out, text);
    });
}

}  // extern "C"
