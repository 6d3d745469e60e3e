// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "panosplat/config.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include "panosplat/error.hpp"

namespace panosplat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// The same field walk drives serialization and parsing, so the two cannot
// drift apart.
class Writer {
public:
    json root = json::object();

    template <class T>
    void field(const char* key, const T& value) {
        (*top_)[key] = value;
    }
    void field(const char* key, const fs::path& value) { (*top_)[key] = value.generic_string(); }
    void field(const char* key, const RestoreBackend& value) { (*top_)[key] = backend_name(value); }
    void field(const char* key, const std::vector<Metric>& value) {
        json arr = json::array();
        for (Metric m : value) arr.push_back(metric_name(m));
        (*top_)[key] = arr;
    }
    void object(const char* key, const std::function<void()>& body) {
        json* parent = top_;
        (*parent)[key] = json::object();
        top_ = &(*parent)[key];
        body();
        top_ = parent;
    }

private:
    json* top_ = &root;
};

class Reader {
public:
    explicit Reader(const json& root) {
        if (!root.is_object()) fail(ErrorCode::Parse, "config: top level must be an object");
        stack_.push_back({&root, "", {}});
    }

    void field(const char* key, int& out) {
        read(key, [&](const json& v) {
            if (!v.is_number_integer()) return false;
            const auto x = v.get<std::int64_t>();
            if (x < INT32_MIN || x > INT32_MAX) return false;
            out = static_cast<int>(x);
            return true;
        }, "an integer");
    }
    void field(const char* key, unsigned long& out) { field_unsigned(key, out); }
    void field(const char* key, unsigned long long& out) { field_unsigned(key, out); }
    void field(const char* key, double& out) {
        read(key, [&](const json& v) {
            if (!v.is_number()) return false;
            out = v.get<double>();
            return true;
        }, "a number");
    }
    void field(const char* key, fs::path& out) {
        read(key, [&](const json& v) {
            if (!v.is_string()) return false;
            out = v.get<std::string>();
            return true;
        }, "a string");
    }
    void field(const char* key, RestoreBackend& out) {
        read(key, [&](const json& v) {
            if (!v.is_string()) return false;
            out = parse_backend(v.get<std::string>());
            return true;
        }, "a backend name");
    }
    void field(const char* key, std::vector<Metric>& out) {
        read(key, [&](const json& v) {
            if (!v.is_array()) return false;
            std::vector<Metric> ms;
            for (const json& e : v) {
                if (!e.is_string()) return false;
                ms.push_back(parse_metric(e.get<std::string>()));
            }
            out = std::move(ms);
            return true;
        }, "a list of metric names");
    }

    void object(const char* key, const std::function<void()>& body) {
        Frame& f = stack_.back();
        f.seen.insert(key);
        const auto it = f.node->find(key);
        if (it == f.node->end()) return;
        const std::string path = where(key);
        if (!it->is_object()) fail(ErrorCode::Parse, "config: " + path + " must be an object");
        stack_.push_back({&*it, path, {}});
        body();
        finish();
        stack_.pop_back();
    }

    void finish() {
        const Frame& f = stack_.back();
        for (const auto& [k, v] : f.node->items())
            if (!f.seen.count(k)) fail(ErrorCode::Parse, "config: unknown key " + where(k));
    }

private:
    struct Frame {
        const json* node;
        std::string path;
        std::set<std::string> seen;
    };
    std::vector<Frame> stack_;

    std::string where(const std::string& key) const {
        const std::string& p = stack_.back().path;
        return p.empty() ? key : p + "." + key;
    }

    template <class U>
    void field_unsigned(const char* key, U& out) {
        read(key, [&](const json& v) {
            if (!v.is_number_unsigned()) return false;
            out = static_cast<U>(v.get<std::uint64_t>());
            return true;
        }, "a non-negative integer");
    }

    template <class F>
    void read(const char* key, F&& assign, const char* expected) {
        Frame& f = stack_.back();
        f.seen.insert(key);
        const auto it = f.node->find(key);
        if (it == f.node->end()) return;
        bool ok = false;
        try {
            ok = assign(*it);
        } catch (const json::exception&) {
            ok = false;
        } catch (const Error& e) {
            fail(ErrorCode::Parse, "config: " + where(key) + ": " + e.what());
        }
        if (!ok) fail(ErrorCode::Parse, "config: " + where(key) + " must be " + expected);
    }
};

template <class V, class C>
void visit(V& v, C& c) {
    v.field("seed", c.seed);
    v.object("init", [&] {
        v.object("lift", [&] {
            v.field("stride", c.init.lift.stride);
            v.field("scale_gain", c.init.lift.scale_gain);
            v.field("opacity_init", c.init.lift.opacity_init);
        });
        v.field("depth_scale", c.init.depth_scale);
    });
    v.object("nav", [&] {
        v.field("camera_height", c.nav.camera_height);
        v.field("clearance", c.nav.clearance);
        v.field("cell_size", c.nav.cell_size);
        v.field("band_low", c.nav.band_low);
        v.field("band_high", c.nav.band_high);
    });
    v.object("plan", [&] {
        v.field("tau", c.plan.tau);
        v.field("n_offsets", c.plan.n_offsets);
        v.field("max_range", c.plan.max_range);
    });
    v.object("frames", [&] {
        v.field("n_frames", c.frames.n_frames);
        v.field("fps", c.frames.fps);
        v.field("speed", c.frames.speed);
    });
    v.object("render", [&] {
        v.field("aa_dilation", c.render.aa_dilation);
        v.field("z_near", c.render.z_near);
        v.field("alpha_min", c.render.alpha_min);
        v.field("sigma_cutoff", c.render.sigma_cutoff);
        v.field("transmittance_min", c.render.transmittance_min);
    });
    v.object("restore", [&] {
        v.field("backend", c.restore.backend);
        v.field("target_scale", c.restore.target_scale);
        v.object("external", [&] {
            v.field("exchange_dir", c.restore.external.exchange_dir);
            v.field("timeout_s", c.restore.external.timeout_s);
            v.field("poll_interval_s", c.restore.external.poll_interval_s);
        });
        v.field("reference_scene", c.restore.reference_scene);
    });
    v.object("refine", [&] {
        auto& r = c.refine.refine;
        v.field("iters", r.iters);
        v.object("lr", [&] {
            v.field("mu", r.lr.mu);
            v.field("mu_final_factor", r.lr.mu_final_factor);
            v.field("log_scale", r.lr.log_scale);
            v.field("rot", r.lr.rot);
            v.field("opacity_logit", r.lr.opacity_logit);
            v.field("color", r.lr.color);
        });
        v.field("lambda_ssim", r.lambda_ssim);
        v.field("densify_interval", r.densify_interval);
        v.field("densify_from", r.densify_from);
        v.field("densify_until", r.densify_until);
        v.field("densify_grad_threshold", r.densify_grad_threshold);
        v.field("percent_dense", r.percent_dense);
        v.field("prune_opacity", r.prune_opacity);
        v.field("max_gaussians", r.max_gaussians);
        v.field("views_per_iter", r.views_per_iter);
        v.field("checkpoint_interval", r.checkpoint_interval);
        v.field("views_per_frame", c.refine.views_per_frame);
        v.field("fov", c.refine.fov);
        v.field("view_size", c.refine.view_size);
    });
    v.object("eval", [&] {
        v.field("n_cameras", c.eval.n_cameras);
        v.field("views_per_camera", c.eval.views_per_camera);
        v.field("pool_size", c.eval.pool_size);
        v.field("fov", c.eval.fov);
        v.field("view_size", c.eval.view_size);
        v.field("metrics", c.eval.metrics);
    });
    v.object("dataset", [&] {
        v.field("height", c.dataset.height);
        v.field("n_frames", c.dataset.n_frames);
        v.field("anchor_spacing", c.dataset.anchor_spacing);
        v.field("scale_gain", c.dataset.scale_gain);
        v.field("sheet_spacing", c.dataset.sheet_spacing);
    });
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::NotFound, "cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

const char* backend_name(RestoreBackend b) {
    switch (b) {
    case RestoreBackend::Identity: return "identity";
    case RestoreBackend::PushPull: return "pushpull";
    case RestoreBackend::External: return "external";
    case RestoreBackend::Oracle: return "oracle";
    }
    return "unknown";
}

RestoreBackend parse_backend(std::string_view name) {
    for (RestoreBackend b : {RestoreBackend::Identity, RestoreBackend::PushPull, RestoreBackend::External,
                             RestoreBackend::Oracle})
        if (name == backend_name(b)) return b;
    fail(ErrorCode::InvalidArgument, "unknown restore backend: " + std::string(name));
}

Metric parse_metric(std::string_view name) {
    for (Metric m : {Metric::Psnr, Metric::Ssim, Metric::WsPsnr, Metric::WsSsim})
        if (name == metric_name(m)) return m;
    fail(ErrorCode::InvalidArgument, "unknown metric: " + std::string(name));
}

void PipelineConfig::validate() const {
    auto check = [](bool ok, const char* what) {
        if (!ok) fail(ErrorCode::InvalidArgument, std::string("config: ") + what);
    };
    check(init.lift.stride >= 1, "init.lift.stride must be >= 1");
    check(positive(init.lift.scale_gain), "init.lift.scale_gain must be positive");
    check(init.lift.opacity_init > 0.0 && init.lift.opacity_init < 1.0, "init.lift.opacity_init must be in (0, 1)");
    check(positive(init.depth_scale), "init.depth_scale must be positive");
    check(positive(nav.camera_height) && positive(nav.cell_size), "nav.camera_height and nav.cell_size must be positive");
    check(std::isfinite(nav.clearance) && nav.clearance >= 0.0, "nav.clearance must be non-negative");
    check(nav.band_low < nav.band_high, "nav.band_low must be below nav.band_high");
    check(plan.tau >= 1, "plan.tau must be >= 1");
    check(plan.n_offsets >= 1, "plan.n_offsets must be >= 1");
    check(positive(plan.max_range), "plan.max_range must be positive");
    check(frames.n_frames >= 1, "frames.n_frames must be >= 1");
    check(positive(frames.fps) && positive(frames.speed), "frames.fps and frames.speed must be positive");
    check(std::isfinite(render.aa_dilation) && render.aa_dilation >= 0.0, "render.aa_dilation must be non-negative");
    check(positive(render.z_near), "render.z_near must be positive");
    check(render.alpha_min >= 0.0 && render.alpha_min < 1.0, "render.alpha_min must be in [0, 1)");
    check(positive(render.sigma_cutoff), "render.sigma_cutoff must be positive and finite");
    check(render.transmittance_min >= 0.0 && render.transmittance_min < 1.0,
          "render.transmittance_min must be in [0, 1)");
    check(restore.target_scale >= 1, "restore.target_scale must be >= 1");
    check(positive(restore.external.timeout_s) && positive(restore.external.poll_interval_s),
          "restore.external timeouts must be positive");
    if (restore.backend == RestoreBackend::External)
        check(!restore.external.exchange_dir.empty(), "restore.external.exchange_dir is required by the external backend");
    if (restore.backend == RestoreBackend::Oracle)
        check(!restore.reference_scene.empty(), "restore.reference_scene is required by the oracle backend");
    refine.refine.validate();
    check(refine.views_per_frame >= 1, "refine.views_per_frame must be >= 1");
    check(refine.fov > 0.0 && refine.fov < std::numbers::pi, "refine.fov must be in (0, pi)");
    check(refine.view_size >= 0, "refine.view_size must be >= 0");
    check(eval.n_cameras >= 1 && eval.views_per_camera >= 1, "eval camera counts must be >= 1");
    check(eval.pool_size >= eval.n_cameras, "eval.pool_size must be >= eval.n_cameras");
    check(eval.fov > 0.0 && eval.fov < std::numbers::pi, "eval.fov must be in (0, pi)");
    check(eval.view_size >= 16, "eval.view_size must be >= 16");
    check(!eval.metrics.empty(), "eval.metrics must not be empty");
    check(std::set<Metric>(eval.metrics.begin(), eval.metrics.end()).size() == eval.metrics.size(),
          "eval.metrics has duplicates");
    check(dataset.height >= 8, "dataset.height must be >= 8");
    check(dataset.n_frames >= 1, "dataset.n_frames must be >= 1");
    check(positive(dataset.anchor_spacing) && positive(dataset.scale_gain) && positive(dataset.sheet_spacing),
          "dataset spacings and scale_gain must be positive");
}

std::string serialize_config(const PipelineConfig& cfg) {
    Writer w;
    PipelineConfig copy = cfg;
    visit(w, copy);
    return w.root.dump(2) + "\n";
}

namespace {

PipelineConfig parse_unchecked(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string("config: ") + e.what());
    }
    PipelineConfig cfg;
    Reader r(j);
    visit(r, cfg);
    r.finish();
    return cfg;
}

}  // namespace

PipelineConfig parse_config(std::string_view text) {
    PipelineConfig cfg = parse_unchecked(text);
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const fs::path& path) {
    try {
        return parse_config(read_text(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NotFound) throw;
        fail(e.code(), path.string() + ": " + e.what());
    }
}

void save_config(const fs::path& path, const PipelineConfig& cfg) { write_file_atomic(path, serialize_config(cfg)); }

void apply_override(PipelineConfig& cfg, std::string_view key, std::string_view value) {
    json root = json::parse(serialize_config(cfg));
    json* node = &root;
    std::string k(key);
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = k.find('.', start);
        const std::string part = k.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_object() || !node->contains(part))
            fail(ErrorCode::InvalidArgument, "config: unknown key " + k);
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (node->is_object()) fail(ErrorCode::InvalidArgument, "config: " + k + " is a section, not a value");
    json v;
    try {
        v = json::parse(value);
    } catch (const json::exception&) {
        v = std::string(value);
    }
    *node = v;
    try {
        cfg = parse_unchecked(root.dump());
    } catch (const Error& e) {
        fail(ErrorCode::InvalidArgument, e.what());
    }
}

}  // namespace panosplat
