// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "panosplat/restorer.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "panosplat/error.hpp"
#include "panosplat/image_io.hpp"

namespace fs = std::filesystem;

namespace panosplat {

void RestoreRequest::validate() const {
    degraded.validate();
    require(anchor.height() == degraded.grid.height && anchor.width() == degraded.grid.width && anchor.channels() == 3,
            ErrorCode::InvalidArgument, "anchor shape does not match the degraded frames");
    require(target_scale >= 1, ErrorCode::InvalidArgument, "target_scale must be at least 1");
    require(!scene_id.empty() && scene_id.find('/') == std::string::npos && scene_id != "." && scene_id != "..",
            ErrorCode::InvalidArgument, "scene_id must be a plain non-empty name");
}

Image upsample_nearest(const Image& image, int scale) {
    require(scale >= 1, ErrorCode::InvalidArgument, "upsampling scale must be at least 1");
    if (scale == 1) return image;
    Image out(image.height() * scale, image.width() * scale, image.channels());
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) {
            const auto src = image.pixel(y / scale, x / scale);
            std::copy(src.begin(), src.end(), out.pixel(y, x).begin());
        }
    return out;
}

namespace {

struct Level {
    Image color;   // normalized
    Image weight;  // coverage in [0, 1]
};

Level push(const Level& fine) {
    const int h = (fine.color.height() + 1) / 2, w = (fine.color.width() + 1) / 2;
    Level coarse{Image(h, w, 3), Image(h, w, 1)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double sw = 0.0, sc[3] = {0.0, 0.0, 0.0};
            for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                    const int fy = 2 * y + dy, fx = 2 * x + dx;
                    if (fy >= fine.color.height() || fx >= fine.color.width()) continue;
                    const double wt = fine.weight.at(fy, fx);
                    sw += wt;
                    for (int c = 0; c < 3; ++c) sc[c] += wt * fine.color.at(fy, fx, c);
                }
            }
            if (sw > 0.0)
                for (int c = 0; c < 3; ++c) coarse.color.at(y, x, c) = sc[c] / sw;
            coarse.weight.at(y, x) = std::min(1.0, sw);
        }
    }
    return coarse;
}

// Bilinear sample of a coarse level at the center of fine pixel (y, x).
void sample_coarse(const Image& coarse, int y, int x, double out[3]) {
    const double cy = std::clamp((y + 0.5) / 2.0 - 0.5, 0.0, coarse.height() - 1.0);
    const double cx = std::clamp((x + 0.5) / 2.0 - 0.5, 0.0, coarse.width() - 1.0);
    const int y0 = static_cast<int>(cy), x0 = static_cast<int>(cx);
    const int y1 = std::min(y0 + 1, coarse.height() - 1), x1 = std::min(x0 + 1, coarse.width() - 1);
    const double ty = cy - y0, tx = cx - x0;
    for (int c = 0; c < 3; ++c) {
        const double top = (1 - tx) * coarse.at(y0, x0, c) + tx * coarse.at(y0, x1, c);
        const double bottom = (1 - tx) * coarse.at(y1, x0, c) + tx * coarse.at(y1, x1, c);
        out[c] = (1 - ty) * top + ty * bottom;
    }
}

Image mean_color(const Image& img) {
    double s[3] = {0, 0, 0};
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < 3; ++c) s[c] += img.at(y, x, c);
    Image out(1, 1, 3);
    const double n = static_cast<double>(img.height()) * img.width();
    for (int c = 0; c < 3; ++c) out.at(0, 0, c) = s[c] / n;
    return out;
}

void clamp_unit(Image& img) {
    for (double& v : img.data()) v = std::clamp(v, 0.0, 1.0);
}

}  // namespace

bool pushpull_fill(Image& rgb, const Image& alpha) {
    require(rgb.channels() == 3 && alpha.channels() == 1 && rgb.height() == alpha.height() && rgb.width() == alpha.width(),
            ErrorCode::InvalidArgument, "push-pull needs an RGB frame and a matching alpha map");
    Level base{rgb, Image(rgb.height(), rgb.width(), 1)};
    bool any_valid = false, any_hole = false;
    for (int y = 0; y < rgb.height(); ++y)
        for (int x = 0; x < rgb.width(); ++x) {
            const double a = alpha.at(y, x);
            const bool valid = a >= kHoleThreshold;
            base.weight.at(y, x) = valid ? std::min(a, 1.0) : 0.0;
            any_valid = any_valid || valid;
            any_hole = any_hole || !valid;
        }
    if (!any_valid) return false;
    if (!any_hole) return true;

    std::vector<Level> pyramid{std::move(base)};
    while (pyramid.back().color.height() > 1 || pyramid.back().color.width() > 1) pyramid.push_back(push(pyramid.back()));

    // pull: blend each level's own estimate with the upsampled coarser fill
    Image filled = pyramid.back().color;
    for (int l = static_cast<int>(pyramid.size()) - 2; l >= 0; --l) {
        const Level& lv = pyramid[l];
        Image next(lv.color.height(), lv.color.width(), 3);
        for (int y = 0; y < next.height(); ++y)
            for (int x = 0; x < next.width(); ++x) {
                double up[3];
                sample_coarse(filled, y, x, up);
                const double w = lv.weight.at(y, x);
                for (int c = 0; c < 3; ++c) next.at(y, x, c) = w * lv.color.at(y, x, c) + (1.0 - w) * up[c];
            }
        filled = std::move(next);
    }
    for (int y = 0; y < rgb.height(); ++y)
        for (int x = 0; x < rgb.width(); ++x)
            if (alpha.at(y, x) < kHoleThreshold)
                for (int c = 0; c < 3; ++c) rgb.at(y, x, c) = std::clamp(filled.at(y, x, c), 0.0, 1.0);
    return true;
}

RestoreResult restore_identity(const RestoreRequest& req) {
    req.validate();
    RestoreResult out{{}, "identity"};
    for (const Image& f : req.degraded.frames) out.frames.push_back(upsample_nearest(f, req.target_scale));
    return out;
}

RestoreResult restore_pushpull(const RestoreRequest& req) {
    req.validate();
    RestoreResult out{{}, "pushpull"};
    const Image fallback = mean_color(req.anchor);
    for (std::size_t t = 0; t < req.degraded.length(); ++t) {
        Image frame = req.degraded.frames[t];
        const Image& alpha = req.degraded.alpha[t];
        if (!pushpull_fill(frame, alpha)) {
            for (int y = 0; y < frame.height(); ++y)
                for (int x = 0; x < frame.width(); ++x)
                    for (int c = 0; c < 3; ++c) frame.at(y, x, c) = fallback.at(0, 0, c);
        }
        if (t == 0) {
            for (int y = 0; y < frame.height(); ++y)
                for (int x = 0; x < frame.width(); ++x)
                    if (alpha.at(y, x) < kHoleThreshold)
                        for (int c = 0; c < 3; ++c) frame.at(y, x, c) = req.anchor.at(y, x, c);
        }
        clamp_unit(frame);
        out.frames.push_back(upsample_nearest(frame, req.target_scale));
    }
    return out;
}

// ---------------------------------------------------------------------------
// file exchange

namespace {

std::string frame_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05zu.png", i);
    return buf;
}

void write_png_atomic(const fs::path& path, const Image& img) {
    fs::path tmp = path;
    tmp += ".tmp";
    write_png(tmp, img);
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

[[noreturn]] void protocol_error(const fs::path& where, const std::string& what) {
    fail(ErrorCode::Protocol, where.string() + ": " + what);
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::Io, "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) fail(ErrorCode::Io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

RestoreResult restore_external(const RestoreRequest& req, const ExternalOptions& opts) {
    req.validate();
    require(!opts.exchange_dir.empty(), ErrorCode::InvalidArgument, "exchange directory not set");
    require(opts.timeout_s > 0.0 && opts.poll_interval_s > 0.0, ErrorCode::InvalidArgument,
            "timeout and poll interval must be positive");
    const fs::path dir = opts.exchange_dir / req.scene_id;
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::create_directories(dir / "frames", ec);
    fs::create_directories(dir / "alpha", ec);
    if (ec) fail(ErrorCode::Io, "cannot create exchange directory " + dir.string() + ": " + ec.message());

    const std::size_t T = req.degraded.length();
    nlohmann::json j;
    j["schema_version"] = kExchangeSchemaVersion;
    j["scene_id"] = req.scene_id;
    j["T"] = T;
    j["H"] = req.degraded.grid.height;
    j["W"] = req.degraded.grid.width;
    j["target_scale"] = req.target_scale;
    j["frames"] = nlohmann::json::array();
    j["alpha"] = nlohmann::json::array();
    for (std::size_t t = 0; t < T; ++t) {
        const std::string name = frame_name(t);
        write_png(dir / "frames" / name, req.degraded.frames[t]);
        write_png(dir / "alpha" / name, req.degraded.alpha[t]);
        j["frames"].push_back("frames/" + name);
        j["alpha"].push_back("alpha/" + name);
    }
    write_png(dir / "anchor.png", req.anchor);
    j["anchor"] = "anchor.png";
    write_file_atomic(dir / "request.json", j.dump(2) + "\n");
    write_file_atomic(dir / "REQUEST_READY", "");

    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + std::chrono::duration<double>(opts.timeout_s);
    const auto poll = std::chrono::duration<double>(opts.poll_interval_s);
    for (;;) {
        if (fs::exists(dir / "ERROR")) protocol_error(dir / "ERROR", "adapter reported: " + read_text(dir / "ERROR"));
        if (fs::exists(dir / "RESULT_READY")) break;
        const auto now = clock::now();
        if (now >= deadline) {
            fail(ErrorCode::Timeout, "no result for scene '" + req.scene_id + "' after " + std::to_string(opts.timeout_s) + " s");
        }
        const auto remaining = std::chrono::duration_cast<clock::duration>(deadline - now);
        std::this_thread::sleep_for(std::min(std::chrono::duration_cast<clock::duration>(poll), remaining));
    }

    const fs::path restored = dir / "restored";
    if (!fs::is_directory(restored)) protocol_error(restored, "missing restored directory");
    std::size_t count = 0;
    for (const auto& entry : fs::directory_iterator(restored))
        if (entry.path().extension() == ".png") ++count;
    if (count != T) protocol_error(restored, "expected " + std::to_string(T) + " frames, found " + std::to_string(count));

    const int eh = req.degraded.grid.height * req.target_scale, ew = req.degraded.grid.width * req.target_scale;
    RestoreResult out{{}, "external"};
    for (std::size_t t = 0; t < T; ++t) {
        const fs::path p = restored / frame_name(t);
        if (!fs::exists(p)) protocol_error(p, "missing frame");
        Image img;
        try {
            img = read_png(p);
        } catch (const Error& e) {
            protocol_error(p, e.what());
        }
        if (img.height() != eh || img.width() != ew || img.channels() != 3) {
            protocol_error(p, "expected " + std::to_string(ew) + "x" + std::to_string(eh) + " RGB, got " +
                                  std::to_string(img.width()) + "x" + std::to_string(img.height()) + "x" +
                                  std::to_string(img.channels()));
        }
        out.frames.push_back(std::move(img));
    }
    return out;
}

ExchangeRequest read_exchange_request(const fs::path& scene_dir) {
    const fs::path path = scene_dir / "request.json";
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        protocol_error(path, e.what());
    }
    auto field = [&](const char* key) -> const nlohmann::json& {
        if (!j.contains(key)) protocol_error(path, std::string("missing field '") + key + "'");
        return j.at(key);
    };
    ExchangeRequest r;
    r.scene_dir = scene_dir;
    try {
        if (field("schema_version").get<int>() != kExchangeSchemaVersion) protocol_error(path, "unsupported schema_version");
        r.scene_id = field("scene_id").get<std::string>();
        r.frames = field("T").get<int>();
        r.height = field("H").get<int>();
        r.width = field("W").get<int>();
        r.target_scale = field("target_scale").get<int>();
        r.frame_files = field("frames").get<std::vector<std::string>>();
        r.alpha_files = field("alpha").get<std::vector<std::string>>();
        r.anchor_file = field("anchor").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        protocol_error(path, e.what());
    }
    if (r.frames < 1 || static_cast<int>(r.frame_files.size()) != r.frames || static_cast<int>(r.alpha_files.size()) != r.frames)
        protocol_error(path, "field 'T' disagrees with the frame lists");
    if (r.target_scale < 1) protocol_error(path, "field 'target_scale' must be at least 1");
    return r;
}

RestoreRequest load_exchange_request(const ExchangeRequest& r) {
    RestoreRequest req;
    req.scene_id = r.scene_id;
    req.target_scale = r.target_scale;
    req.degraded.grid = ErpGrid(r.height, r.width);
    for (int t = 0; t < r.frames; ++t) {
        req.degraded.frames.push_back(read_png(r.scene_dir / r.frame_files[t]));
        req.degraded.alpha.push_back(read_png(r.scene_dir / r.alpha_files[t]));
    }
    req.anchor = read_png(r.scene_dir / r.anchor_file);
    try {
        req.validate();
    } catch (const Error& e) {
        protocol_error(r.scene_dir / "request.json", e.what());
    }
    return req;
}

void write_exchange_result(const fs::path& scene_dir, const std::vector<Image>& frames) {
    const fs::path restored = scene_dir / "restored";
    fs::create_directories(restored);
    for (std::size_t t = 0; t < frames.size(); ++t) write_png_atomic(restored / frame_name(t), frames[t]);
    write_file_atomic(scene_dir / "RESULT_READY", "");
}

void write_exchange_error(const fs::path& scene_dir, const std::string& message) {
    write_file_atomic(scene_dir / "ERROR", message);
}

}  // namespace panosplat
