// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <thread>

#include <unistd.h>

#include "fixtures.hpp"
#include "panosplat/image_io.hpp"
#include "panosplat/metrics.hpp"
#include "panosplat/restorer.hpp"

using namespace panosplat;
namespace fs = std::filesystem;

namespace {

RestoreRequest make_request(int t, const ErpGrid& grid, std::uint64_t seed, bool quantized = true) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RestoreRequest req;
    req.degraded.grid = grid;
    for (int i = 0; i < t; ++i) {
        Image f(grid.height, grid.width, 3), a(grid.height, grid.width, 1);
        for (double& v : f.data()) v = u(rng);
        for (double& v : a.data()) v = u(rng) < 0.3 ? 0.0 : 1.0;
        req.degraded.frames.push_back(quantized ? quantize_8bit(f) : f);
        req.degraded.alpha.push_back(a);
    }
    Image anchor(grid.height, grid.width, 3);
    for (double& v : anchor.data()) v = u(rng);
    req.anchor = quantized ? quantize_8bit(anchor) : anchor;
    return req;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("panosplat_" + name + "_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

// Minimal adapter written against the wire format: waits for REQUEST_READY,
// then runs `serve` on the parsed request.
class FakeAdapter {
public:
    using Serve = std::function<void(const fs::path& scene_dir, const RestoreRequest& req)>;

    FakeAdapter(fs::path scene_dir, Serve serve) : thread_([this, scene_dir, serve] {
        while (!stop_) {
            if (fs::exists(scene_dir / "REQUEST_READY")) {
                try {
                    serve(scene_dir, load_exchange_request(read_exchange_request(scene_dir)));
                } catch (const Error& e) {
                    write_exchange_error(scene_dir, e.what());
                }
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
    }) {}
    ~FakeAdapter() {
        stop_ = true;
        thread_.join();
    }

private:
    std::atomic<bool> stop_{false};
    std::thread thread_;
};

ExternalOptions fast_options(const fs::path& dir, double timeout = 20.0) {
    ExternalOptions o;
    o.exchange_dir = dir;
    o.timeout_s = timeout;
    o.poll_interval_s = 0.05;
    return o;
}

}  // namespace

TEST_CASE("identity restorer") {
    const RestoreRequest req = make_request(3, ErpGrid(8, 16), 1, false);
    const RestoreResult r = restore_identity(req);
    CHECK(r.provenance == "identity");
    REQUIRE(r.frames.size() == 3);
    for (std::size_t t = 0; t < 3; ++t) CHECK(r.frames[t] == req.degraded.frames[t]);

    RestoreRequest again = req;
    again.degraded.frames = r.frames;
    CHECK(restore_identity(again).frames == r.frames);

    RestoreRequest scaled = req;
    scaled.target_scale = 2;
    const RestoreResult s = restore_identity(scaled);
    REQUIRE(s.frames[0].height() == 16);
    REQUIRE(s.frames[0].width() == 32);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 32; ++x)
            for (int c = 0; c < 3; ++c) CHECK(s.frames[1].at(y, x, c) == req.degraded.frames[1].at(y / 2, x / 2, c));
}

TEST_CASE("request validation") {
    RestoreRequest req = make_request(2, ErpGrid(8, 16), 2);
    req.target_scale = 0;
    CHECK_THROWS_AS(restore_identity(req), Error);
    req = make_request(2, ErpGrid(8, 16), 2);
    req.anchor = Image(8, 14, 3);
    CHECK_THROWS_AS(restore_pushpull(req), Error);
    req = make_request(2, ErpGrid(8, 16), 2);
    req.scene_id = "../x";
    CHECK_THROWS_AS(restore_identity(req), Error);
    req = make_request(2, ErpGrid(8, 16), 2);
    req.degraded.frames.clear();
    req.degraded.alpha.clear();
    CHECK_THROWS_AS(restore_identity(req), Error);
}

TEST_CASE("push-pull leaves opaque frames unchanged") {
    RestoreRequest req = make_request(2, ErpGrid(16, 32), 3, false);
    for (Image& a : req.degraded.alpha) a = Image(16, 32, 1, 1.0);
    const RestoreResult r = restore_pushpull(req);
    CHECK(r.provenance == "pushpull");
    for (std::size_t t = 0; t < 2; ++t) CHECK(r.frames[t] == req.degraded.frames[t]);
}

TEST_CASE("push-pull keeps valid pixels and fills holes inside [0, 1]") {
    const RestoreRequest req = make_request(3, ErpGrid(17, 34), 4, false);
    const RestoreResult r = restore_pushpull(req);
    REQUIRE(r.frames.size() == 3);
    for (std::size_t t = 0; t < 3; ++t) {
        for (int y = 0; y < 17; ++y)
            for (int x = 0; x < 34; ++x)
                for (int c = 0; c < 3; ++c) {
                    const double v = r.frames[t].at(y, x, c);
                    CHECK(v >= 0.0);
                    CHECK(v <= 1.0);
                    if (req.degraded.alpha[t].at(y, x) >= kHoleThreshold) CHECK(v == req.degraded.frames[t].at(y, x, c));
                }
    }
    // frame 0 takes the anchor on filled pixels
    for (int y = 0; y < 17; ++y)
        for (int x = 0; x < 34; ++x)
            if (req.degraded.alpha[0].at(y, x) < kHoleThreshold)
                for (int c = 0; c < 3; ++c) CHECK(r.frames[0].at(y, x, c) == req.anchor.at(y, x, c));
    CHECK(restore_pushpull(req).frames == r.frames);
}

TEST_CASE("push-pull fills a hole in constant color") {
    Image rgb(9, 12, 3), alpha(9, 12, 1, 1.0);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 12; ++x) {
            rgb.at(y, x, 0) = 0.3;
            rgb.at(y, x, 1) = 0.6;
            rgb.at(y, x, 2) = 0.9;
        }
    alpha.at(4, 5) = 0.1;
    rgb.at(4, 5, 0) = rgb.at(4, 5, 1) = rgb.at(4, 5, 2) = 0.0;
    REQUIRE(pushpull_fill(rgb, alpha));
    CHECK(rgb.at(4, 5, 0) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(rgb.at(4, 5, 1) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(rgb.at(4, 5, 2) == doctest::Approx(0.9).epsilon(1e-12));

    // a large hole between two colors takes intermediate values
    Image split(8, 32, 3), mask(8, 32, 1, 1.0);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 32; ++x) {
            split.at(y, x, 0) = x < 16 ? 0.0 : 1.0;
            if (x >= 12 && x < 20) mask.at(y, x) = 0.0;
        }
    REQUIRE(pushpull_fill(split, mask));
    for (int x = 12; x < 20; ++x) {
        CHECK(split.at(4, x, 0) > 0.0);
        CHECK(split.at(4, x, 0) < 1.0);
    }
}

TEST_CASE("push-pull with an empty frame uses the anchor mean") {
    RestoreRequest req = make_request(2, ErpGrid(8, 16), 5, false);
    req.degraded.alpha[1] = Image(8, 16, 1, 0.0);
    const RestoreResult r = restore_pushpull(req);
    double mean[3] = {0, 0, 0};
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 16; ++x)
            for (int c = 0; c < 3; ++c) mean[c] += req.anchor.at(y, x, c) / 128.0;
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 16; ++x)
            for (int c = 0; c < 3; ++c) CHECK(r.frames[1].at(y, x, c) == doctest::Approx(mean[c]).epsilon(1e-12));

    Image rgb(4, 4, 3, 0.2);
    const Image copy = rgb;
    CHECK_FALSE(pushpull_fill(rgb, Image(4, 4, 1, 0.2)));
    CHECK(rgb == copy);
}

TEST_CASE("push-pull beats identity on a holed panorama") {
    const ErpGrid grid(64, 128);
    const Image gt = fixtures::smooth_erp(64);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RestoreRequest req;
    req.degraded.grid = grid;
    req.anchor = gt;
    for (int t = 0; t < 3; ++t) {
        Image f = gt, a(64, 128, 1, 1.0);
        int holes = 0;
        // 30% of pixels, in 4x4 blocks; holes render black with zero alpha
        for (int by = 0; by < 16; ++by)
            for (int bx = 0; bx < 32; ++bx)
                if (u(rng) < 0.3)
                    for (int y = 4 * by; y < 4 * by + 4; ++y)
                        for (int x = 4 * bx; x < 4 * bx + 4; ++x) {
                            a.at(y, x) = 0.0;
                            for (int c = 0; c < 3; ++c) f.at(y, x, c) = 0.0;
                            ++holes;
                        }
        CHECK(holes > 0.2 * 64 * 128);
        req.degraded.frames.push_back(f);
        req.degraded.alpha.push_back(a);
    }
    const RestoreResult id = restore_identity(req), pp = restore_pushpull(req);
    for (std::size_t t = 0; t < 3; ++t) {
        const double a = ws_psnr(pp.frames[t], gt, grid), b = ws_psnr(id.frames[t], gt, grid);
        CAPTURE(t);
        CHECK(a > b);
        CHECK(a > b + 10.0);
    }
}

TEST_CASE("external restorer round trip with an identity adapter") {
    TempDir tmp("exchange_ok");
    RestoreRequest req = make_request(3, ErpGrid(8, 16), 7);
    req.scene_id = "room_a";
    req.target_scale = 2;
    FakeAdapter adapter(tmp.path / "room_a", [](const fs::path& dir, const RestoreRequest& r) {
        write_exchange_result(dir, restore_identity(r).frames);
    });
    const RestoreResult r = restore_external(req, fast_options(tmp.path));
    CHECK(r.provenance == "external");
    CHECK(r.frames == restore_identity(req).frames);

    const ExchangeRequest seen = read_exchange_request(tmp.path / "room_a");
    CHECK(seen.frames == 3);
    CHECK(seen.height == 8);
    CHECK(seen.width == 16);
    CHECK(seen.target_scale == 2);
    CHECK(seen.frame_files[2] == "frames/00002.png");
    CHECK(seen.alpha_files[0] == "alpha/00000.png");
    CHECK(seen.anchor_file == "anchor.png");
    CHECK(fs::exists(tmp.path / "room_a" / "REQUEST_READY"));
    CHECK(fs::exists(tmp.path / "room_a" / "RESULT_READY"));
    CHECK(read_png(tmp.path / "room_a" / "alpha" / "00001.png") == req.degraded.alpha[1]);
}

TEST_CASE("external restorer times out without an adapter") {
    TempDir tmp("exchange_timeout");
    const RestoreRequest req = make_request(1, ErpGrid(4, 8), 8);
    ExternalOptions o = fast_options(tmp.path, 1.5);
    o.poll_interval_s = 0.5;
    const auto start = std::chrono::steady_clock::now();
    try {
        restore_external(req, o);
        FAIL("expected a timeout");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Timeout);
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(elapsed >= 1.5);
    CHECK(elapsed <= 2.5);
}

TEST_CASE("external restorer rejects a wrong frame count") {
    TempDir tmp("exchange_count");
    const RestoreRequest req = make_request(3, ErpGrid(8, 16), 9);
    FakeAdapter adapter(tmp.path / "scene", [](const fs::path& dir, const RestoreRequest& r) {
        std::vector<Image> frames = restore_identity(r).frames;
        frames.pop_back();
        write_exchange_result(dir, frames);
    });
    try {
        restore_external(req, fast_options(tmp.path));
        FAIL("expected a protocol error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Protocol);
        CHECK(std::string(e.what()).find("restored") != std::string::npos);
        CHECK(std::string(e.what()).find("expected 3 frames") != std::string::npos);
    }
}

TEST_CASE("external restorer rejects a wrong frame size") {
    TempDir tmp("exchange_size");
    const RestoreRequest req = make_request(2, ErpGrid(8, 16), 10);
    FakeAdapter adapter(tmp.path / "scene", [](const fs::path& dir, const RestoreRequest& r) {
        write_exchange_result(dir, {r.degraded.frames[0], Image(8, 12, 3)});
    });
    try {
        restore_external(req, fast_options(tmp.path));
        FAIL("expected a protocol error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Protocol);
        CHECK(std::string(e.what()).find("00001.png") != std::string::npos);
    }
}

TEST_CASE("external restorer surfaces adapter errors") {
    TempDir tmp("exchange_error");
    const RestoreRequest req = make_request(1, ErpGrid(8, 16), 11);
    FakeAdapter adapter(tmp.path / "scene", [](const fs::path& dir, const RestoreRequest&) {
        write_exchange_error(dir, "model exploded");
    });
    try {
        restore_external(req, fast_options(tmp.path));
        FAIL("expected a protocol error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Protocol);
        CHECK(std::string(e.what()).find("model exploded") != std::string::npos);
    }
}

TEST_CASE("malformed request files are reported by field") {
    TempDir tmp("exchange_parse");
    const fs::path dir = tmp.path / "s";
    fs::create_directories(dir);
    write_file_atomic(dir / "request.json", "{not json");
    CHECK_THROWS_AS(read_exchange_request(dir), Error);
    write_file_atomic(dir / "request.json",
                      R"({"schema_version": 1, "scene_id": "s", "T": 2, "H": 4, "W": 8, "frames": [], "alpha": [], "anchor": "a.png"})");
    try {
        read_exchange_request(dir);
        FAIL("expected a protocol error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Protocol);
        CHECK(std::string(e.what()).find("target_scale") != std::string::npos);
    }
    write_file_atomic(dir / "request.json",
                      R"({"schema_version": 2, "scene_id": "s", "T": 1, "H": 4, "W": 8, "target_scale": 1, "frames": ["f"], "alpha": ["a"], "anchor": "a.png"})");
    CHECK_THROWS_AS(read_exchange_request(dir), Error);
    write_file_atomic(dir / "request.json",
                      R"({"schema_version": 1, "scene_id": "s", "T": 3, "H": 4, "W": 8, "target_scale": 1, "frames": ["f"], "alpha": ["a"], "anchor": "a.png"})");
    CHECK_THROWS_AS(read_exchange_request(dir), Error);
}
