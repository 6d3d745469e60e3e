// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "fixtures.hpp"
#include "panosplat/sphere_geom.hpp"

using namespace panosplat;
constexpr double kPi = std::numbers::pi;

TEST_CASE("latitude_of_row follows (0.5 - y/H) pi") {
    const ErpGrid g(448, 896);
    CHECK(latitude_of_row(0, g) == doctest::Approx(kPi / 2));
    CHECK(latitude_of_row(224, g) == doctest::Approx(0.0));
    CHECK(latitude_of_row(112, g) == doctest::Approx(kPi / 4));
    CHECK(latitude_of_row(448, g) == doctest::Approx(-kPi / 2));
    CHECK_THROWS_AS(latitude_of_row(-0.1, g), Error);
    CHECK_THROWS_AS(latitude_of_row(448.5, g), Error);
}

TEST_CASE("grid invariants") {
    CHECK_THROWS_AS(ErpGrid(1, 2), Error);
    CHECK_THROWS_AS(ErpGrid(4, 7), Error);
    CHECK_NOTHROW(ErpGrid(2, 4));
}

TEST_CASE("pixel_to_dir axis examples") {
    const ErpGrid g(64, 128);
    const UnitDir fwd = pixel_to_dir(32, 64, g);
    CHECK(fwd.dx() == doctest::Approx(0.0));
    CHECK(fwd.dy() == doctest::Approx(0.0));
    CHECK(fwd.dz() == doctest::Approx(1.0));

    for (double x : {0.0, 17.5, 100.0}) {
        const UnitDir pole = pixel_to_dir(0, x, g);
        CHECK(pole.dy() == doctest::Approx(1.0));
        CHECK(std::hypot(pole.dx(), pole.dz()) < 1e-12);
    }

    const UnitDir east = pixel_to_dir(32, 96, g);
    CHECK(east.dx() == doctest::Approx(1.0));
    CHECK(std::abs(east.dy()) < 1e-12);
    CHECK(std::abs(east.dz()) < 1e-12);

    CHECK_THROWS_AS(pixel_to_dir(32, 129, g), Error);
}

TEST_CASE("dir_to_pixel examples") {
    const ErpGrid g(64, 128);
    const PixelCoord c = dir_to_pixel(UnitDir({0, 0, 1}), g);
    CHECK(c.y == doctest::Approx(32));
    CHECK(c.x == doctest::Approx(64));

    // 45 degrees of latitude straight ahead lands a quarter of the way down
    const PixelCoord up45 = dir_to_pixel(UnitDir({0, std::sqrt(0.5), std::sqrt(0.5)}), g);
    CHECK(up45.y == doctest::Approx(16));
    CHECK(up45.x == doctest::Approx(64));

    // on the equator halfway between +Z and +X: longitude pi/4
    const PixelCoord diag = dir_to_pixel(UnitDir({std::sqrt(0.5), 0, std::sqrt(0.5)}), g);
    CHECK(diag.y == doctest::Approx(32));
    CHECK(diag.x == doctest::Approx(80));

    const PixelCoord north = dir_to_pixel(UnitDir({0, 1, 0}), g);
    CHECK(north.y == doctest::Approx(0));
    CHECK(north.x == 0.0);
    const PixelCoord south = dir_to_pixel(UnitDir({0, -1, 0}), g);
    CHECK(south.y == doctest::Approx(64));
    CHECK(south.x == 0.0);

    // longitude pi wraps to column 0
    const PixelCoord back = dir_to_pixel(UnitDir({0, 0, -1}), g);
    CHECK(back.x >= 0.0);
    CHECK(back.x < 128.0);
}

TEST_CASE("round trip and unit norm over every pixel center") {
    const ErpGrid g(96, 192);
    double worst = 0.0;
    double worst_norm = 0.0;
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            const UnitDir d = pixel_to_dir(y + 0.5, x + 0.5, g);
            worst_norm = std::max(worst_norm, std::abs(d.vec().norm() - 1.0));
            if (std::abs(latitude_of_row(y + 0.5, g)) >= kPi / 2 - 0.01) continue;
            const PixelCoord p = dir_to_pixel(d, g);
            worst = std::max({worst, std::abs(p.y - (y + 0.5)), std::abs(p.x - (x + 0.5))});
        }
    }
    CHECK(worst < 1e-6);
    CHECK(worst_norm < 1e-9);
}

TEST_CASE("erp_weight_row") {
    const ErpGrid g4(4, 8);
    CHECK(erp_weight_row(0, g4) == doctest::Approx(std::cos(3 * kPi / 8)));
    const ErpGrid g(64, 128);
    CHECK(erp_weight_row(31, g) == doctest::Approx(erp_weight_row(32, g)));
    for (int y = 0; y < 64; ++y) {
        CHECK(erp_weight_row(y, g) > 0.0);
        CHECK(erp_weight_row(y, g) == doctest::Approx(erp_weight_row(63 - y, g)).epsilon(1e-12));
    }
    const ErpGrid big(512, 1024);
    double sum = 0.0;
    for (int y = 0; y < 512; ++y) sum += erp_weight_row(y, big);
    CHECK(std::abs(sum / 512 - 2.0 / kPi) / (2.0 / kPi) < 0.01);
    CHECK_THROWS_AS(erp_weight_row(64, g), Error);
}

TEST_CASE("warp_coords contracts toward the column center") {
    const ErpGrid g(64, 128);
    for (double x : {0.0, 10.0, 64.0, 127.0}) {
        CHECK(warp_coords(x, 32.0, g) == doctest::Approx(x));
        CHECK(warp_coords(x, 0.0, g) == doctest::Approx(64.0));
    }
    CHECK(warp_coords(0.0, 16.0, g) == doctest::Approx(64.0 * (1.0 - std::sqrt(0.5))));
    for (int y = 0; y <= 64; y += 4) {
        double prev = -1.0;
        for (double x = 0.0; x <= 128.0; x += 0.5) {
            const double w = warp_coords(x, y, g);
            CHECK(std::abs(w - 64.0) <= std::abs(x - 64.0) + 1e-12);
            CHECK(w >= prev);
            prev = w;
        }
    }
}

TEST_CASE("erp_to_perspective") {
    SUBCASE("constant panorama gives a bit-exact constant view") {
        Image pano(32, 64, 3);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 64; ++x)
                for (int c = 0; c < 3; ++c) pano.at(y, x, c) = 0.1 + 0.3 * c + 1.0 / 7.0;
        CameraPose pose;
        pose.orientation = yaw_rotation(0.7) * Eigen::Quaterniond(Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitX()));
        const Image view = erp_to_perspective(pano, pose, 1.2, 33, 21);
        for (int y = 0; y < 21; ++y)
            for (int x = 0; x < 33; ++x)
                for (int c = 0; c < 3; ++c) CHECK(view.at(y, x, c) == pano.at(0, 0, c));
    }
    SUBCASE("center pixel of the forward view samples the pano center") {
        const Image pano = fixtures::smooth_erp(64);
        const Image view = erp_to_perspective(pano, {}, kPi / 2, 65, 65);
        std::array<double, 3> expect{};
        sample_erp_bilinear(pano, 32.0, 64.0, expect);
        for (int c = 0; c < 3; ++c) CHECK(view.at(32, 32, c) == doctest::Approx(expect[c]).epsilon(1e-9));
    }
    SUBCASE("commutes with intensity scaling") {
        const Image pano = fixtures::smooth_erp(32);
        Image scaled = pano;
        for (double& v : scaled.data()) v *= 0.6;
        CameraPose pose;
        pose.orientation = yaw_rotation(-2.0);
        const Image a = erp_to_perspective(pano, pose, 1.0, 16, 16);
        const Image b = erp_to_perspective(scaled, pose, 1.0, 16, 16);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(b.data()[i] == doctest::Approx(0.6 * a.data()[i]).epsilon(1e-12));
    }
    SUBCASE("invalid fov") {
        const Image pano(8, 16, 3);
        CHECK_THROWS_AS(erp_to_perspective(pano, {}, 0.0, 8, 8), Error);
        CHECK_THROWS_AS(erp_to_perspective(pano, {}, kPi, 8, 8), Error);
    }
}

TEST_CASE("cubemap composition") {
    SUBCASE("constant faces give a constant panorama") {
        CubeFaces faces;
        for (auto& f : faces) f = Image(16, 16, 3, 0.375);
        const Image erp = perspective_to_erp(faces, ErpGrid(16, 32));
        for (double v : erp.data()) CHECK(v == 0.375);
    }
    SUBCASE("forward ray selects the +Z face center") {
        CHECK(cube_face_for({0, 0, 1}) == CubeFace::PosZ);
        CHECK(cube_face_for({0.2, -0.9, 0.1}) == CubeFace::NegY);
        CHECK(cube_face_for({-0.8, 0.1, 0.5}) == CubeFace::NegX);
        CubeFaces faces;
        for (std::size_t i = 0; i < 6; ++i) faces[i] = Image(8, 8, 1, double(i));
        const Image erp = perspective_to_erp(faces, ErpGrid(8, 16));
        CHECK(erp.at(3, 7) == double(static_cast<int>(CubeFace::PosZ)));
        CHECK(erp.at(0, 0) == double(static_cast<int>(CubeFace::PosY)));
        CHECK(erp.at(4, 12) == double(static_cast<int>(CubeFace::PosX)));
    }
    SUBCASE("mismatched faces") {
        CubeFaces faces;
        for (auto& f : faces) f = Image(8, 8, 3);
        faces[2] = Image(9, 9, 3);
        CHECK_THROWS_AS(perspective_to_erp(faces, ErpGrid(8, 16)), Error);
    }
    SUBCASE("smooth round trip exceeds 35 dB at H = 256") {
        const Image pano = fixtures::detailed_erp(256);
        const Image back = perspective_to_erp(erp_to_cubemap(pano, 256), ErpGrid(256, 512));
        const double db = fixtures::psnr(pano, back);
        MESSAGE("cubemap round trip PSNR " << db);
        CHECK(db >= 35.0);
    }
}
