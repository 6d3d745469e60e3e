// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "panosplat/diffusion_kernels.hpp"

using namespace panosplat;
constexpr double kPi = std::numbers::pi;

namespace {

Image random_image(std::mt19937_64& rng, int h, int w, int c, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Image img(h, w, c);
    for (double& v : img.data()) v = u(rng);
    return img;
}

Image gaussian_image(std::mt19937_64& rng, int h, int w, int c) {
    std::normal_distribution<double> n(0.0, 1.0);
    Image img(h, w, c);
    for (double& v : img.data()) v = n(rng);
    return img;
}

VideoSequence random_video(std::mt19937_64& rng, int t, const ErpGrid& grid) {
    VideoSequence v;
    v.grid = grid;
    for (int i = 0; i < t; ++i) {
        v.frames.push_back(random_image(rng, grid.height, grid.width, 3));
        v.alpha.push_back(random_image(rng, grid.height, grid.width, 1));
    }
    return v;
}

// Pooled per-row variances of input and warped white noise across realizations.
struct RowVariance {
    std::vector<double> input, output;
};

RowVariance ensemble_row_variance(const ErpGrid& grid, int realizations, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> s_in(grid.height), q_in(grid.height), s_out(grid.height), q_out(grid.height);
    for (int r = 0; r < realizations; ++r) {
        const Image eps = gaussian_image(rng, grid.height, grid.width, 1);
        const Image warped = warp_noise(eps, grid);
        for (int y = 0; y < grid.height; ++y) {
            for (int x = 0; x < grid.width; ++x) {
                s_in[y] += eps.at(y, x);
                q_in[y] += eps.at(y, x) * eps.at(y, x);
                s_out[y] += warped.at(y, x);
                q_out[y] += warped.at(y, x) * warped.at(y, x);
            }
        }
    }
    const double n = static_cast<double>(realizations) * grid.width;
    RowVariance out;
    for (int y = 0; y < grid.height; ++y) {
        out.input.push_back((q_in[y] - s_in[y] * s_in[y] / n) / (n - 1));
        out.output.push_back((q_out[y] - s_out[y] * s_out[y] / n) / (n - 1));
    }
    return out;
}

}  // namespace

TEST_CASE("decompose splits each frame into complementary streams") {
    std::mt19937_64 rng(11);
    const ErpGrid grid(6, 12);
    VideoSequence v = random_video(rng, 3, grid);
    v.alpha[1] = Image(6, 12, 1, 1.0);
    v.alpha[2] = Image(6, 12, 1, 0.0);
    const StreamPair s = decompose(v);
    REQUIRE(s.background.size() == 3);
    REQUIRE(s.foreground.size() == 3);

    CHECK(s.background[1] == Image(6, 12, 3, 0.0));
    CHECK(s.foreground[1] == v.frames[1]);
    CHECK(s.background[2] == v.frames[2]);
    CHECK(s.foreground[2] == Image(6, 12, 3, 0.0));

    for (std::size_t t = 0; t < 3; ++t) {
        for (int y = 0; y < grid.height; ++y) {
            for (int x = 0; x < grid.width; ++x) {
                for (int c = 0; c < 3; ++c) {
                    const double value = v.frames[t].at(y, x, c);
                    const double bg = s.background[t].at(y, x, c), fg = s.foreground[t].at(y, x, c);
                    CHECK(bg + fg == value);
                    CHECK(bg <= value);
                    CHECK(fg <= value);
                    CHECK(fg == doctest::Approx(value * v.alpha[t].at(y, x)).epsilon(1e-12));
                    CHECK(bg == doctest::Approx(value * (1.0 - v.alpha[t].at(y, x))).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("decompose rejects misaligned inputs") {
    std::mt19937_64 rng(12);
    VideoSequence v = random_video(rng, 2, ErpGrid(4, 8));
    v.alpha.pop_back();
    CHECK_THROWS_AS(decompose(v), Error);
    v = random_video(rng, 2, ErpGrid(4, 8));
    v.frames[1] = Image(4, 8, 1);
    CHECK_THROWS_AS(decompose(v), Error);
    v = random_video(rng, 2, ErpGrid(4, 8));
    v.alpha[0] = Image(4, 6, 1);
    CHECK_THROWS_AS(decompose(v), Error);
    CHECK_THROWS_AS(decompose(VideoSequence{}), Error);
}

TEST_CASE("assemble_condition prepends the anchor") {
    std::mt19937_64 rng(13);
    const ErpGrid grid(4, 8);
    const VideoSequence v = random_video(rng, 2, grid);
    const Image anchor = random_image(rng, 4, 8, 3);
    const ConditionTensor z = assemble_condition(anchor, v);
    REQUIRE(z.length() == 3);
    for (const Image& s : z.slices) {
        CHECK(s.height() == 4);
        CHECK(s.width() == 8);
        CHECK(s.channels() == 6);
    }

    // anchor slice equals the M = 1 decomposition of the anchor
    VideoSequence anchor_only;
    anchor_only.grid = grid;
    anchor_only.frames = {anchor};
    anchor_only.alpha = {Image(4, 8, 1, 1.0)};
    const StreamPair a = decompose(anchor_only);
    const StreamPair s = decompose(v);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 8; ++x) {
            for (int c = 0; c < 3; ++c) {
                CHECK(z.slices[0].at(y, x, c) == a.background[0].at(y, x, c));
                CHECK(z.slices[0].at(y, x, 3 + c) == a.foreground[0].at(y, x, c));
                for (std::size_t t = 0; t < 2; ++t) {
                    CHECK(z.slices[t + 1].at(y, x, c) == s.background[t].at(y, x, c));
                    CHECK(z.slices[t + 1].at(y, x, 3 + c) == s.foreground[t].at(y, x, c));
                }
            }
        }
    }
}

TEST_CASE("assemble_condition is equivariant to frame permutations") {
    std::mt19937_64 rng(14);
    const VideoSequence v = random_video(rng, 4, ErpGrid(4, 8));
    const Image anchor = random_image(rng, 4, 8, 3);
    const std::vector<std::size_t> perm{2, 0, 3, 1};
    VideoSequence p = v;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        p.frames[i] = v.frames[perm[i]];
        p.alpha[i] = v.alpha[perm[i]];
    }
    const ConditionTensor a = assemble_condition(anchor, v);
    const ConditionTensor b = assemble_condition(anchor, p);
    CHECK(b.slices[0] == a.slices[0]);
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK(b.slices[i + 1] == a.slices[perm[i] + 1]);
}

TEST_CASE("assemble_condition with a custom encoder") {
    std::mt19937_64 rng(15);
    const VideoSequence v = random_video(rng, 2, ErpGrid(4, 8));
    const Image anchor = random_image(rng, 4, 8, 3);

    // 2x downsampling to a 4-channel latent
    auto pool = [](const Image& f) {
        Image z(f.height() / 2, f.width() / 2, 4);
        for (int y = 0; y < z.height(); ++y)
            for (int x = 0; x < z.width(); ++x)
                for (int c = 0; c < 3; ++c)
                    z.at(y, x, c) = 0.25 * (f.at(2 * y, 2 * x, c) + f.at(2 * y + 1, 2 * x, c) +
                                            f.at(2 * y, 2 * x + 1, c) + f.at(2 * y + 1, 2 * x + 1, c));
        return z;
    };
    const ConditionTensor z = assemble_condition(anchor, v, pool);
    REQUIRE(z.length() == 3);
    CHECK(z.slices[0].height() == 2);
    CHECK(z.slices[0].width() == 4);
    CHECK(z.slices[0].channels() == 8);

    int calls = 0;
    auto unstable = [&](const Image& f) { return ++calls == 3 ? Image(1, 1, 3) : f; };
    CHECK_THROWS_AS(assemble_condition(anchor, v, unstable), Error);

    CHECK_THROWS_AS(assemble_condition(Image(4, 6, 3), v), Error);
}

TEST_CASE("noise schedule") {
    const NoiseSchedule s = NoiseSchedule::linear();
    REQUIRE(s.steps() == 1000);
    CHECK(s.alpha_bar.front() == 1.0);
    CHECK(s.alpha_bar.back() == doctest::Approx(0.01).epsilon(1e-14));
    CHECK_NOTHROW(s.validate());
    for (std::size_t t = 1; t < s.steps(); ++t) CHECK(s.alpha_bar[t] < s.alpha_bar[t - 1]);

    NoiseSchedule bad{{1.0, 0.5, 0.6}};
    CHECK_THROWS_AS(bad.validate(), Error);
    bad.alpha_bar = {1.0, 0.0};
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK_THROWS_AS(NoiseSchedule{}.validate(), Error);
    CHECK_THROWS_AS(NoiseSchedule::linear(10, 1.0, 0.0), Error);
}

TEST_CASE("forward_noise examples") {
    std::mt19937_64 rng(16);
    const Image z0 = random_image(rng, 3, 5, 2, -1.0, 1.0);
    const Image eps = gaussian_image(rng, 3, 5, 2);
    const NoiseSchedule s = NoiseSchedule::linear();
    CHECK(forward_noise(z0, 0, s, eps) == z0);

    const NoiseSchedule quarter{{1.0, 0.25}};
    const Image ones(2, 2, 1, 1.0);
    const Image zt = forward_noise(ones, 1, quarter, ones);
    for (double v : zt.data()) CHECK(v == doctest::Approx(0.5 + std::sqrt(0.75)).epsilon(1e-15));

    CHECK_THROWS_AS(forward_noise(z0, 1000, s, eps), Error);
    CHECK_THROWS_AS(forward_noise(z0, 1, s, Image(3, 5, 1)), Error);
}

TEST_CASE("forward_noise is jointly linear") {
    std::mt19937_64 rng(17);
    const NoiseSchedule s = NoiseSchedule::linear();
    const Image a0 = random_image(rng, 4, 4, 3, -1, 1), b0 = random_image(rng, 4, 4, 3, -1, 1);
    const Image ea = gaussian_image(rng, 4, 4, 3), eb = gaussian_image(rng, 4, 4, 3);
    const double p = 0.7, q = -1.3;
    Image c0 = a0, ec = ea;
    for (std::size_t i = 0; i < c0.size(); ++i) {
        c0.data()[i] = p * a0.data()[i] + q * b0.data()[i];
        ec.data()[i] = p * ea.data()[i] + q * eb.data()[i];
    }
    for (std::size_t t : {1u, 250u, 999u}) {
        const Image za = forward_noise(a0, t, s, ea), zb = forward_noise(b0, t, s, eb);
        const Image zc = forward_noise(c0, t, s, ec);
        for (std::size_t i = 0; i < zc.size(); ++i)
            CHECK(zc.data()[i] == doctest::Approx(p * za.data()[i] + q * zb.data()[i]).epsilon(1e-12));
    }
}

TEST_CASE("forward_noise variance matches the schedule") {
    std::mt19937_64 rng(18);
    const NoiseSchedule s = NoiseSchedule::linear();
    const Image zero(1, 100000, 1);
    for (std::size_t t : {100u, 500u, 999u}) {
        const Image eps = gaussian_image(rng, 1, 100000, 1);
        const Image zt = forward_noise(zero, t, s, eps);
        double sum = 0.0, sq = 0.0;
        for (double v : zt.data()) {
            sum += v;
            sq += v * v;
        }
        const double n = static_cast<double>(zt.size());
        const double var = (sq - sum * sum / n) / (n - 1);
        const double expected = 1.0 - s.alpha_bar[t];
        CHECK(std::abs(var - expected) <= 0.02 * expected);
    }
}

TEST_CASE("warp_noise keeps equator rows bit-exact") {
    std::mt19937_64 rng(19);
    const ErpGrid grid(512, 1024);
    const Image eps = gaussian_image(rng, 512, 1024, 2);
    const Image out = warp_noise(eps, grid);
    for (int y : {255, 256}) {
        for (int x = 0; x < 1024; ++x) {
            CHECK(out.at(y, x, 0) == eps.at(y, x, 0));
            CHECK(out.at(y, x, 1) == eps.at(y, x, 1));
        }
    }
}

TEST_CASE("warp_noise source columns narrow toward the poles") {
    for (const ErpGrid grid : {ErpGrid(512, 1024), ErpGrid(64, 128), ErpGrid(9, 20)}) {
        for (int y = 0; y < grid.height; ++y) {
            std::set<int> sources;
            bool in_range = true;
            for (int x = 0; x < grid.width; ++x) {
                const int s = warp_source_column(x, y, grid);
                in_range = in_range && s >= 0 && s < grid.width;
                sources.insert(s);
            }
            CHECK(in_range);
            const double shrink = std::cos((0.5 - (y + 0.5) / grid.height) * kPi);
            CHECK(static_cast<double>(sources.size()) <= std::ceil(grid.width * shrink) + 1);
        }
        // the row nearest each pole draws from a band around the center
        for (int y : {0, grid.height - 1}) {
            const double shrink = std::cos((0.5 - (y + 0.5) / grid.height) * kPi);
            for (int x = 0; x < grid.width; ++x) {
                const int s = warp_source_column(x, y, grid);
                CHECK(std::abs(s + 0.5 - 0.5 * grid.width) <= 0.5 * grid.width * shrink + 1.0);
            }
        }
    }
}

TEST_CASE("warp_noise follows the latitude contraction") {
    const ErpGrid grid(16, 32);
    for (int y = 0; y < 16; ++y) {
        const double phi = (0.5 - (y + 0.5) / 16.0) * kPi;
        int previous = -1;
        for (int x = 0; x < 32; ++x) {
            const double src = 16.0 + (x + 0.5 - 16.0) * std::cos(phi);
            const int s = warp_source_column(x, y, grid);
            CHECK(s == static_cast<int>(std::floor(src)));
            CHECK(s >= previous);
            previous = s;
        }
    }
    std::mt19937_64 rng(20);
    const Image constant(16, 32, 3, 0.37);
    CHECK(warp_noise(constant, grid) == constant);
    CHECK_THROWS_AS(warp_noise(Image(16, 31, 1), grid), Error);
}

TEST_CASE("warp_noise preserves per-row variance") {
    const ErpGrid grid(64, 1024);
    const RowVariance v = ensemble_row_variance(grid, 256, 21);
    for (int y = 0; y < grid.height; ++y) {
        CAPTURE(y);
        CHECK(std::abs(v.output[y] - v.input[y]) <= 0.1 * v.input[y]);
    }
}

TEST_CASE("decay weights") {
    const ErpGrid grid(448, 896);
    const Image ones = decay_weights(grid, 1.0);
    for (double w : ones.data()) CHECK(w == 1.0);

    const Image w = decay_weights(grid, 0.1);
    CHECK(w.at(0, 0) == doctest::Approx(0.1 + 0.9 * std::cos(kPi / 2 - kPi * 0.5 / 448)).epsilon(1e-12));
    const double half_pixel = std::cos(0.5 * kPi / 448);
    CHECK(w.at(223, 5) >= half_pixel);
    CHECK(w.at(224, 5) >= half_pixel);
    for (int y = 0; y < 448; ++y) {
        CHECK(w.at(y, 0) >= 0.1);
        CHECK(w.at(y, 0) <= 1.0);
        CHECK(w.at(y, 0) == doctest::Approx(w.at(447 - y, 0)).epsilon(1e-12));
        for (int x = 1; x < 896; x += 97) CHECK(w.at(y, x) == w.at(y, 0));
        if (y > 0 && y < 224) CHECK(w.at(y, 0) >= w.at(y - 1, 0));
    }
    CHECK_THROWS_AS(decay_weights(grid, -0.01), Error);
    CHECK_THROWS_AS(decay_weights(grid, 1.01), Error);
}

TEST_CASE("weighted_loss") {
    std::mt19937_64 rng(22);
    const ErpGrid grid(32, 64);
    const Image p = random_image(rng, 32, 64, 3), t = random_image(rng, 32, 64, 3);
    CHECK(weighted_loss(p, p, decay_weights(grid, 0.1)) == 0.0);

    double mse = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) mse += (p.data()[i] - t.data()[i]) * (p.data()[i] - t.data()[i]);
    mse /= static_cast<double>(p.size());
    CHECK(std::abs(weighted_loss(p, t, decay_weights(grid, 1.0)) - mse) <= 1e-12 * mse);
    CHECK(std::abs(weighted_loss(p, t, Image(32, 64, 3, 1.0)) - mse) <= 1e-12 * mse);

    // row-constant error on four rows, lambda = 0
    const ErpGrid four(4, 8);
    const double e[4] = {0.3, -0.1, 0.25, 0.7};
    Image pred(4, 8, 2), target(4, 8, 2);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 8; ++x)
            for (int c = 0; c < 2; ++c) pred.at(y, x, c) = e[y];
    const double c_outer = std::cos(3.0 * kPi / 8.0), c_inner = std::cos(kPi / 8.0);
    const double closed = (c_outer * (e[0] * e[0] + e[3] * e[3]) + c_inner * (e[1] * e[1] + e[2] * e[2])) /
                          (2.0 * (c_outer + c_inner));
    CHECK(weighted_loss(pred, target, decay_weights(four, 0.0)) == doctest::Approx(closed).epsilon(1e-14));

    CHECK_THROWS_AS(weighted_loss(p, t, Image(32, 64, 1, 0.0)), Error);
    CHECK_THROWS_AS(weighted_loss(p, Image(32, 64, 1), Image(32, 64, 1, 1.0)), Error);
    CHECK_THROWS_AS(weighted_loss(p, t, Image(32, 64, 2, 1.0)), Error);
}
