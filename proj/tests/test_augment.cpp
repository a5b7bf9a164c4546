#include "flaresim/augment.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace flaresim;
namespace ag = flaresim::augment;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool images_equal(const ImageF& a, const ImageF& b) { return a.data == b.data; }

} // namespace

TEST_CASE("10k plans stay inside their declared supports; gamma mean is close to 2") {
    SeededRng rng(123);
    double gamma_sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const ag::AugPlan p = ag::draw_plan(rng);
        CHECK(p.gamma >= 1.8);
        CHECK(p.gamma <= 2.2);
        for (double g : p.rgb_gains) {
            CHECK(g >= 0.5);
            CHECK(g <= 1.2);
        }
        CHECK(p.noise_var >= 0.0);
        CHECK(p.offset >= -0.02);
        CHECK(p.offset <= 0.02);
        for (double g : p.jitter_gains) {
            CHECK(g >= 0.8);
            CHECK(g <= 3.0);
        }
        CHECK(p.rotation >= 0.0);
        CHECK(p.rotation <= kTwoPi);
        for (double t : p.translation) {
            CHECK(t >= -300.0);
            CHECK(t <= 300.0);
        }
        CHECK(std::abs(p.shear) <= 20.0 * kTwoPi / 360.0);
        CHECK(p.scale >= 0.8);
        CHECK(p.scale <= 1.5);
        CHECK(p.blur_sigma >= 0.1);
        CHECK(p.blur_sigma <= 3.0);
        gamma_sum += p.gamma;
    }
    CHECK(std::abs(gamma_sum / n - 2.0) / 2.0 < 0.01);
}

TEST_CASE("noise variance draws average near 0.01 (chi^2 with one dof)") {
    SeededRng rng(321);
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) sum += ag::draw_plan(rng).noise_var;
    CHECK(sum / n == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("identical seeds give identical plans") {
    SeededRng a(999), b(999);
    for (int i = 0; i < 10; ++i) {
        const ag::AugPlan pa = ag::draw_plan(a);
        const ag::AugPlan pb = ag::draw_plan(b);
        CHECK(pa.gamma == pb.gamma);
        CHECK(pa.rgb_gains == pb.rgb_gains);
        CHECK(pa.noise_var == pb.noise_var);
        CHECK(pa.offset == pb.offset);
        CHECK(pa.jitter_gains == pb.jitter_gains);
        CHECK(pa.rotation == pb.rotation);
        CHECK(pa.translation == pb.translation);
        CHECK(pa.shear == pb.shear);
        CHECK(pa.scale == pb.scale);
        CHECK(pa.blur_sigma == pb.blur_sigma);
    }
}

TEST_CASE("inverse_gamma basics") {
    ImageF img(2, 2, 1);
    img.data = {0.0, 0.25, 0.5, 1.0};
    const ImageF out = ag::inverse_gamma(img, 2.0);
    CHECK(out.data[0] == 0.0);
    CHECK(out.data[2] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(out.data[3] == doctest::Approx(1.0).epsilon(1e-12));
    // monotone per pixel pair
    CHECK(out.data[1] < out.data[2]);

    ImageF neg(1, 1, 1);
    neg.data = {-0.1};
    CHECK_THROWS_AS(ag::inverse_gamma(neg, 2.0), std::invalid_argument);
}

TEST_CASE("photometric channel ops") {
    ImageF img(2, 2, 3, 0.2);

    const ImageF same = ag::rgb_scale(img, {1.0, 1.0, 1.0});
    CHECK(images_equal(same, img));

    const ImageF scaled = ag::rgb_scale(img, {1.5, 1.0, 0.5});
    CHECK(scaled.at(0, 0, 0) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(scaled.at(2, 0, 0) == doctest::Approx(0.1).epsilon(1e-12));

    ImageF zero(2, 2, 3, 0.0);
    const ImageF offset = ag::intensity_offset(zero, -0.02);
    for (double v : offset.data) CHECK(v == 0.0);

    const ImageF jittered = ag::color_jitter(img, {2.0, 1.0, 1.0});
    CHECK(jittered.at(0, 1, 1) == doctest::Approx(0.4).epsilon(1e-12));

    ImageF gray(2, 2, 1, 0.2);
    CHECK_THROWS_AS(ag::rgb_scale(gray, {1.0, 1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("gaussian noise: zero variance is the identity; empirical variance tracks var") {
    SeededRng rng(5);
    const ImageF img = oracles::random_image(256, 256, 1, rng);

    SeededRng r0(1);
    const ImageF same = ag::gaussian_noise(img, 0.0, r0);
    CHECK(images_equal(same, img));

    const double var = 0.04;
    SeededRng r1(2);
    const ImageF noisy = ag::gaussian_noise(img, var, r1);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double d = noisy.data[i] - img.data[i];
        sum += d;
        sum2 += d * d;
    }
    const double n = static_cast<double>(img.size());
    const double measured = sum2 / n - (sum / n) * (sum / n);
    CHECK(std::abs(measured - var) / var < 0.05);

    SeededRng r2(2);
    const ImageF repeat = ag::gaussian_noise(img, var, r2);
    CHECK(images_equal(repeat, noisy));
}

TEST_CASE("affine warp: identity, full turn, integer translation") {
    SeededRng rng(17);
    const ImageF img = oracles::random_image(32, 32, 3, rng);

    const ImageF same = ag::affine_warp(img, 0.0, {0.0, 0.0}, 0.0, 1.0);
    CHECK(images_equal(same, img));

    const ImageF turned = ag::affine_warp(img, kTwoPi, {0.0, 0.0}, 0.0, 1.0);
    double max_err = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i)
        max_err = std::max(max_err, std::abs(turned.data[i] - img.data[i]));
    CHECK(max_err < 1e-4);

    ImageF delta(16, 16, 3, 0.0);
    delta.at(0, 8, 3) = 1.0;
    const ImageF moved = ag::affine_warp(delta, 0.0, {10.0, 0.0}, 0.0, 1.0);
    CHECK(moved.at(0, 8, 13) == 1.0);
    double total = 0.0;
    for (double v : moved.data) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12)); // a single moved tap
}

TEST_CASE("gaussian blur: constant fixed point, mass conservation, peak decay") {
    ImageF flat(16, 16, 1, 0.42);
    const ImageF blurred = ag::gaussian_blur(flat, 1.0);
    for (double v : blurred.data) CHECK(v == doctest::Approx(0.42).epsilon(1e-6));

    // interior-supported blob keeps its total mass
    ImageF blob(33, 33, 1, 0.0);
    for (int y = 14; y <= 18; ++y)
        for (int x = 14; x <= 18; ++x) blob.at(0, y, x) = 0.8;
    const ImageF spread = ag::gaussian_blur(blob, 1.5);
    double before = 0.0, after = 0.0;
    for (double v : blob.data) before += v;
    for (double v : spread.data) after += v;
    CHECK(std::abs(after - before) / before < 1e-3);

    ImageF spike(33, 33, 1, 0.0);
    spike.at(0, 16, 16) = 1.0;
    double last_peak = 2.0;
    for (const double sigma : {0.5, 1.0, 2.0}) {
        const ImageF resp = ag::gaussian_blur(spike, sigma);
        const double peak = *std::max_element(resp.data.begin(), resp.data.end());
        CHECK(peak < last_peak);
        last_peak = peak;
    }

    CHECK_THROWS_AS(ag::gaussian_blur(flat, 0.0), std::invalid_argument);
}

TEST_CASE("identity plan is a fixed point of both pipelines") {
    SeededRng rng(23);
    const ImageF img = oracles::random_image(24, 24, 3, rng);
    const ag::AugPlan id = ag::AugPlan::identity();

    SeededRng r1(0);
    const ImageF flare = ag::apply_flare_pipeline(img, id, r1);
    SeededRng r2(0);
    const ImageF bg = ag::apply_background_pipeline(img, id, r2);
    for (std::size_t i = 0; i < img.size(); ++i) {
        CHECK(std::abs(flare.data[i] - img.data[i]) < 1e-6);
        CHECK(std::abs(bg.data[i] - img.data[i]) < 1e-6);
    }
}

TEST_CASE("pipelines run every stage exactly once, in order") {
    SeededRng rng(29);
    const ImageF img = oracles::random_image(16, 16, 3, rng);
    SeededRng r1(1);
    const ag::AugPlan plan = ag::draw_plan(r1);

    std::vector<std::string> flare_trace;
    SeededRng r2(2);
    ag::apply_flare_pipeline(img, plan, r2, &flare_trace);
    const std::vector<std::string> expected_flare{"inverse_gamma", "rgb_scale", "affine_warp",
                                                  "gaussian_blur", "color_jitter", "intensity_offset"};
    CHECK(flare_trace == expected_flare);

    std::vector<std::string> bg_trace;
    SeededRng r3(3);
    ag::apply_background_pipeline(img, plan, r3, &bg_trace);
    const std::vector<std::string> expected_bg{"inverse_gamma", "rgb_scale", "gaussian_noise"};
    CHECK(bg_trace == expected_bg);
}

TEST_CASE("pipelines are deterministic end to end under a fixed seed") {
    SeededRng rng(31);
    const ImageF img = oracles::random_image(20, 20, 3, rng);

    const auto run = [&img](std::uint64_t seed) {
        SeededRng r(seed);
        const ag::AugPlan plan = ag::draw_plan(r);
        const ImageF flare = ag::apply_flare_pipeline(img, plan, r);
        const ImageF bg = ag::apply_background_pipeline(img, plan, r);
        return std::pair{flare, bg};
    };
    const auto [f1, b1] = run(4242);
    const auto [f2, b2] = run(4242);
    CHECK(images_equal(f1, f2));
    CHECK(images_equal(b1, b2));
}
