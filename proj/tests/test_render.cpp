#include "flaresim/render.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace flaresim;
namespace rd = flaresim::render;
namespace opt = flaresim::optics;

namespace {

// hand-built basis model with explicit kernels and coefficient maps
opt::PsfBasis make_basis(int h, int w, int ks, const std::vector<std::vector<double>>& kernels,
                         const std::vector<std::vector<double>>& maps) {
    opt::PsfBasis b;
    b.kernel_size = ks;
    b.center_row = ks / 2;
    b.center_col = ks / 2;
    b.image_height = h;
    b.image_width = w;
    b.bases = kernels;
    b.coeff_maps = maps;
    return b;
}

std::vector<double> delta_kernel(int ks) {
    std::vector<double> k(static_cast<std::size_t>(ks) * ks, 0.0);
    k[static_cast<std::size_t>(ks / 2) * ks + ks / 2] = 1.0;
    return k;
}

std::vector<double> random_kernel(int ks, SeededRng& rng, bool normalized) {
    std::vector<double> k(static_cast<std::size_t>(ks) * ks);
    double sum = 0.0;
    for (double& v : k) {
        v = rng.uniform(0.0, 1.0);
        sum += v;
    }
    if (normalized)
        for (double& v : k) v /= sum;
    return k;
}

} // namespace

TEST_CASE("centered delta kernel with unit coefficients is the identity") {
    SeededRng rng(21);
    const ImageF img = oracles::random_image(12, 14, 3, rng);
    const auto basis = make_basis(12, 14, 5, {delta_kernel(5)},
                                  {std::vector<double>(12 * 14, 1.0)});
    const ImageF out = rd::sv_convolve(img, basis, rd::ConvMethod::Direct);
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(out.data[i] == img.data[i]);
}

TEST_CASE("single basis with unit coefficients equals the nested-loop convolution oracle") {
    SeededRng rng(31);
    const ImageF img = oracles::random_image(16, 16, 1, rng);
    const auto kernel = random_kernel(5, rng, true);
    const auto basis = make_basis(16, 16, 5, {kernel}, {std::vector<double>(256, 1.0)});

    const auto expected = oracles::conv2d_reference(
        std::vector<double>(img.data.begin(), img.data.end()), 16, 16, kernel, 5, 2, 2);
    for (const auto method : {rd::ConvMethod::Direct, rd::ConvMethod::Fft}) {
        const ImageF out = rd::sv_convolve(img, basis, method);
        for (std::size_t i = 0; i < expected.size(); ++i)
            CHECK(std::abs(out.data[i] - expected[i]) < 1e-10);
    }
}

TEST_CASE("spatially varying case matches brute force within 1e-10") {
    SeededRng rng(41);
    for (int trial = 0; trial < 5; ++trial) {
        const ImageF img = oracles::random_image(16, 16, 1, rng);
        std::vector<std::vector<double>> kernels, maps;
        for (int i = 0; i < 3; ++i) {
            kernels.push_back(random_kernel(5, rng, false));
            std::vector<double> map(256);
            for (double& v : map) v = rng.uniform(0.0, 1.0);
            maps.push_back(std::move(map));
        }
        const auto basis = make_basis(16, 16, 5, kernels, maps);
        const ImageF brute = rd::brute_force_sv(img, basis);
        for (const auto method : {rd::ConvMethod::Direct, rd::ConvMethod::Fft}) {
            const ImageF fast = rd::sv_convolve(img, basis, method);
            double max_err = 0.0;
            for (std::size_t i = 0; i < fast.size(); ++i)
                max_err = std::max(max_err, std::abs(fast.data[i] - brute.data[i]));
            CHECK(max_err < 1e-10);
        }
    }
}

TEST_CASE("direct and fft paths agree within 1e-6") {
    SeededRng rng(51);
    const ImageF img = oracles::random_image(24, 18, 3, rng);
    std::vector<std::vector<double>> kernels, maps;
    for (int i = 0; i < 2; ++i) {
        kernels.push_back(random_kernel(7, rng, false));
        std::vector<double> map(24 * 18);
        for (double& v : map) v = rng.uniform(-0.5, 1.0);
        maps.push_back(std::move(map));
    }
    const auto basis = make_basis(24, 18, 7, kernels, maps);
    const ImageF a = rd::sv_convolve(img, basis, rd::ConvMethod::Direct);
    const ImageF b = rd::sv_convolve(img, basis, rd::ConvMethod::Fft);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.data[i] - b.data[i]) < 1e-6);
}

TEST_CASE("sv_convolve is linear in the image") {
    SeededRng rng(61);
    const ImageF i1 = oracles::random_image(12, 12, 1, rng);
    const ImageF i2 = oracles::random_image(12, 12, 1, rng);
    std::vector<double> map(144);
    for (double& v : map) v = rng.uniform(0.0, 1.0);
    const auto basis = make_basis(12, 12, 3, {random_kernel(3, rng, false)}, {map});

    ImageF mix(12, 12, 1);
    for (std::size_t i = 0; i < mix.size(); ++i) mix.data[i] = 2.0 * i1.data[i] - 0.5 * i2.data[i];
    const ImageF lhs = rd::sv_convolve(mix, basis, rd::ConvMethod::Direct);
    const ImageF r1 = rd::sv_convolve(i1, basis, rd::ConvMethod::Direct);
    const ImageF r2 = rd::sv_convolve(i2, basis, rd::ConvMethod::Direct);
    for (std::size_t i = 0; i < lhs.size(); ++i)
        CHECK(std::abs(lhs.data[i] - (2.0 * r1.data[i] - 0.5 * r2.data[i])) < 1e-6);
}

TEST_CASE("normalized kernels with partition-of-unity maps bound the output") {
    SeededRng rng(71);
    const ImageF img = oracles::random_image(16, 16, 1, rng);
    // three normalized kernels, maps that sum to one at every pixel
    std::vector<std::vector<double>> kernels, maps(3, std::vector<double>(256));
    for (int i = 0; i < 3; ++i) kernels.push_back(random_kernel(5, rng, true));
    for (std::size_t p = 0; p < 256; ++p) {
        double w0 = rng.uniform(), w1 = rng.uniform(), w2 = rng.uniform();
        const double s = w0 + w1 + w2;
        maps[0][p] = w0 / s;
        maps[1][p] = w1 / s;
        maps[2][p] = w2 / s;
    }
    const auto basis = make_basis(16, 16, 5, kernels, maps);
    const ImageF out = rd::sv_convolve(img, basis, rd::ConvMethod::Direct);
    const double in_max = *std::max_element(img.data.begin(), img.data.end());
    for (double v : out.data) CHECK(v <= in_max + 1e-6);
}

TEST_CASE("brute force: delta input stamps a scaled kernel; zero image stays zero") {
    const int ks = 3;
    std::vector<double> kernel{0.1, 0.2, 0.1, 0.2, 0.3, 0.2, 0.1, 0.2, 0.1};
    std::vector<double> map(64, 0.0);
    map[3 * 8 + 4] = 0.7; // beta at the delta position
    // make beta vary elsewhere to prove only the stamped area matters
    for (std::size_t i = 0; i < map.size(); ++i)
        if (map[i] == 0.0) map[i] = 0.25;
    map[3 * 8 + 4] = 0.7;
    const auto basis = make_basis(8, 8, ks, {kernel}, {map});

    ImageF delta(8, 8, 1);
    delta.at(0, 3, 4) = 1.0;
    const ImageF out = rd::brute_force_sv(delta, basis);
    // out(y,x) = beta(y,x) * kernel(y-3+1, x-4+1) for taps that land
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            const int u = y - 3 + 1, v = x - 4 + 1;
            double expect = 0.0;
            if (u >= 0 && u < ks && v >= 0 && v < ks)
                expect = map[static_cast<std::size_t>(y) * 8 + x] *
                         kernel[static_cast<std::size_t>(u) * ks + v];
            CHECK(out.at(0, y, x) == doctest::Approx(expect).epsilon(1e-12));
        }

    ImageF zero(8, 8, 1);
    const ImageF z = rd::brute_force_sv(zero, basis);
    for (double v : z.data) CHECK(v == 0.0);
}

TEST_CASE("brute force rejects large images") {
    const auto basis =
        make_basis(65, 65, 3, {delta_kernel(3)}, {std::vector<double>(65 * 65, 1.0)});
    ImageF big(65, 65, 1);
    CHECK_THROWS_AS(rd::brute_force_sv(big, basis), std::invalid_argument);
}

TEST_CASE("composite adds, clips and never leaves the range") {
    rd::CompositeRecipe recipe;

    ImageF bg(4, 4, 3, 0.9), zero_flare(4, 4, 3, 0.0), flare(4, 4, 3, 0.5);
    const auto [in0, gt0] = rd::composite(bg, zero_flare, recipe);
    for (std::size_t i = 0; i < in0.size(); ++i) CHECK(in0.data[i] == bg.data[i]);

    const auto [in1, gt1] = rd::composite(bg, flare, recipe);
    for (double v : in1.data) CHECK(v == 1.0);
    for (double v : gt1.data) CHECK(v == doctest::Approx(0.9));

    // determinism under fixed inputs
    const auto [in2, gt2] = rd::composite(bg, flare, recipe);
    CHECK(in2.data == in1.data);
    CHECK(gt2.data == gt1.data);

    ImageF small(2, 2, 3);
    CHECK_THROWS_AS(rd::composite(bg, small, recipe), std::invalid_argument);
}

TEST_CASE("composite can carry the light-source core into the ground truth") {
    rd::CompositeRecipe recipe;
    recipe.include_light_source_in_gt = true;
    recipe.light_source_threshold = 0.5;

    ImageF bg(2, 2, 3, 0.1);
    ImageF flare(2, 2, 3, 0.0);
    for (int c = 0; c < 3; ++c) flare.at(c, 0, 0) = 0.9; // bright source pixel
    const auto [input, gt] = rd::composite(bg, flare, recipe);
    CHECK(gt.at(0, 0, 0) == doctest::Approx(1.0));  // 0.1 + 0.9
    CHECK(gt.at(0, 1, 1) == doctest::Approx(0.1));  // dim pixels excluded
}

TEST_CASE("light_source_core masks by luminance") {
    ImageF flare(2, 2, 3, 0.0);
    for (int c = 0; c < 3; ++c) {
        flare.at(c, 0, 0) = 0.99;
        flare.at(c, 1, 1) = 0.2;
    }

    const ImageF none = rd::light_source_core(flare, 1.0);
    for (double v : none.data) CHECK(v == 0.0);

    const ImageF nearly_all = rd::light_source_core(flare, 1e-9);
    for (std::size_t i = 0; i < flare.size(); ++i) {
        if (flare.data[i] > 0.0) CHECK(nearly_all.data[i] == flare.data[i]);
    }

    // idempotence
    const ImageF once = rd::light_source_core(flare, 0.5);
    const ImageF twice = rd::light_source_core(once, 0.5);
    CHECK(once.data == twice.data);

    CHECK_THROWS_AS(rd::light_source_core(flare, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(rd::light_source_core(flare, 1.5), std::invalid_argument);
}
