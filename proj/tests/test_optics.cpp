#include "flaresim/optics.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace flaresim;
namespace opt = flaresim::optics;
namespace z = flaresim::zernike;

namespace {

double aperture_energy(const opt::ApertureMask& a) {
    double s = 0.0;
    for (double v : a.grid) s += v * v;
    return s;
}

std::pair<double, double> centroid(const opt::Psf& p) {
    double m = 0.0, my = 0.0, mx = 0.0;
    for (int y = 0; y < p.size; ++y)
        for (int x = 0; x < p.size; ++x) {
            const double v = p.kernel[p.idx(y, x)];
            m += v;
            my += v * y;
            mx += v * x;
        }
    return {my / m, mx / m};
}

} // namespace

TEST_CASE("circular aperture is a hard-edged disk") {
    const auto full = opt::circular_aperture(64, 1.0);
    CHECK(full.grid[full.idx(0, 0)] == 0.0);   // corner
    CHECK(full.grid[full.idx(32, 32)] == 1.0); // center

    // 90-degree rotational symmetry, exactly
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            CHECK(full.grid[full.idx(y, x)] == full.grid[full.idx(x, 63 - y)]);

    // degenerate disk keeps only the center pixel of an odd grid
    const auto tiny = opt::circular_aperture(65, 1e-3);
    double sum = 0.0;
    for (double v : tiny.grid) sum += v;
    CHECK(sum == 1.0);
    CHECK(tiny.grid[tiny.idx(32, 32)] == 1.0);

    CHECK_THROWS_AS(opt::circular_aperture(64, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(opt::circular_aperture(64, -0.5), std::invalid_argument);
}

TEST_CASE("pupil combines amplitude and phase") {
    const auto a = opt::circular_aperture(16, 0.8);

    std::vector<double> zero(a.grid.size(), 0.0);
    const auto p0 = opt::pupil(a, zero);
    for (std::size_t i = 0; i < p0.size(); ++i) {
        CHECK(p0.re[i] == a.grid[i]);
        CHECK(p0.im[i] == 0.0);
    }

    std::vector<double> quarter(a.grid.size(), 1.5707963267948966);
    const auto p1 = opt::pupil(a, quarter);
    for (std::size_t i = 0; i < p1.size(); ++i) {
        CHECK(std::abs(p1.re[i]) < 1e-15);
        CHECK(p1.im[i] == doctest::Approx(a.grid[i]).epsilon(1e-12));
    }

    // |P| equals the aperture pointwise
    SeededRng rng(4);
    std::vector<double> phase(a.grid.size());
    for (double& v : phase) v = rng.uniform(-3.0, 3.0);
    const auto p2 = opt::pupil(a, phase);
    for (std::size_t i = 0; i < p2.size(); ++i)
        CHECK(std::abs(std::hypot(p2.re[i], p2.im[i]) - a.grid[i]) < 1e-7);

    std::vector<double> wrong(10, 0.0);
    CHECK_THROWS_AS(opt::pupil(a, wrong), std::invalid_argument);
}

TEST_CASE("single-tap pupil gives a flat unit-sum PSF") {
    ComplexField p(64, 64);
    p.re[p.idx(10, 20)] = 1.0;
    const auto psf = opt::psf_from_pupil(p);
    for (double v : psf.kernel) CHECK(v == doctest::Approx(1.0 / 4096.0).epsilon(1e-9));
    CHECK(psf.sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("clear full aperture peaks at the center tap") {
    const auto a = opt::circular_aperture(64, 0.9);
    std::vector<double> zero(a.grid.size(), 0.0);
    const auto psf = opt::psf_from_pupil(opt::pupil(a, zero));
    const double peak = *std::max_element(psf.kernel.begin(), psf.kernel.end());
    CHECK(psf.kernel[psf.idx(psf.center_row, psf.center_col)] == doctest::Approx(peak));
    CHECK(psf.center_row == 32);
    for (double v : psf.kernel) CHECK(v >= 0.0);
}

TEST_CASE("psf energy equals pupil energy (Parseval) for random pupils") {
    SeededRng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        ComplexField p(64, 64);
        for (std::size_t i = 0; i < p.size(); ++i) {
            p.re[i] = rng.uniform(-1.0, 1.0);
            p.im[i] = rng.uniform(-1.0, 1.0);
        }
        double energy = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) energy += p.re[i] * p.re[i] + p.im[i] * p.im[i];
        const auto psf = opt::psf_from_pupil(p);
        CHECK(std::abs(psf.sum() - energy) / energy < 1e-6);
    }
}

TEST_CASE("adding an integer linear phase ramp circularly shifts the PSF") {
    const int n = 32;
    SeededRng rng(6);
    ComplexField p(n, n);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p.re[i] = rng.uniform(-1.0, 1.0);
        p.im[i] = rng.uniform(-1.0, 1.0);
    }
    const int a = 3, b = 5;
    ComplexField ramped(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double ang = 2.0 * M_PI * (a * y + b * x) / n;
            const std::size_t i = p.idx(y, x);
            // multiply by exp(+j*ang); with the e^{-j} forward kernel this
            // moves the spectrum by +(a, b)
            ramped.re[i] = p.re[i] * std::cos(ang) - p.im[i] * std::sin(ang);
            ramped.im[i] = p.re[i] * std::sin(ang) + p.im[i] * std::cos(ang);
        }
    const auto psf0 = opt::psf_from_pupil(p);
    const auto psf1 = opt::psf_from_pupil(ramped);
    double max_err = 0.0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            max_err = std::max(max_err, std::abs(psf1.kernel[psf1.idx((y + a) % n, (x + b) % n)] -
                                                 psf0.kernel[psf0.idx(y, x)]));
    CHECK(max_err < 1e-6);
}

TEST_CASE("normalize_psf") {
    opt::Psf uniform;
    uniform.size = 4;
    uniform.kernel.assign(16, 3.0);
    const auto n = opt::normalize_psf(uniform);
    for (double v : n.kernel) CHECK(v == doctest::Approx(1.0 / 16.0).epsilon(1e-12));

    const auto again = opt::normalize_psf(n);
    for (std::size_t i = 0; i < n.kernel.size(); ++i)
        CHECK(std::abs(again.kernel[i] - n.kernel[i]) < 1e-12);

    opt::Psf zero;
    zero.size = 2;
    zero.kernel.assign(4, 0.0);
    CHECK_THROWS_AS(opt::normalize_psf(zero), std::invalid_argument);
}

TEST_CASE("psf grid: zero coefficients give identical anchors") {
    const auto aperture = opt::circular_aperture(32, 0.9);
    const auto basis = z::build_basis(32, 6);
    const auto anchors = z::uniform_anchors(2, 3, 64, 64);

    z::TurbulenceConfig cfg;
    cfg.n_modes = 6;
    cfg.base_sigma = 0.0;
    SeededRng rng(1);
    const auto field = z::sample_coeff_field(rng, cfg, anchors);
    const auto grid = opt::build_psf_grid(aperture, basis, field, 17);

    CHECK(grid.psfs.size() == 6);
    for (const auto& psf : grid.psfs) {
        CHECK(psf.size == 17);
        CHECK(psf.sum() == doctest::Approx(1.0).epsilon(1e-9));
        for (std::size_t t = 0; t < psf.kernel.size(); ++t)
            CHECK(psf.kernel[t] == grid.psfs[0].kernel[t]);
    }
}

TEST_CASE("pure tilt displaces the PSF centroid monotonically") {
    const auto aperture = opt::circular_aperture(64, 0.6);
    const auto basis = z::build_basis(64, 4);
    const auto anchors = z::uniform_anchors(1, 1, 32, 32);

    double last = 0.0;
    for (const double amp : {0.5, 1.0, 1.5}) {
        z::CoeffField field;
        field.anchors = anchors;
        z::ZernikeCoeffs c;
        c.a = {0.0, amp, 0.0, 0.0}; // mode 2: x tilt
        field.coeffs = {c};
        const auto grid = opt::build_psf_grid(aperture, basis, field, 33);
        const auto [cy, cx] = centroid(grid.psfs[0]);
        const double disp = std::hypot(cy - grid.psfs[0].center_row, cx - grid.psfs[0].center_col);
        CHECK(disp > last);
        last = disp;
    }
    CHECK(last > 0.5); // the largest tilt moved the centroid visibly
}

TEST_CASE("rank-1 grid reconstructs exactly with a single basis kernel") {
    const auto aperture = opt::circular_aperture(32, 0.9);
    const auto basis = z::build_basis(32, 4);
    const auto anchors = z::uniform_anchors(2, 2, 40, 40);
    z::TurbulenceConfig cfg;
    cfg.n_modes = 4;
    cfg.base_sigma = 0.0;
    SeededRng rng(5);
    const auto field = z::sample_coeff_field(rng, cfg, anchors);
    const auto grid = opt::build_psf_grid(aperture, basis, field, 15);

    const auto psf_basis = opt::decompose_basis(grid, 1, 40, 40);
    CHECK(opt::reconstruction_residual(grid, psf_basis) < 1e-10);
}

TEST_CASE("full-rank decomposition reconstructs anchors and residual is monotone in K") {
    const auto aperture = opt::circular_aperture(32, 0.8);
    const auto basis = z::build_basis(32, 8);
    const auto anchors = z::uniform_anchors(2, 2, 48, 48);
    z::TurbulenceConfig cfg;
    cfg.n_modes = 8;
    cfg.base_sigma = 1.2;
    SeededRng rng(77);
    const auto field = z::sample_coeff_field(rng, cfg, anchors);
    const auto grid = opt::build_psf_grid(aperture, basis, field, 15);

    double prev = 1e300;
    for (int k = 1; k <= 4; ++k) {
        const double res = opt::reconstruction_residual(grid, opt::decompose_basis(grid, k, 48, 48));
        CHECK(res <= prev + 1e-12);
        prev = res;
    }
    CHECK(opt::reconstruction_residual(grid, opt::decompose_basis(grid, 4, 48, 48)) < 1e-6);

    CHECK_THROWS_AS(opt::decompose_basis(grid, 0, 48, 48), std::invalid_argument);
    CHECK_THROWS_AS(opt::decompose_basis(grid, 5, 48, 48), std::invalid_argument);
}

TEST_CASE("coefficient maps interpolate anchor projections bilinearly") {
    const auto aperture = opt::circular_aperture(32, 0.8);
    const auto basis = z::build_basis(32, 6);
    const auto anchors = z::uniform_anchors(3, 3, 33, 33);
    z::TurbulenceConfig cfg;
    cfg.n_modes = 6;
    cfg.base_sigma = 0.8;
    SeededRng rng(8);
    const auto field = z::sample_coeff_field(rng, cfg, anchors);
    const auto grid = opt::build_psf_grid(aperture, basis, field, 11);
    const auto pb = opt::decompose_basis(grid, 2, 33, 33);

    // midpoint between the first two anchors of the top row
    const double at_mid = pb.coeff_maps[0][pb.midx(0, 8)];
    const double a0 = pb.coeff_maps[0][pb.midx(0, 0)];
    const double a1 = pb.coeff_maps[0][pb.midx(0, 16)];
    CHECK(at_mid == doctest::Approx(0.5 * (a0 + a1)).epsilon(1e-9));
}

TEST_CASE("effective kernel sizes are at least one and grow with blur") {
    const auto aperture = opt::circular_aperture(64, 0.9);
    const auto basis = z::build_basis(64, 8);
    const auto anchors = z::uniform_anchors(1, 1, 16, 16);

    z::CoeffField sharp;
    sharp.anchors = anchors;
    z::ZernikeCoeffs c0;
    c0.a.assign(8, 0.0);
    sharp.coeffs = {c0};
    const auto grid_sharp = opt::build_psf_grid(aperture, basis, sharp, 33);

    z::CoeffField blurred = sharp;
    blurred.coeffs[0].a[3] = 3.0; // strong defocus spreads the PSF
    const auto grid_blur = opt::build_psf_grid(aperture, basis, blurred, 33);

    const auto s0 = opt::effective_kernel_sizes(grid_sharp);
    const auto s1 = opt::effective_kernel_sizes(grid_blur);
    CHECK(s0[0] >= 1.0);
    CHECK(s1[0] > s0[0]);
}
