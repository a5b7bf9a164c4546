#include "flaresim/zernike.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace flaresim;
namespace z = flaresim::zernike;

TEST_CASE("noll_to_nm matches the enumeration oracle for the first 36 modes") {
    const auto expected = oracles::noll_sequence(36);
    for (int j = 1; j <= 36; ++j) {
        const auto [n, m] = z::noll_to_nm(j);
        CHECK(n == expected[static_cast<std::size_t>(j - 1)].first);
        CHECK(m == expected[static_cast<std::size_t>(j - 1)].second);
        CHECK(n >= std::abs(m));
        CHECK((n - std::abs(m)) % 2 == 0);
    }
    // landmark modes
    CHECK(z::noll_to_nm(1) == std::pair{0, 0});
    CHECK(z::noll_to_nm(2) == std::pair{1, 1});
    CHECK(z::noll_to_nm(3) == std::pair{1, -1});
    CHECK(z::noll_to_nm(4) == std::pair{2, 0});
    CHECK(z::noll_to_nm(11) == std::pair{4, 0});
    CHECK_THROWS_AS(z::noll_to_nm(0), std::invalid_argument);
}

TEST_CASE("defocus evaluates to the analytic sqrt(3)(2rho^2-1)") {
    CHECK(z::eval(4, 1.0, 0.3) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-9));
    CHECK(std::abs(z::eval(4, 1.0 / std::sqrt(2.0), 1.7)) < 1e-6);
    CHECK(z::eval(4, 0.0, 0.0) == doctest::Approx(-std::sqrt(3.0)).epsilon(1e-9));
}

TEST_CASE("piston is one inside the disk and zero outside") {
    const auto basis = z::build_basis(32, 1);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            const auto i = basis.idx(y, x);
            if (basis.disk_mask[i])
                CHECK(basis.values[0][i] == doctest::Approx(1.0));
            else
                CHECK(basis.values[0][i] == 0.0);
        }
    // corners are outside the inscribed disk
    CHECK(basis.disk_mask[basis.idx(0, 0)] == 0);
    CHECK(basis.disk_mask[basis.idx(16, 16)] == 1);
}

TEST_CASE("first 15 modes are numerically orthonormal under disk quadrature at grid 256") {
    const auto basis = z::build_basis(256, 15);
    std::size_t inside = 0;
    for (auto m : basis.disk_mask) inside += m;

    for (int i = 0; i < 15; ++i) {
        for (int j = i; j < 15; ++j) {
            double dot = 0.0;
            for (std::size_t t = 0; t < basis.disk_mask.size(); ++t)
                if (basis.disk_mask[t]) dot += basis.values[static_cast<std::size_t>(i)][t] *
                                               basis.values[static_cast<std::size_t>(j)][t];
            dot /= static_cast<double>(inside);
            if (i == j)
                CHECK(std::abs(dot - 1.0) < 2e-2); // Noll modes have unit RMS
            else
                CHECK(std::abs(dot) < 1e-2);
        }
    }
}

TEST_CASE("m=0 modes are rotationally invariant") {
    SeededRng rng(11);
    for (const int j : {1, 4, 11}) {
        double max_diff = 0.0;
        for (int t = 0; t < 200; ++t) {
            const double rho = rng.uniform();
            const double theta = rng.uniform(0.0, 6.2831853);
            const double delta = rng.uniform(0.0, 6.2831853);
            max_diff = std::max(max_diff, std::abs(z::eval(j, rho, theta + delta) - z::eval(j, rho, theta)));
        }
        CHECK(max_diff < 1e-6);
    }
}

TEST_CASE("phase_map is the weighted mode sum and is linear") {
    const auto basis = z::build_basis(32, 6);

    z::ZernikeCoeffs zero;
    zero.a.assign(6, 0.0);
    for (double v : z::phase_map(basis, zero)) CHECK(v == 0.0);

    z::ZernikeCoeffs only4 = zero;
    only4.a[3] = 2.0;
    const auto single = z::phase_map(basis, only4);
    for (std::size_t i = 0; i < single.size(); ++i)
        CHECK(single[i] == doctest::Approx(2.0 * basis.values[3][i]).epsilon(1e-12));

    SeededRng rng(2);
    z::ZernikeCoeffs a, b, sum;
    for (int i = 0; i < 6; ++i) {
        a.a.push_back(rng.uniform(-1.0, 1.0));
        b.a.push_back(rng.uniform(-1.0, 1.0));
        sum.a.push_back(a.a.back() + b.a.back());
    }
    const auto pa = z::phase_map(basis, a), pb = z::phase_map(basis, b), ps = z::phase_map(basis, sum);
    for (std::size_t i = 0; i < ps.size(); ++i)
        CHECK(std::abs(ps[i] - (pa[i] + pb[i])) < 1e-6);

    z::ZernikeCoeffs wrong;
    wrong.a.assign(5, 0.0);
    CHECK_THROWS_AS(z::phase_map(basis, wrong), std::invalid_argument);
}

TEST_CASE("uniform anchors cover the image corners") {
    const auto grid = z::uniform_anchors(3, 3, 101, 201);
    CHECK(grid.count() == 9);
    CHECK(grid.at(0, 0).x == 0.0);
    CHECK(grid.at(0, 0).y == 0.0);
    CHECK(grid.at(2, 2).x == 200.0);
    CHECK(grid.at(2, 2).y == 100.0);
    CHECK(grid.at(1, 1).x == doctest::Approx(100.0));
    const auto single = z::uniform_anchors(1, 1, 11, 11);
    CHECK(single.at(0, 0).x == doctest::Approx(5.0));
}

TEST_CASE("sample_coeff_field: zero sigma, determinism, piston skip") {
    const auto anchors = z::uniform_anchors(2, 2, 64, 64);
    z::TurbulenceConfig cfg;
    cfg.n_modes = 8;

    cfg.base_sigma = 0.0;
    SeededRng rng(9);
    for (const auto& c : z::sample_coeff_field(rng, cfg, anchors).coeffs)
        for (double v : c.a) CHECK(v == 0.0);

    cfg.base_sigma = 1.0;
    SeededRng r1(555), r2(555);
    const auto f1 = z::sample_coeff_field(r1, cfg, anchors);
    const auto f2 = z::sample_coeff_field(r2, cfg, anchors);
    for (std::size_t a = 0; a < f1.coeffs.size(); ++a)
        for (std::size_t j = 0; j < f1.coeffs[a].a.size(); ++j)
            CHECK(f1.coeffs[a].a[j] == f2.coeffs[a].a[j]);

    cfg.skip_piston = true;
    SeededRng r3(1);
    for (const auto& c : z::sample_coeff_field(r3, cfg, anchors).coeffs) CHECK(c.a[0] == 0.0);
}

TEST_CASE("mode-2 coefficients match the configured power-law std within 3%") {
    z::TurbulenceConfig cfg;
    cfg.n_modes = 3;
    cfg.base_sigma = 1.0;
    cfg.decay_alpha = 1.5;
    cfg.skip_piston = false;
    const auto anchors = z::uniform_anchors(100, 100, 512, 512); // 10k draws of each mode
    SeededRng rng(2024);
    const auto field = z::sample_coeff_field(rng, cfg, anchors);

    double sum = 0.0, sum2 = 0.0;
    for (const auto& c : field.coeffs) {
        sum += c.a[1];
        sum2 += c.a[1] * c.a[1];
    }
    const double n = static_cast<double>(field.coeffs.size());
    const double stddev = std::sqrt(sum2 / n - (sum / n) * (sum / n));
    const double expected = std::pow(2.0, -1.5);
    CHECK(std::abs(stddev - expected) / expected < 0.03);
}
